#ifndef RELINK_ASSEMBLER_HPP
#define RELINK_ASSEMBLER_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/classifier.hpp"
#include "relink/explainer.hpp"
#include "relink/kg_store.hpp"
#include "relink/meta_pattern.hpp"
#include "relink/phrase_linker.hpp"
#include "relink/text.hpp"

namespace relink {

enum class ValidationMode { strict, permissive };

inline ValidationMode parse_validation_mode(std::string_view s) {
  if (s == "strict") return ValidationMode::strict;
  if (s == "permissive") return ValidationMode::permissive;
  throw std::invalid_argument("validation mode must be strict or permissive, got '" +
                              std::string(s) + "'");
}

struct LinkConfig {
  int max_depth = 3;
  ValidationMode validation = ValidationMode::strict;
  // Try the shapes the classifier did not pick when its shape has no instance.
  bool data_driven_fallback = true;
  std::vector<MetaPattern> fallback_order = {MetaPattern::RP2, MetaPattern::RP3, MetaPattern::RP4};
  std::size_t max_nested_ngram = 3;

  void validate() const {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be at least 1");
    for (auto mp : fallback_order) {
      if (mp == MetaPattern::RP1) throw std::invalid_argument("RP1 cannot be a fallback shape");
    }
  }
};

using Trace = std::vector<nlohmann::json>;

struct LinkResult {
  std::string phrase;
  std::optional<SubgraphPattern> pattern;
  Trace trace;
  int depth = 0;
  bool validation_waived = false;

  bool matched() const { return pattern.has_value(); }
};

inline nlohmann::json to_json(const LinkResult& r) {
  nlohmann::json j;
  j["phrase"] = r.phrase;
  j["pattern"] = r.pattern ? to_json(*r.pattern) : nlohmann::json(nullptr);
  j["shape"] = r.pattern ? nlohmann::json(shape_name(*r.pattern)) : nlohmann::json(nullptr);
  j["trace"] = r.trace;
  j["depth"] = r.depth;
  if (r.validation_waived) j["validation_waived"] = true;
  return j;
}

inline const std::string kPseudoBase = "urn:relink:pseudo/";

inline Iri pseudo_relation(std::string_view name) {
  std::string slug;
  for (unsigned char c : name) {
    slug.push_back(std::isalnum(c) || c == '-' ? static_cast<char>(std::tolower(c)) : '_');
  }
  if (slug.empty()) slug = "_";
  return Iri(kPseudoBase + slug);
}

inline bool is_pseudo(const Iri& r) { return r.str().starts_with(kPseudoBase); }

namespace detail {

// One edge slot during assembly: a graph relation ({x r y}) or a nested or
// folded sub-pattern whose designated endpoints are x and y.
struct Unit {
  Span span;
  Iri relation;              // graph relation, or a pseudo relation
  SubgraphPattern pattern;   // uses x and y as source and sink
  std::set<std::string> pending;  // variables whose type came from this sentence
};

inline Unit unit_of(const RelationMention& m) {
  Unit u{m.span, m.relation, {}, {}};
  u.pattern.edges = {{"x", m.relation, "y"}};
  return u;
}

// Renames to x (source), y (sink), z, z2, ... and reports the mapping.
inline SubgraphPattern rename_canonical(const SubgraphPattern& sp, const std::string& source,
                                        const std::string& sink,
                                        std::map<std::string, std::string>* names) {
  std::map<std::string, std::string> m;
  m[source] = "x";
  if (sink != source) m[sink] = "y";
  int next = 0;
  auto name = [&](const std::string& v) {
    auto it = m.find(v);
    if (it != m.end()) return it->second;
    std::string n = next == 0 ? "z" : "z" + std::to_string(next + 1);
    ++next;
    m.emplace(v, n);
    return n;
  };
  SubgraphPattern out;
  for (const auto& e : sp.edges) {
    auto s = name(e.src);
    auto d = name(e.dst);
    out.edges.push_back({s, e.relation, d});
  }
  for (const auto& [v, t] : sp.types) out.types.emplace(name(v), t);
  if (names) *names = std::move(m);
  return out;
}

// Places the two units on the edges of `mp` (first unit on the first edge).
// Inner variables get fresh names; the result is renamed canonically.
inline Unit splice(MetaPattern mp, const Unit& first, const Unit& second) {
  auto tmpl = instantiate(mp, {first.relation, second.relation});
  SubgraphPattern out;
  std::set<std::string> pending;
  int fresh = 0;
  const Unit* units[2] = {&first, &second};
  for (int i = 0; i < 2; ++i) {
    const auto& edge = tmpl.edges[i];
    const Unit& u = *units[i];
    std::map<std::string, std::string> rn{{"x", edge.src}, {"y", edge.dst}};
    auto map = [&](const std::string& v) {
      auto it = rn.find(v);
      if (it != rn.end()) return it->second;
      auto n = "_" + std::to_string(++fresh);
      rn.emplace(v, n);
      return n;
    };
    for (const auto& e : u.pattern.edges) out.edges.push_back({map(e.src), e.relation, map(e.dst)});
    for (const auto& [v, t] : u.pattern.types) out.types.emplace(map(v), t);
    for (const auto& v : u.pending) pending.insert(map(v));
  }
  std::map<std::string, std::string> names;
  Unit r;
  r.span = {std::min(first.span.begin, second.span.begin), std::max(first.span.end, second.span.end)};
  r.pattern = rename_canonical(out, "x", "y", &names);
  for (const auto& v : pending) r.pending.insert(names.at(v));
  return r;
}

inline SubgraphPattern without(const SubgraphPattern& sp, const std::set<std::string>& vars) {
  SubgraphPattern out = sp;
  for (const auto& v : vars) out.types.erase(v);
  return out;
}

inline nlohmann::json edges_json(const SubgraphPattern& sp) { return to_json(sp)["edges"]; }

}  // namespace detail

// Baseline: assemble the mentioned relations by retrieving instances of every
// 2-edge shape, first with any instance wins (RP2, RP2 swapped, RP3, RP4).
// Ignores the classifier and type mentions. Needs at least two relations.
inline std::optional<SubgraphPattern> link_data_driven(const MetaElements& elems,
                                                       const KnowledgeGraph& g,
                                                       Trace* trace = nullptr) {
  if (elems.relations.size() < 2) {
    if (trace) trace->push_back({{"step", "no-match"}, {"reason", "fewer than two relations"}});
    return std::nullopt;
  }
  static const std::pair<MetaPattern, bool> kOrder[] = {{MetaPattern::RP2, false},
                                                        {MetaPattern::RP2, true},
                                                        {MetaPattern::RP3, false},
                                                        {MetaPattern::RP4, false}};
  detail::Unit cur = detail::unit_of(elems.relations[0]);
  for (std::size_t k = 1; k < elems.relations.size(); ++k) {
    detail::Unit next = detail::unit_of(elems.relations[k]);
    std::optional<detail::Unit> chosen;
    for (auto [mp, swapped] : kOrder) {
      auto cand = swapped ? detail::splice(mp, next, cur) : detail::splice(mp, cur, next);
      std::size_t n = count_instances(g, cand.pattern);
      if (trace) {
        trace->push_back({{"step", "retrieve"},
                          {"shape", pattern_name(mp)},
                          {"swapped", swapped},
                          {"edges", detail::edges_json(cand.pattern)},
                          {"instances", n}});
      }
      if (n > 0 && !chosen) chosen = std::move(cand);
    }
    if (!chosen) {
      if (trace) trace->push_back({{"step", "no-match"}, {"reason", "no shape has an instance"}});
      return std::nullopt;
    }
    chosen->relation = pseudo_relation("fold" + std::to_string(k));
    cur = std::move(*chosen);
  }
  return cur.pattern;
}

// Recursive compound phrase linking.
class Assembler {
 public:
  Assembler(const KnowledgeGraph& g, Explainer& ex, const PhraseLinker& pl,
            const PatternClassifier& clf, LinkConfig cfg = {})
      : g_(g), ex_(ex), pl_(pl), clf_(clf), cfg_(std::move(cfg)) {
    cfg_.validate();
  }

  const LinkConfig& config() const { return cfg_; }

  LinkResult link(std::string_view phrase) const {
    LinkResult r;
    r.phrase = normalize_phrase(phrase);
    if (r.phrase.empty()) throw std::invalid_argument("link: empty phrase");

    if (auto dm = pl_.direct_match(r.phrase);
        dm && dm->category == DirectMatch::Category::relation) {
      r.trace.push_back({{"step", "direct-match"}, {"relation", dm->iri.bracketed()}});
      r.pattern = instantiate(MetaPattern::RP1, {dm->iri});
      return r;
    }
    Run run(r.trace);
    run.guard.insert(r.phrase);
    auto expl = ex_.explain(r.phrase);
    if (!expl) {
      r.trace.push_back({{"step", "explanation-miss"}, {"phrase", r.phrase}});
      return r;
    }
    r.trace.push_back({{"step", "explanation"},
                       {"phrase", r.phrase},
                       {"sentence", expl->sentence},
                       {"source", expl->source},
                       {"depth", 1}});
    auto unit = link_sentence_impl(expl->sentence, 1, run);
    finish(r, unit, run);
    return r;
  }

  // Links a bare explanation sentence (no dictionary step for the top level).
  LinkResult link_sentence(std::string_view sentence) const {
    LinkResult r;
    r.phrase = std::string(sentence);
    Run run(r.trace);
    auto unit = link_sentence_impl(sentence, 1, run);
    finish(r, unit, run);
    return r;
  }

  // Pairwise core: two relations, one classified shape, then the swapped
  // order, then (optionally) the other shapes.
  std::optional<SubgraphPattern> assemble_with_pattern(const MetaElements& elems, MetaPattern mp,
                                                       Trace* trace = nullptr) const {
    if (elems.relations.size() != 2) {
      throw std::invalid_argument("assemble_with_pattern needs exactly two relations");
    }
    Trace local;
    Run run(trace ? *trace : local);
    std::vector<detail::Unit> units = {detail::unit_of(elems.relations[0]),
                                       detail::unit_of(elems.relations[1])};
    attach_types(units, elems.types);
    auto u = combine(units[0], units[1], mp, run);
    if (!u) return std::nullopt;
    return finalize_types(*u, run);
  }

  std::vector<std::pair<MetaPattern, bool>> candidate_order(MetaPattern predicted) const {
    std::vector<std::pair<MetaPattern, bool>> out;
    auto add = [&](MetaPattern mp, bool swapped) {
      if (std::find(out.begin(), out.end(), std::pair{mp, swapped}) == out.end()) {
        out.emplace_back(mp, swapped);
      }
    };
    add(predicted, false);
    if (predicted == MetaPattern::RP2) add(MetaPattern::RP2, true);
    if (cfg_.data_driven_fallback) {
      for (auto mp : cfg_.fallback_order) {
        add(mp, false);
        if (mp == MetaPattern::RP2) add(mp, true);
      }
    }
    return out;
  }

 private:
  struct Run {
    explicit Run(Trace& t) : trace(t) {}
    Trace& trace;
    std::set<std::string> guard;
    int max_depth = 0;
    bool waived = false;
    int folds = 0;
  };

  bool valid(const SubgraphPattern& sp) const {
    return cfg_.validation == ValidationMode::permissive || has_instance(g_, sp);
  }

  void finish(LinkResult& r, const std::optional<detail::Unit>& unit, Run& run) const {
    r.depth = run.max_depth;
    r.validation_waived = run.waived;
    if (unit) {
      r.pattern = finalize_types(*unit, run);
      r.trace.push_back({{"step", "result"},
                         {"shape", shape_name(*r.pattern)},
                         {"edges", detail::edges_json(*r.pattern)}});
    }
  }

  // Adds this sentence's type restrictions one at a time, keeping those the
  // pattern can satisfy.
  SubgraphPattern finalize_types(const detail::Unit& u, Run& run) const {
    SubgraphPattern sp = detail::without(u.pattern, u.pending);
    for (const auto& v : u.pending) {
      auto it = u.pattern.types.find(v);
      if (it == u.pattern.types.end()) continue;
      SubgraphPattern typed = sp;
      typed.types[v] = it->second;
      if (valid(typed)) {
        sp = std::move(typed);
      } else {
        run.trace.push_back({{"step", "type-dropped"},
                             {"variable", v},
                             {"type", it->second.bracketed()},
                             {"reason", "no instance with this restriction"}});
      }
    }
    return sp;
  }

  // A type restricts the source variable of the nearest relation mention;
  // on equal distance the later mention wins.
  static void attach_types(std::vector<detail::Unit>& units, const std::vector<TypeMention>& types) {
    if (units.empty()) return;
    for (const auto& t : types) {
      std::size_t best = 0;
      std::size_t best_gap = static_cast<std::size_t>(-1);
      for (std::size_t i = 0; i < units.size(); ++i) {
        const auto& s = units[i].span;
        std::size_t gap = s.end <= t.span.begin ? t.span.begin - s.end
                          : t.span.end <= s.begin ? s.begin - t.span.end
                                                  : 0;
        if (gap <= best_gap) {
          best = i;
          best_gap = gap;
        }
      }
      auto& u = units[best];
      if (!u.pattern.types.count("x")) {
        u.pattern.types["x"] = t.type;
        u.pending.insert("x");
      }
    }
  }

  std::optional<detail::Unit> combine(const detail::Unit& a, const detail::Unit& b,
                                      MetaPattern predicted, Run& run) const {
    for (auto [mp, swapped] : candidate_order(predicted)) {
      auto cand = swapped ? detail::splice(mp, b, a) : detail::splice(mp, a, b);
      SubgraphPattern bare = detail::without(cand.pattern, cand.pending);
      bool ok = valid(bare);
      run.trace.push_back({{"step", "candidate"},
                           {"shape", pattern_name(mp)},
                           {"swapped", swapped},
                           {"edges", detail::edges_json(bare)},
                           {"accepted", ok},
                           {"reason", ok ? (cfg_.validation == ValidationMode::strict
                                                ? "has instance"
                                                : "validation waived")
                                         : "no instance"}});
      if (ok) {
        if (cfg_.validation == ValidationMode::permissive) run.waived = true;
        return cand;
      }
    }
    return std::nullopt;
  }

  std::optional<detail::Unit> link_nested(const std::string& phrase, const std::string& sentence,
                                          int depth, Run& run) const {
    run.guard.insert(phrase);
    run.trace.push_back({{"step", "nested-explanation"},
                         {"phrase", phrase},
                         {"sentence", sentence},
                         {"depth", depth}});
    auto u = link_sentence_impl(sentence, depth, run);
    run.guard.erase(phrase);
    if (!u) return std::nullopt;
    detail::Unit out;
    out.pattern = finalize_types(*u, run);
    return out;
  }

  std::optional<detail::Unit> link_sentence_impl(std::string_view text, int depth, Run& run) const {
    run.max_depth = std::max(run.max_depth, depth);
    Sentence s = tokenize_sentence(text);
    MetaElements elems = pl_.detect(s);

    nlohmann::json types = nlohmann::json::array(), rels = nlohmann::json::array();
    for (const auto& t : elems.types) {
      types.push_back({{"span", {t.span.begin, t.span.end}}, {"type", t.type.bracketed()}});
    }
    for (const auto& m : elems.relations) {
      rels.push_back({{"span", {m.span.begin, m.span.end}},
                      {"relation", m.relation.bracketed()},
                      {"score", m.score}});
    }
    run.trace.push_back({{"step", "elements"}, {"depth", depth}, {"types", types}, {"relations", rels}});

    std::vector<detail::Unit> units;
    for (const auto& m : elems.relations) units.push_back(detail::unit_of(m));

    // Nested compound phrases among the words nothing else claimed.
    std::vector<bool> claimed(s.size(), false);
    auto claim = [&](Span sp) { std::fill(claimed.begin() + sp.begin, claimed.begin() + sp.end, true); };
    for (const auto& t : elems.types) claim(t.span);
    for (const auto& m : elems.relations) claim(m.span);
    bool limit_noted = false;
    for (std::size_t n = std::min(cfg_.max_nested_ngram, s.size()); n >= 1; --n) {
      for (std::size_t i = 0; i + n <= s.size(); ++i) {
        Span sp{i, i + n};
        if (std::any_of(claimed.begin() + i, claimed.begin() + i + n, [](bool b) { return b; })) continue;
        if (pl_.stopwords().contains(s[i].text) || pl_.stopwords().contains(s[i + n - 1].text)) continue;
        std::vector<std::string> words;
        for (std::size_t k = i; k < i + n; ++k) words.push_back(s[k].text);
        std::string phrase = normalize_phrase(join(words, " "));
        if (run.guard.count(phrase)) {
          run.trace.push_back({{"step", "cycle"}, {"phrase", phrase}});
          continue;
        }
        auto expl = ex_.explain(phrase);
        if (!expl) continue;
        if (depth + 1 > cfg_.max_depth) {
          if (!limit_noted) {
            run.trace.push_back({{"step", "recursion-limit"}, {"phrase", phrase}, {"depth", depth + 1}});
            limit_noted = true;
          }
          continue;
        }
        auto nested = link_nested(phrase, expl->sentence, depth + 1, run);
        if (!nested) continue;
        const auto& np = nested->pattern;
        auto vars = np.variables();
        if (!vars.count("x") || !vars.count("y")) {
          run.trace.push_back({{"step", "unspliceable"}, {"phrase", phrase}});
          return std::nullopt;
        }
        nested->span = sp;
        nested->relation = pseudo_relation(phrase);
        run.trace.push_back({{"step", "nested"},
                             {"phrase", phrase},
                             {"span", {sp.begin, sp.end}},
                             {"pseudo_relation", nested->relation.bracketed()},
                             {"edges", detail::edges_json(np)}});
        units.push_back(std::move(*nested));
        claim(sp);
      }
    }
    std::sort(units.begin(), units.end(),
              [](const detail::Unit& a, const detail::Unit& b) { return a.span < b.span; });
    attach_types(units, elems.types);

    if (units.empty()) {
      run.trace.push_back({{"step", "no-match"}, {"reason", "no relation mentions"}, {"depth", depth}});
      return std::nullopt;
    }
    if (units.size() == 1) {
      auto bare = detail::without(units[0].pattern, units[0].pending);
      bool ok = valid(bare);
      run.trace.push_back({{"step", "single-relation"},
                           {"edges", detail::edges_json(bare)},
                           {"accepted", ok}});
      if (!ok) {
        run.trace.push_back({{"step", "no-match"}, {"reason", "no instance"}, {"depth", depth}});
        return std::nullopt;
      }
      if (cfg_.validation == ValidationMode::permissive) run.waived = true;
      return units[0];
    }

    // Left fold: combine the first two, re-mask with the result standing in
    // for both, repeat.
    while (units.size() >= 2) {
      MetaElements shown;
      for (const auto& u : units) shown.relations.push_back({u.span, u.relation, 1.0});
      MaskedSentence ms = mask(s, shown);
      auto pred = clf_.predict(ms);
      run.trace.push_back({{"step", "classify"},
                           {"masked", ms.text()},
                           {"pattern", pattern_name(pred.pattern)},
                           {"confidence", pred.confidence}});
      auto combined = combine(units[0], units[1], pred.pattern, run);
      if (!combined) {
        run.trace.push_back({{"step", "no-match"}, {"reason", "no candidate has an instance"}, {"depth", depth}});
        return std::nullopt;
      }
      units.erase(units.begin(), units.begin() + 2);
      if (!units.empty()) {
        combined->relation = pseudo_relation("fold" + std::to_string(++run.folds));
        run.trace.push_back({{"step", "fold"},
                             {"pseudo_relation", combined->relation.bracketed()},
                             {"edges", detail::edges_json(combined->pattern)}});
      }
      units.insert(units.begin(), std::move(*combined));
      if (units.size() == 1) break;
    }
    return units[0];
  }

  const KnowledgeGraph& g_;
  Explainer& ex_;
  const PhraseLinker& pl_;
  const PatternClassifier& clf_;
  LinkConfig cfg_;
};

}  // namespace relink

#endif  // RELINK_ASSEMBLER_HPP
