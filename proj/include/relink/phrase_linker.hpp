#ifndef RELINK_PHRASE_LINKER_HPP
#define RELINK_PHRASE_LINKER_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/iri.hpp"
#include "relink/kg_store.hpp"
#include "relink/text.hpp"

namespace relink {

// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool overlaps(const Span& o) const { return begin < o.end && o.begin < end; }
  friend auto operator<=>(const Span&, const Span&) = default;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TypeMention {
  Span span;
  Iri type;
  friend bool operator==(const TypeMention&, const TypeMention&) = default;
};

struct RelationMention {
  Span span;
  Iri relation;
  double score = 0.0;
  std::string mask_token() const { return "*" + std::string(relation.local()); }
  friend bool operator==(const RelationMention&, const RelationMention&) = default;
};

struct MetaElements {
  std::vector<TypeMention> types;          // by position
  std::vector<RelationMention> relations;  // by position
};

struct ScoredRelation {
  Iri relation;
  double score = 0.0;
};

// Crude plural folding used for every token comparison: "parents" -> "parent".
inline std::string fold_plural(const std::string& t) {
  if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') {
    return t.substr(0, t.size() - 1);
  }
  return t;
}

inline std::vector<std::string> fold_plurals(std::vector<std::string> ts) {
  for (auto& t : ts) t = fold_plural(t);
  return ts;
}

// Surface token sequence -> relations. Keys are folded the same way mention
// tokens are.
class Lexicon {
 public:
  Lexicon() = default;

  void add(const std::string& surface, const Iri& relation) {
    auto key = fold_plurals(word_tokens(normalize_phrase(surface)));
    if (key.empty()) throw std::invalid_argument("lexicon: empty surface form");
    entries_[key].insert(relation);
    max_len_ = std::max(max_len_, key.size());
  }

  // JSON object {"married to": ["<iri>", ...]}. Entries whose relation is not
  // a predicate of `g` are dropped and reported in `warnings`.
  static Lexicon from_json(const nlohmann::json& j, const KnowledgeGraph* g = nullptr,
                           std::vector<std::string>* warnings = nullptr) {
    if (!j.is_object()) throw std::invalid_argument("lexicon must be a JSON object");
    Lexicon lex;
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::vector<std::string> targets;
      if (it.value().is_string()) {
        targets.push_back(it.value().get<std::string>());
      } else {
        targets = it.value().get<std::vector<std::string>>();
      }
      for (const auto& t : targets) {
        Iri rel = parse_iri_token(t);
        if (g && !g->has_predicate(rel)) {
          if (warnings) {
            warnings->push_back("lexicon entry '" + it.key() + "' -> " + rel.bracketed() +
                                " dropped: not a predicate of the graph");
          }
          continue;
        }
        lex.add(it.key(), rel);
      }
    }
    return lex;
  }

  static Lexicon from_file(const std::string& path, const KnowledgeGraph* g = nullptr,
                           std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open lexicon " + path);
    return from_json(nlohmann::json::parse(in), g, warnings);
  }

  const std::set<Iri>* lookup(const std::vector<std::string>& folded) const {
    auto it = entries_.find(folded);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t max_key_length() const { return max_len_; }
  const std::map<std::vector<std::string>, std::set<Iri>>& entries() const { return entries_; }

 private:
  std::map<std::vector<std::string>, std::set<Iri>> entries_;
  std::size_t max_len_ = 0;
};

struct LinkerConfig {
  double threshold = 0.6;
  double jaccard_weight = 0.7;
  double edit_weight = 0.3;
  std::size_t max_ngram = 3;
};

// 0.7 * token Jaccard + 0.3 * edit similarity of the space-joined forms.
inline double similarity_score(const std::vector<std::string>& mention,
                               const std::vector<std::string>& label,
                               const LinkerConfig& cfg = {}) {
  auto a = fold_plurals(mention);
  auto b = fold_plurals(label);
  return cfg.jaccard_weight * jaccard(a, b) + cfg.edit_weight * edit_similarity(join(a, " "), join(b, " "));
}

struct DirectMatch {
  enum class Category { relation, type, entity };
  Category category;
  Iri iri;
};

inline const char* to_string(DirectMatch::Category c) {
  switch (c) {
    case DirectMatch::Category::relation: return "relation";
    case DirectMatch::Category::type: return "type";
    case DirectMatch::Category::entity: return "entity";
  }
  return "?";
}

// Detects type and relation mentions against one graph. Holds a reference to
// the graph, which must outlive the linker.
class PhraseLinker {
 public:
  PhraseLinker(const KnowledgeGraph& g, Lexicon lex, Stopwords stop = {}, LinkerConfig cfg = {})
      : g_(g), lex_(std::move(lex)), stop_(std::move(stop)), cfg_(cfg) {
    Iri label_pred{std::string(kRdfsLabel)};
    for (const auto& l : g_.relation_labels()) {
      if (l.relation == g_.type_predicate() || l.relation == label_pred) continue;
      labels_.push_back({l.relation, fold_plurals(l.tokens)});
    }
    for (const auto& [key, type] : g_.type_dictionary().entries) {
      auto folded = fold_plurals(key);
      types_.emplace(folded, type);
      max_type_len_ = std::max(max_type_len_, folded.size());
    }
  }

  const KnowledgeGraph& graph() const { return g_; }
  const Lexicon& lexicon() const { return lex_; }
  const Stopwords& stopwords() const { return stop_; }
  const LinkerConfig& config() const { return cfg_; }

  // Best relation for a short mention: lexicon hit (1.0), else the highest
  // similarity score at or above the threshold. Ties go to the smaller IRI.
  std::optional<ScoredRelation> link_simple(const std::string& phrase) const {
    auto tokens = word_tokens(normalize_phrase(phrase));
    if (tokens.empty()) throw std::invalid_argument("link_simple: empty phrase");
    return link_tokens(tokens);
  }

  std::vector<TypeMention> detect_types(const Sentence& s) const {
    std::vector<TypeMention> out;
    std::vector<bool> used(s.size(), false);
    for (std::size_t n = std::min(max_type_len_, s.size()); n >= 1; --n) {
      for (std::size_t i = 0; i + n <= s.size(); ++i) {
        if (std::any_of(used.begin() + i, used.begin() + i + n, [](bool b) { return b; })) continue;
        auto key = fold_plurals(span_words(s, {i, i + n}));
        auto it = types_.find(key);
        if (it == types_.end()) continue;
        out.push_back({{i, i + n}, it->second});
        std::fill(used.begin() + i, used.begin() + i + n, true);
      }
    }
    std::sort(out.begin(), out.end(),
              [](const TypeMention& a, const TypeMention& b) { return a.span < b.span; });
    return out;
  }

  // `blocked[i]` marks tokens already claimed (type spans, nested phrases).
  std::vector<RelationMention> detect_relations(const Sentence& s,
                                                const std::vector<bool>& blocked = {}) const {
    std::vector<RelationMention> hits;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (std::size_t n = 1; n <= std::max(cfg_.max_ngram, lex_.max_key_length()) && i + n <= s.size(); ++n) {
        Span sp{i, i + n};
        if (is_blocked(blocked, sp)) break;
        auto words = span_words(s, sp);
        bool lex_hit = lex_.lookup(fold_plurals(words)) != nullptr;
        if (n > cfg_.max_ngram && !lex_hit) continue;
        if (stop_.contains(s[i].text)) break;
        if (!lex_hit && stop_.contains(s[i + n - 1].text)) continue;
        if (auto r = link_tokens(words)) hits.push_back({sp, r->relation, r->score});
      }
    }
    return resolve_overlaps(std::move(hits));
  }

  MetaElements detect(const Sentence& s) const {
    MetaElements m;
    m.types = detect_types(s);
    std::vector<bool> blocked(s.size(), false);
    for (const auto& t : m.types) {
      std::fill(blocked.begin() + t.span.begin, blocked.begin() + t.span.end, true);
    }
    m.relations = detect_relations(s, blocked);
    return m;
  }

  // Relation (exact label or lexicon only), then type, then entity label.
  std::optional<DirectMatch> direct_match(const std::string& phrase) const {
    auto norm = normalize_phrase(phrase);
    auto tokens = word_tokens(norm);
    if (tokens.empty()) return std::nullopt;
    auto folded = fold_plurals(tokens);
    if (auto* rels = lex_.lookup(folded)) {
      return DirectMatch{DirectMatch::Category::relation, *rels->begin()};
    }
    for (const auto& [rel, label] : labels_) {
      if (label == folded) return DirectMatch{DirectMatch::Category::relation, rel};
    }
    if (auto it = types_.find(folded); it != types_.end()) {
      return DirectMatch{DirectMatch::Category::type, it->second};
    }
    const auto& ents = g_.entity_labels();
    if (auto it = ents.find(detail::tokenize_label(norm)); it != ents.end()) {
      return DirectMatch{DirectMatch::Category::entity, it->second};
    }
    return std::nullopt;
  }

  // Lowercased words of a token span; hyphenated tokens split apart.
  static std::vector<std::string> span_words(const Sentence& s, Span sp) {
    std::vector<std::string> out;
    for (std::size_t i = sp.begin; i < sp.end; ++i) {
      for (auto& w : word_tokens(s[i].text)) out.push_back(std::move(w));
    }
    return out;
  }

  static std::vector<RelationMention> resolve_overlaps(std::vector<RelationMention> hits) {
    std::sort(hits.begin(), hits.end(), [](const RelationMention& a, const RelationMention& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.span.size() != b.span.size()) return a.span.size() > b.span.size();
      return a.span.begin < b.span.begin;
    });
    std::vector<RelationMention> kept;
    for (auto& h : hits) {
      bool clash = std::any_of(kept.begin(), kept.end(),
                               [&](const RelationMention& k) { return k.span.overlaps(h.span); });
      if (!clash) kept.push_back(std::move(h));
    }
    std::sort(kept.begin(), kept.end(), [](const RelationMention& a, const RelationMention& b) {
      return a.span < b.span;
    });
    return kept;
  }

 private:
  static bool is_blocked(const std::vector<bool>& blocked, Span sp) {
    if (blocked.empty()) return false;
    for (std::size_t i = sp.begin; i < sp.end; ++i) {
      if (i < blocked.size() && blocked[i]) return true;
    }
    return false;
  }

  std::optional<ScoredRelation> link_tokens(const std::vector<std::string>& tokens) const {
    auto folded = fold_plurals(tokens);
    if (auto* rels = lex_.lookup(folded)) return ScoredRelation{*rels->begin(), 1.0};
    std::optional<ScoredRelation> best;
    for (const auto& [rel, label] : labels_) {
      double sc = label == folded ? 1.0 : similarity_score(folded, label, cfg_);
      sc = std::clamp(sc, 0.0, 1.0);
      if (sc < cfg_.threshold) continue;
      if (!best || sc > best->score) best = ScoredRelation{rel, sc};
    }
    return best;
  }

  const KnowledgeGraph& g_;
  Lexicon lex_;
  Stopwords stop_;
  LinkerConfig cfg_;
  std::vector<std::pair<Iri, std::vector<std::string>>> labels_;  // IRI order
  std::map<std::vector<std::string>, Iri> types_;
  std::size_t max_type_len_ = 0;
};

}  // namespace relink

#endif  // RELINK_PHRASE_LINKER_HPP
