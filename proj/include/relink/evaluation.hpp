#ifndef RELINK_EVALUATION_HPP
#define RELINK_EVALUATION_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/assembler.hpp"
#include "relink/classifier.hpp"
#include "relink/explainer.hpp"
#include "relink/kg_store.hpp"
#include "relink/meta_pattern.hpp"
#include "relink/phrase_linker.hpp"

namespace relink {

// ---------------------------------------------------------------------------
// Gold data

struct GoldEntry {
  std::string phrase;
  SubgraphPattern gold;
  bool known_failure = false;
  std::string note;
};

inline GoldEntry gold_from_json(const nlohmann::json& j) {
  GoldEntry g;
  g.phrase = normalize_phrase(j.at("phrase").get<std::string>());
  g.gold = pattern_from_json(j.at("gold_pattern"));
  if (g.gold.edges.empty()) throw std::invalid_argument("gold pattern for '" + g.phrase + "' is empty");
  g.known_failure = j.value("known_failure", false);
  g.note = j.value("note", std::string());
  return g;
}

inline std::vector<GoldEntry> read_gold(std::istream& in) {
  std::vector<GoldEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(gold_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("gold line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<GoldEntry> read_gold_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gold file " + path);
  return read_gold(in);
}

// ---------------------------------------------------------------------------
// Scoring

struct Score {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
  friend bool operator==(const Score&, const Score&) = default;
};

// Largest number of predicted edges that coincide with gold edges under one
// injective renaming of predicted variables into gold variables. Edges are
// treated as a multiset; types are ignored.
inline std::size_t matched_edges(const SubgraphPattern& pred, const SubgraphPattern& gold) {
  auto pv_set = pred.variables();
  auto gv_set = gold.variables();
  std::vector<std::string> pv(pv_set.begin(), pv_set.end());
  std::vector<std::string> gv(gv_set.begin(), gv_set.end());
  auto pidx = [&](const std::string& v) {
    return static_cast<int>(std::lower_bound(pv.begin(), pv.end(), v) - pv.begin());
  };
  auto gidx = [&](const std::string& v) {
    return static_cast<int>(std::lower_bound(gv.begin(), gv.end(), v) - gv.begin());
  };
  struct E {
    int s, d;
    const Iri* r;
  };
  std::vector<E> pe, ge;
  for (const auto& e : pred.edges) pe.push_back({pidx(e.src), pidx(e.dst), &e.relation});
  for (const auto& e : gold.edges) ge.push_back({gidx(e.src), gidx(e.dst), &e.relation});

  std::vector<int> assign(pv.size(), -1);
  std::vector<bool> taken(gv.size(), false);
  std::size_t best = 0;

  auto count = [&] {
    std::map<std::tuple<int, int, std::string>, int> bag;
    for (const auto& e : ge) ++bag[{e.s, e.d, e.r->str()}];
    std::size_t m = 0;
    for (const auto& e : pe) {
      if (assign[e.s] < 0 || assign[e.d] < 0) continue;
      auto it = bag.find({assign[e.s], assign[e.d], e.r->str()});
      if (it != bag.end() && it->second > 0) {
        --it->second;
        ++m;
      }
    }
    return m;
  };
  std::size_t cap = std::min(pe.size(), ge.size());
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (best == cap) return;
    if (i == pv.size()) {
      best = std::max(best, count());
      return;
    }
    for (std::size_t j = 0; j < gv.size(); ++j) {
      if (taken[j]) continue;
      taken[j] = true;
      assign[i] = static_cast<int>(j);
      go(i + 1);
      taken[j] = false;
    }
    assign[i] = -1;
    go(i + 1);
  };
  go(0);
  return best;
}

inline Score score(const std::optional<SubgraphPattern>& predicted, const SubgraphPattern& gold) {
  if (gold.edges.empty()) throw std::invalid_argument("score: empty gold pattern");
  if (!predicted || predicted->edges.empty()) return {};
  auto m = static_cast<double>(matched_edges(*predicted, gold));
  Score s;
  s.p = m / static_cast<double>(predicted->edges.size());
  s.r = m / static_cast<double>(gold.edges.size());
  s.f1 = s.p + s.r > 0 ? 2 * s.p * s.r / (s.p + s.r) : 0.0;
  return s;
}

inline bool exact_match(const std::optional<SubgraphPattern>& predicted, const SubgraphPattern& gold) {
  if (!predicted) return false;
  return predicted->edges.size() == gold.edges.size() &&
         matched_edges(*predicted, gold) == gold.edges.size();
}

// ---------------------------------------------------------------------------
// Methods

enum class Method { ours, data_driven, similarity_search, keyword_match };

inline constexpr Method kAllMethods[] = {Method::ours, Method::data_driven,
                                         Method::similarity_search, Method::keyword_match};

inline std::string method_name(Method m) {
  switch (m) {
    case Method::ours: return "OurApproach";
    case Method::data_driven: return "DataDriven";
    case Method::similarity_search: return "SimilaritySearch";
    case Method::keyword_match: return "KeywordMatch";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  auto k = to_lower(s);
  if (k == "ours" || k == "ourapproach") return Method::ours;
  if (k == "data-driven" || k == "data_driven" || k == "datadriven") return Method::data_driven;
  if (k == "similarity" || k == "similarity-search" || k == "similarity_search" ||
      k == "similaritysearch")
    return Method::similarity_search;
  if (k == "keyword" || k == "keyword-match" || k == "keyword_match" || k == "keywordmatch")
    return Method::keyword_match;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

inline std::vector<std::pair<Iri, std::vector<std::string>>> linkable_labels(const KnowledgeGraph& g) {
  std::vector<std::pair<Iri, std::vector<std::string>>> out;
  Iri label_pred{std::string(kRdfsLabel)};
  for (const auto& l : g.relation_labels()) {
    if (l.relation == g.type_predicate() || l.relation == label_pred) continue;
    out.emplace_back(l.relation, l.tokens);
  }
  return out;
}

// RP1 of a predicate whose label tokens equal the phrase tokens.
inline std::optional<SubgraphPattern> keyword_match(std::string_view phrase, const KnowledgeGraph& g) {
  auto tokens = word_tokens(normalize_phrase(phrase));
  for (const auto& [rel, label] : linkable_labels(g)) {
    if (label == tokens) return instantiate(MetaPattern::RP1, {rel});
  }
  return std::nullopt;
}

// RP1 of the most similar predicate; ties go to the smaller IRI.
inline std::optional<SubgraphPattern> similarity_search(std::string_view phrase, const KnowledgeGraph& g,
                                                        const LinkerConfig& cfg = {}) {
  auto tokens = word_tokens(normalize_phrase(phrase));
  std::optional<Iri> best;
  double best_score = -1;
  for (const auto& [rel, label] : linkable_labels(g)) {
    double s = similarity_score(tokens, label, cfg);
    if (s > best_score) {
      best = rel;
      best_score = s;
    }
  }
  if (!best) return std::nullopt;
  return instantiate(MetaPattern::RP1, {*best});
}

struct Pipeline {
  const KnowledgeGraph& g;
  Explainer& ex;
  const PhraseLinker& pl;
  const Assembler& assembler;
};

inline std::optional<SubgraphPattern> data_driven(std::string_view phrase, Pipeline& p) {
  auto expl = p.ex.explain(phrase);
  if (!expl) return std::nullopt;
  auto elems = p.pl.detect(tokenize_sentence(expl->sentence));
  return link_data_driven(elems, p.g);
}

inline std::optional<SubgraphPattern> run_method(Method m, std::string_view phrase, Pipeline& p) {
  switch (m) {
    case Method::ours: return p.assembler.link(phrase).pattern;
    case Method::data_driven: return data_driven(phrase, p);
    case Method::similarity_search: return similarity_search(phrase, p.g, p.pl.config());
    case Method::keyword_match: return keyword_match(phrase, p.g);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reports

struct PhraseResult {
  std::string phrase;
  std::optional<SubgraphPattern> predicted;
  Score score;
  bool exact = false;
  bool known_failure = false;
};

struct Timing {
  double mean_seconds = 0.0;  // per phrase
  double variance = 0.0;      // across repetitions
  int repetitions = 0;
};

struct MethodReport {
  Method method;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double exact_match_rate = 0.0;
  std::vector<PhraseResult> phrases;
  std::optional<Timing> timing;
};

struct EvalReport {
  std::size_t gold_size = 0;
  std::vector<MethodReport> methods;
  std::vector<std::string> notes;

  const MethodReport* find(Method m) const {
    for (const auto& r : methods) {
      if (r.method == m) return &r;
    }
    return nullptr;
  }
};

struct EvalOptions {
  bool timing = false;
  int repetitions = 20;
};

// Mean seconds per phrase for one sweep over `phrases`, repeated.
inline Timing time_method(Method m, const std::vector<std::string>& phrases, Pipeline& p, int reps) {
  using clock = std::chrono::steady_clock;
  for (const auto& ph : phrases) (void)run_method(m, ph, p);  // warm caches
  std::vector<double> samples;
  volatile std::size_t sink = 0;
  for (int r = 0; r < reps; ++r) {
    auto t0 = clock::now();
    for (const auto& ph : phrases) {
      auto out = run_method(m, ph, p);
      sink = sink + (out ? out->edges.size() : 0);
    }
    std::chrono::duration<double> dt = clock::now() - t0;
    samples.push_back(dt.count() / static_cast<double>(std::max<std::size_t>(1, phrases.size())));
  }
  Timing t;
  t.repetitions = reps;
  if (samples.empty()) return t;
  double sum = 0;
  for (double s : samples) sum += s;
  t.mean_seconds = sum / static_cast<double>(samples.size());
  double var = 0;
  for (double s : samples) var += (s - t.mean_seconds) * (s - t.mean_seconds);
  t.variance = samples.size() > 1 ? var / static_cast<double>(samples.size() - 1) : 0.0;
  return t;
}

inline EvalReport evaluate(const std::vector<GoldEntry>& gold, const std::vector<Method>& methods,
                           Pipeline& p, const EvalOptions& opts = {}) {
  if (gold.empty()) throw std::invalid_argument("evaluate: empty gold set");
  EvalReport rep;
  rep.gold_size = gold.size();
  rep.notes.push_back("SIBKB baseline omitted: no implementation available offline");
  if (!opts.timing) rep.notes.push_back("timing not measured (enable with --timing)");
  for (Method m : methods) {
    MethodReport mr;
    mr.method = m;
    std::size_t exact = 0;
    for (const auto& ge : gold) {
      PhraseResult pr;
      pr.phrase = ge.phrase;
      pr.predicted = run_method(m, ge.phrase, p);
      pr.score = score(pr.predicted, ge.gold);
      pr.exact = exact_match(pr.predicted, ge.gold);
      pr.known_failure = ge.known_failure;
      mr.precision += pr.score.p;
      mr.recall += pr.score.r;
      mr.f1 += pr.score.f1;
      exact += pr.exact;
      mr.phrases.push_back(std::move(pr));
    }
    double n = static_cast<double>(gold.size());
    mr.precision /= n;
    mr.recall /= n;
    mr.f1 /= n;
    mr.exact_match_rate = static_cast<double>(exact) / n;
    if (opts.timing) {
      std::vector<std::string> phrases;
      for (const auto& ge : gold) phrases.push_back(ge.phrase);
      mr.timing = time_method(m, phrases, p, std::max(1, opts.repetitions));
    }
    rep.methods.push_back(std::move(mr));
  }
  return rep;
}

inline nlohmann::json to_json(const EvalReport& rep) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& mr : rep.methods) {
    nlohmann::json phrases = nlohmann::json::array();
    for (const auto& pr : mr.phrases) {
      phrases.push_back({{"phrase", pr.phrase},
                         {"predicted", pr.predicted ? to_json(*pr.predicted) : nlohmann::json(nullptr)},
                         {"p", pr.score.p},
                         {"r", pr.score.r},
                         {"f1", pr.score.f1},
                         {"exact", pr.exact},
                         {"known_failure", pr.known_failure}});
    }
    nlohmann::json m = {{"precision", mr.precision},
                        {"recall", mr.recall},
                        {"f1", mr.f1},
                        {"exact_match_rate", mr.exact_match_rate},
                        {"phrases", phrases}};
    if (mr.timing) {
      m["timing"] = {{"mean_seconds", mr.timing->mean_seconds},
                     {"variance", mr.timing->variance},
                     {"repetitions", mr.timing->repetitions}};
    }
    methods[method_name(mr.method)] = std::move(m);
  }
  return {{"gold_size", rep.gold_size}, {"methods", methods}, {"notes", rep.notes}};
}

inline std::string format_table(const EvalReport& rep) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %9s %9s %9s %9s %12s\n", "method", "precision", "recall",
                "f1", "exact", "mean time");
  out << buf;
  for (const auto& mr : rep.methods) {
    std::string t = mr.timing ? std::to_string(mr.timing->mean_seconds * 1e3) + " ms" : "-";
    std::snprintf(buf, sizeof buf, "%-18s %9.3f %9.3f %9.3f %9.3f %12s\n", method_name(mr.method).c_str(),
                  mr.precision, mr.recall, mr.f1, mr.exact_match_rate, t.c_str());
    out << buf;
  }
  for (const auto& n : rep.notes) out << "note: " << n << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Masking ablation

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

// Macro average over the classes that occur in `gold`. A class never
// predicted has precision 0.
inline ClassMetrics classification_metrics(const std::vector<MetaPattern>& gold,
                                           const std::vector<MetaPattern>& predicted) {
  if (gold.size() != predicted.size()) throw std::invalid_argument("metrics: size mismatch");
  std::set<MetaPattern> classes(gold.begin(), gold.end());
  ClassMetrics out;
  if (classes.empty()) return out;
  for (auto c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      bool g = gold[i] == c, p = predicted[i] == c;
      tp += g && p;
      fp += !g && p;
      fn += g && !p;
    }
    double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.precision += prec;
    out.recall += rec;
    out.f1 += prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
  }
  double k = static_cast<double>(classes.size());
  out.precision /= k;
  out.recall /= k;
  out.f1 /= k;
  return out;
}

struct AblationReport {
  ClassMetrics masked;
  ClassMetrics unmasked;
  std::size_t examples = 0;
  std::size_t folds = 0;
};

inline nlohmann::json to_json(const AblationReport& a) {
  auto m = [](const ClassMetrics& c) {
    return nlohmann::json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
  };
  return {{"masked", m(a.masked)}, {"unmasked", m(a.unmasked)}, {"examples", a.examples}, {"folds", a.folds}};
}

// k-fold cross-validation (fold = index mod k), pooled predictions, once on
// masked features and once on raw tokens.
inline AblationReport ablate_masking(const std::vector<TrainingExample>& examples,
                                     const TrainConfig& cfg = {}, std::size_t folds = 5) {
  if (folds < 2) throw std::invalid_argument("ablation needs at least two folds");
  if (examples.size() < folds) throw std::invalid_argument("ablation: fewer examples than folds");
  std::vector<FeatureVector> masked, raw;
  std::vector<MetaPattern> labels;
  for (const auto& e : examples) {
    masked.push_back(featurize(e.masked));
    raw.push_back(featurize_raw(tokenize_sentence(e.sentence)));
    labels.push_back(e.label);
  }
  auto run = [&](const std::vector<FeatureVector>& xs) {
    std::vector<MetaPattern> pred(xs.size(), MetaPattern::RP2);
    for (std::size_t f = 0; f < folds; ++f) {
      std::vector<FeatureVector> tx;
      std::vector<MetaPattern> ty;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i % folds == f) continue;
        tx.push_back(xs[i]);
        ty.push_back(labels[i]);
      }
      auto model = PatternClassifier::fit(tx, ty, cfg);
      for (std::size_t i = f; i < xs.size(); i += folds) pred[i] = model.predict_features(xs[i]).pattern;
    }
    return classification_metrics(labels, pred);
  };
  AblationReport rep;
  rep.examples = examples.size();
  rep.folds = folds;
  rep.masked = run(masked);
  rep.unmasked = run(raw);
  return rep;
}

}  // namespace relink

#endif  // RELINK_EVALUATION_HPP
