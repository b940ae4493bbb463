#ifndef RELINK_CLASSIFIER_HPP
#define RELINK_CLASSIFIER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/explainer.hpp"
#include "relink/kg_store.hpp"
#include "relink/meta_pattern.hpp"
#include "relink/pattern_kind.hpp"
#include "relink/phrase_linker.hpp"
#include "relink/text.hpp"

namespace relink {

// ---------------------------------------------------------------------------
// Masking

struct MaskedSentence {
  std::vector<std::string> tokens;  // words, or "*localname" for relations
  std::vector<bool> possessive;     // parallel to tokens
  std::size_t relation_count = 0;

  static bool is_mask(const std::string& t) { return t.size() > 1 && t.front() == '*'; }
  std::string text() const { return join(tokens, " "); }

  std::vector<std::size_t> mask_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (is_mask(tokens[i])) out.push_back(i);
    }
    return out;
  }

  friend bool operator==(const MaskedSentence&, const MaskedSentence&) = default;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline MaskedSentence mask(const Sentence& s, const MetaElements& elems) {
  MaskedSentence ms;
  std::size_t r = 0;
  for (std::size_t i = 0; i < s.size();) {
    if (r < elems.relations.size() && elems.relations[r].span.begin == i) {
      const auto& rel = elems.relations[r];
      if (rel.span.end > s.size() || rel.span.end <= rel.span.begin) {
        throw ContractViolation("relation span out of bounds");
      }
      ms.tokens.push_back(rel.mask_token());
      ms.possessive.push_back(s[rel.span.end - 1].possessive);
      ++ms.relation_count;
      i = rel.span.end;
      ++r;
      continue;
    }
    ms.tokens.push_back(to_lower(s[i].text));
    ms.possessive.push_back(s[i].possessive);
    ++i;
  }
  if (r != elems.relations.size()) {
    throw ContractViolation("relation spans are out of order or out of bounds");
  }
  return ms;
}

inline nlohmann::json to_json(const MaskedSentence& ms) {
  std::vector<std::size_t> poss;
  for (std::size_t i = 0; i < ms.possessive.size(); ++i) {
    if (ms.possessive[i]) poss.push_back(i);
  }
  return {{"tokens", ms.tokens}, {"possessive", poss}};
}

inline MaskedSentence masked_from_json(const nlohmann::json& j) {
  MaskedSentence ms;
  ms.tokens = j.at("tokens").get<std::vector<std::string>>();
  ms.possessive.assign(ms.tokens.size(), false);
  for (auto i : j.value("possessive", std::vector<std::size_t>{})) {
    if (i < ms.possessive.size()) ms.possessive[i] = true;
  }
  for (const auto& t : ms.tokens) ms.relation_count += MaskedSentence::is_mask(t);
  return ms;
}

// ---------------------------------------------------------------------------
// Features

using FeatureVector = std::map<std::string, double>;

class FeatureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string distance_bucket(std::size_t gap) {
  if (gap <= 2) return std::to_string(gap);
  if (gap <= 4) return "3-4";
  return "5+";
}

inline FeatureVector featurize(const MaskedSentence& ms) {
  auto masks = ms.mask_positions();
  if (masks.size() < 2) {
    throw FeatureError("featurize needs at least two masked relations, got " +
                       std::to_string(masks.size()));
  }
  auto gen = [&](std::size_t i) {
    return MaskedSentence::is_mask(ms.tokens[i]) ? std::string("*REL") : ms.tokens[i];
  };
  FeatureVector f;
  for (std::size_t i = 0; i < ms.tokens.size(); ++i) f["u:" + gen(i)] = 1.0;
  std::string prev = "<s>";
  for (std::size_t i = 0; i < ms.tokens.size(); ++i) {
    auto cur = gen(i);
    f["b:" + prev + "|" + cur] = 1.0;
    prev = cur;
  }
  f["b:" + prev + "|</s>"] = 1.0;

  std::size_t a = masks[0], b = masks[1];
  bool possessive = ms.possessive[a];
  for (std::size_t i = a + 1; i < b; ++i) {
    f["between:" + ms.tokens[i]] = 1.0;
    possessive = possessive || ms.possessive[i];
    for (const char* cue : {"of", "who", "from"}) {
      if (ms.tokens[i] == cue) f[std::string("cue:") + cue] = 1.0;
    }
  }
  if (possessive) f["cue:possessive"] = 1.0;
  f[b == a + 1 ? "adj:1" : "adj:0"] = 1.0;
  f["dist:" + distance_bucket(b - a - 1)] = 1.0;
  return f;
}

// Unmasked baseline for the masking ablation: unigrams and bigrams over the
// raw tokens.
inline FeatureVector featurize_raw(const Sentence& s) {
  FeatureVector f;
  std::string prev = "<s>";
  for (const auto& t : s) {
    auto w = to_lower(t.text);
    f["u:" + w] = 1.0;
    f["b:" + prev + "|" + w] = 1.0;
    prev = w;
  }
  f["b:" + prev + "|</s>"] = 1.0;
  return f;
}

// ---------------------------------------------------------------------------
// Model

inline constexpr std::array<MetaPattern, 3> kClassLabels = {MetaPattern::RP2, MetaPattern::RP3,
                                                            MetaPattern::RP4};

inline std::size_t class_index(MetaPattern mp) {
  for (std::size_t i = 0; i < kClassLabels.size(); ++i) {
    if (kClassLabels[i] == mp) return i;
  }
  throw std::invalid_argument(std::string("not a classifier label: ") + pattern_name(mp));
}

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  double l2 = 1e-4;
  unsigned seed = 42;
};

struct TrainReport {
  std::map<std::string, std::size_t> class_counts;
  double training_accuracy = 0.0;
  std::size_t features = 0;
};

struct Prediction {
  MetaPattern pattern;
  double confidence;
};

class PatternClassifier {
 public:
  static constexpr const char* kFormat = "relink-linear-v1";

  std::vector<MetaPattern> tie_break = {MetaPattern::RP2, MetaPattern::RP4, MetaPattern::RP3};

  std::array<double, 3> probabilities(const FeatureVector& f) const {
    std::array<double, 3> z = bias_;
    for (const auto& [name, v] : f) {
      auto it = vocab_.find(name);
      if (it == vocab_.end()) continue;
      for (std::size_t c = 0; c < 3; ++c) z[c] += weights_[c][it->second] * v;
    }
    double m = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (auto& x : z) {
      x = std::exp(x - m);
      sum += x;
    }
    for (auto& x : z) x /= sum;
    return z;
  }

  Prediction predict_features(const FeatureVector& f) const {
    auto p = probabilities(f);
    std::optional<std::size_t> best;
    for (MetaPattern mp : tie_break) {
      std::size_t c = class_index(mp);
      if (!best || p[c] > p[*best]) best = c;
    }
    return {kClassLabels[*best], p[*best]};
  }

  Prediction predict(const MaskedSentence& ms) const { return predict_features(featurize(ms)); }

  std::size_t vocabulary_size() const { return vocab_.size(); }
  const std::map<std::string, std::size_t>& vocabulary() const { return vocab_; }

  // Multinomial logistic regression fit by per-example SGD. Examples are
  // shuffled each epoch with a generator seeded from cfg.seed.
  static PatternClassifier fit(const std::vector<FeatureVector>& xs,
                               const std::vector<MetaPattern>& ys, const TrainConfig& cfg,
                               TrainReport* report = nullptr) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit: size mismatch");
    if (xs.empty()) throw std::invalid_argument("fit: no training examples");
    std::array<std::size_t, 3> counts{};
    for (auto y : ys) ++counts[class_index(y)];
    std::vector<std::string> missing;
    for (std::size_t c = 0; c < 3; ++c) {
      if (counts[c] == 0) missing.push_back(pattern_name(kClassLabels[c]));
    }
    if (!missing.empty()) {
      throw std::invalid_argument("training data lacks classes: " + join(missing, ", "));
    }

    PatternClassifier m;
    for (const auto& x : xs) {
      for (const auto& [name, v] : x) m.vocab_.emplace(name, 0);
    }
    std::size_t idx = 0;
    for (auto& [name, i] : m.vocab_) i = idx++;
    for (auto& w : m.weights_) w.assign(m.vocab_.size(), 0.0);

    std::vector<std::vector<std::pair<std::size_t, double>>> sparse(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      for (const auto& [name, v] : xs[i]) sparse[i].emplace_back(m.vocab_.at(name), v);
    }

    std::mt19937 rng(cfg.seed);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        std::array<double, 3> z = m.bias_;
        for (auto [j, v] : sparse[i]) {
          for (std::size_t c = 0; c < 3; ++c) z[c] += m.weights_[c][j] * v;
        }
        double mx = *std::max_element(z.begin(), z.end());
        double sum = 0;
        for (auto& v : z) {
          v = std::exp(v - mx);
          sum += v;
        }
        std::size_t y = class_index(ys[i]);
        for (std::size_t c = 0; c < 3; ++c) {
          double g = z[c] / sum - (c == y ? 1.0 : 0.0);
          if (cfg.l2 > 0) {
            double decay = 1.0 - cfg.learning_rate * cfg.l2;
            for (auto& w : m.weights_[c]) w *= decay;
          }
          for (auto [j, v] : sparse[i]) m.weights_[c][j] -= cfg.learning_rate * g * v;
          m.bias_[c] -= cfg.learning_rate * g;
        }
      }
    }

    if (report) {
      report->class_counts.clear();
      for (std::size_t c = 0; c < 3; ++c) report->class_counts[pattern_name(kClassLabels[c])] = counts[c];
      std::size_t correct = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) correct += m.predict_features(xs[i]).pattern == ys[i];
      report->training_accuracy = static_cast<double>(correct) / static_cast<double>(xs.size());
      report->features = m.vocab_.size();
    }
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json vocab = nlohmann::json::array();
    std::vector<std::string> names(vocab_.size());
    for (const auto& [name, i] : vocab_) names[i] = name;
    nlohmann::json weights = nlohmann::json::object();
    nlohmann::json bias = nlohmann::json::object();
    for (std::size_t c = 0; c < 3; ++c) {
      weights[pattern_name(kClassLabels[c])] = weights_[c];
      bias[pattern_name(kClassLabels[c])] = bias_[c];
    }
    std::vector<std::string> tb;
    for (auto mp : tie_break) tb.push_back(pattern_name(mp));
    return {{"format", kFormat}, {"features", names}, {"weights", weights},
            {"bias", bias},      {"tie_break", tb}};
  }

  static PatternClassifier from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != kFormat) {
      throw std::invalid_argument("unsupported model format '" + j.value("format", std::string()) +
                                  "', expected " + kFormat);
    }
    PatternClassifier m;
    auto names = j.at("features").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < names.size(); ++i) m.vocab_.emplace(names[i], i);
    for (std::size_t c = 0; c < 3; ++c) {
      std::string key = pattern_name(kClassLabels[c]);
      m.weights_[c] = j.at("weights").at(key).get<std::vector<double>>();
      if (m.weights_[c].size() != names.size()) {
        throw std::invalid_argument(std::string("weight vector for ") + key + " has wrong length");
      }
      m.bias_[c] = j.at("bias").at(key).get<double>();
    }
    if (j.contains("tie_break")) {
      m.tie_break.clear();
      for (const auto& s : j.at("tie_break")) m.tie_break.push_back(meta_pattern_from_string(s.get<std::string>()));
    }
    return m;
  }

  static PatternClassifier load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model " + path);
    return from_json(nlohmann::json::parse(in));
  }

 private:
  std::map<std::string, std::size_t> vocab_;
  std::array<std::vector<double>, 3> weights_;
  std::array<double, 3> bias_{};
};

// ---------------------------------------------------------------------------
// Training data

enum class Origin { harvested, manual };

struct TrainingExample {
  std::string phrase;
  std::string sentence;
  MaskedSentence masked;
  MetaPattern label = MetaPattern::RP2;
  SubgraphPattern pattern;
  Origin origin = Origin::harvested;
};

inline nlohmann::json to_json(const TrainingExample& e) {
  return {{"phrase", e.phrase},
          {"sentence", e.sentence},
          {"masked", to_json(e.masked)},
          {"label", pattern_name(e.label)},
          {"pattern", to_json(e.pattern)},
          {"origin", e.origin == Origin::harvested ? "harvested" : "manual"}};
}

inline TrainingExample example_from_json(const nlohmann::json& j) {
  TrainingExample e;
  e.phrase = j.at("phrase").get<std::string>();
  e.sentence = j.value("sentence", std::string());
  e.masked = masked_from_json(j.at("masked"));
  e.label = meta_pattern_from_string(j.at("label").get<std::string>());
  e.pattern = pattern_from_json(j.at("pattern"));
  auto origin = j.value("origin", std::string("harvested"));
  if (origin == "harvested") e.origin = Origin::harvested;
  else if (origin == "manual") e.origin = Origin::manual;
  else throw std::invalid_argument("unknown origin '" + origin + "'");
  if (e.label == MetaPattern::RP1) throw std::invalid_argument("training label cannot be RP1");
  if (shape_of(e.pattern) != e.label) {
    throw std::invalid_argument("example '" + e.phrase + "': pattern shape " +
                                shape_name(e.pattern) + " disagrees with label " +
                                pattern_name(e.label));
  }
  return e;
}

inline std::vector<TrainingExample> read_examples(std::istream& in) {
  std::vector<TrainingExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("training data line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TrainingExample> read_examples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open training data " + path);
  return read_examples(in);
}

inline void write_examples(std::ostream& out, const std::vector<TrainingExample>& xs) {
  for (const auto& e : xs) out << to_json(e).dump() << '\n';
}

// Review file: JSON lines {"phrase": ..., "action": "accept"|"reject"|"relabel", "label": "RP3"}.
// Phrases without a review line are kept as they are.
inline std::vector<TrainingExample> apply_review(std::vector<TrainingExample> xs, std::istream& review) {
  std::map<std::string, nlohmann::json> actions;
  std::string line;
  while (std::getline(review, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line);
    actions[normalize_phrase(j.at("phrase").get<std::string>())] = j;
  }
  std::vector<TrainingExample> out;
  for (auto& e : xs) {
    auto it = actions.find(normalize_phrase(e.phrase));
    if (it == actions.end()) {
      out.push_back(std::move(e));
      continue;
    }
    auto action = it->second.at("action").get<std::string>();
    if (action == "accept") {
      out.push_back(std::move(e));
    } else if (action == "reject") {
      continue;
    } else if (action == "relabel") {
      auto label = meta_pattern_from_string(it->second.at("label").get<std::string>());
      if (label == MetaPattern::RP1) throw std::invalid_argument("cannot relabel to RP1");
      auto rels = e.pattern.relations();
      e.pattern = instantiate(label, std::span<const Iri>(rels.data(), 2));
      e.label = label;
      out.push_back(std::move(e));
    } else {
      throw std::invalid_argument("unknown review action '" + action + "'");
    }
  }
  return out;
}

inline PatternClassifier train(const std::vector<TrainingExample>& examples,
                               const TrainConfig& cfg = {}, TrainReport* report = nullptr) {
  std::vector<FeatureVector> xs;
  std::vector<MetaPattern> ys;
  for (const auto& e : examples) {
    xs.push_back(featurize(e.masked));
    ys.push_back(e.label);
  }
  return PatternClassifier::fit(xs, ys, cfg, report);
}

// ---------------------------------------------------------------------------
// Harvesting training data from the graph itself

struct HarvestSkip {
  std::string phrase;
  std::string reason;
};

inline std::vector<TrainingExample> harvest(const std::vector<std::string>& phrases,
                                            const KnowledgeGraph& g, Explainer& ex,
                                            const PhraseLinker& pl, std::size_t kappa,
                                            std::vector<HarvestSkip>* skips = nullptr) {
  if (kappa == 0) throw std::invalid_argument("harvest: kappa must be positive");
  std::vector<TrainingExample> out;
  auto skip = [&](const std::string& p, std::string why) {
    if (skips) skips->push_back({p, std::move(why)});
  };
  for (const auto& raw : phrases) {
    if (out.size() >= kappa) break;
    auto phrase = normalize_phrase(raw);
    if (phrase.empty()) continue;
    if (auto dm = pl.direct_match(phrase)) {
      skip(phrase, std::string("direct match (") + to_string(dm->category) + " " +
                       dm->iri.bracketed() + ")");
      continue;
    }
    auto expl = ex.explain(phrase);
    if (!expl) {
      skip(phrase, "no explanation");
      continue;
    }
    auto sentence = tokenize_sentence(expl->sentence);
    auto elems = pl.detect(sentence);
    if (elems.relations.size() != 2) {
      skip(phrase, std::to_string(elems.relations.size()) + " relation mention(s)");
      continue;
    }
    auto inst = adjacent_instantiations(g, elems.relations[0].relation, elems.relations[1].relation);
    if (inst.size() != 1) {
      skip(phrase, inst.empty() ? "no instantiable shape"
                                : std::to_string(inst.size()) + " instantiable shapes");
      continue;
    }
    const auto& only = *inst.begin();
    TrainingExample e;
    e.phrase = phrase;
    e.sentence = expl->sentence;
    e.masked = mask(sentence, elems);
    e.label = only.kind;
    e.pattern = instantiate(only.kind, {only.first, only.second});
    e.origin = Origin::harvested;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace relink

#endif  // RELINK_CLASSIFIER_HPP
