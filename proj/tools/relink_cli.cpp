// relink: command-line front end.
//
//   relink ingest data/kg.nt
//   relink link mother-in-law --trace
//   relink collect-training --phrases phrases.txt --kappa 500 --out harvested.jsonl
//   relink train --training labeled.jsonl --model-out model.json
//   relink eval --gold gold.jsonl --report-json report.json
//
// Paths come from flags, then RELINK_* environment variables, then the JSON
// file given with --config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "relink/http_provider.hpp"
#include "relink/relink.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNoMatch = 3;
constexpr int kExitData = 4;

// Input file problems, reported with exit code 2 (missing) or 4 (malformed).
struct CliError : std::runtime_error {
  CliError(int code, const std::string& msg) : std::runtime_error(msg), code(code) {}
  int code;
};

struct Settings {
  std::string config;
  std::string kg;
  std::string lexicon;
  std::string explanations;
  std::string stopwords;
  std::string model;
  std::string validation = "strict";
  int max_depth = 3;
  unsigned seed = 42;
  std::string format = "json";
};

struct Opts {
  CLI::Option* kg = nullptr;
  CLI::Option* lexicon = nullptr;
  CLI::Option* explanations = nullptr;
  CLI::Option* stopwords = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* validation = nullptr;
  CLI::Option* max_depth = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* format = nullptr;
};

void apply_config_file(Settings& s, const Opts& o) {
  if (s.config.empty()) return;
  std::ifstream in(s.config);
  if (!in) throw CliError(kExitUsage, "cannot open config file " + s.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CliError(kExitUsage, "config " + s.config + ": " + e.what());
  }
  auto take = [&](CLI::Option* opt, const char* key, auto& field) {
    if (opt->count() == 0 && j.contains(key)) {
      field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    }
  };
  // Relative paths in the file are relative to the file itself.
  auto base = std::filesystem::path(s.config).parent_path();
  auto take_path = [&](CLI::Option* opt, const char* key, std::string& field) {
    if (opt->count() != 0 || !j.contains(key)) return;
    std::filesystem::path v = j.at(key).get<std::string>();
    field = (v.is_relative() && !v.empty() ? base / v : v).string();
  };
  take_path(o.kg, "kg", s.kg);
  take_path(o.lexicon, "lexicon", s.lexicon);
  take_path(o.explanations, "explanations", s.explanations);
  take_path(o.stopwords, "stopwords", s.stopwords);
  take_path(o.model, "model", s.model);
  take(o.validation, "validation", s.validation);
  take(o.max_depth, "max_depth", s.max_depth);
  take(o.seed, "seed", s.seed);
  take(o.format, "format", s.format);
}

std::string require(const std::string& value, const char* what) {
  if (value.empty()) {
    throw CliError(kExitUsage, std::string("missing ") + what + " (flag, RELINK_ variable or config)");
  }
  std::ifstream probe(value);
  if (!probe) throw CliError(kExitUsage, std::string("cannot open ") + what + " " + value);
  return value;
}

template <typename F>
auto load_data(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const relink::ParseError& e) {
    throw CliError(kExitData, what + ": line " + std::to_string(e.line()) + ": " + e.what());
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError(kExitData, what + ": " + e.what());
  }
}

relink::KnowledgeGraph load_kg(const Settings& s) {
  auto path = require(s.kg, "knowledge graph");
  return load_data(path, [&] { return relink::load_file(path); });
}

relink::Stopwords load_stopwords(const Settings& s) {
  if (s.stopwords.empty()) return {};
  auto path = require(s.stopwords, "stopword file");
  return load_data(path, [&] { return relink::Stopwords::from_file(path); });
}

relink::Lexicon load_lexicon(const Settings& s, const relink::KnowledgeGraph& g) {
  if (s.lexicon.empty()) return {};
  auto path = require(s.lexicon, "lexicon");
  std::vector<std::string> warnings;
  auto lex = load_data(path, [&] { return relink::Lexicon::from_file(path, &g, &warnings); });
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return lex;
}

void add_providers(relink::Explainer& ex, const Settings& s) {
  if (!s.explanations.empty()) {
    auto path = require(s.explanations, "explanation fixture");
    ex.add_provider(std::make_shared<relink::FixtureProvider>(
        load_data(path, [&] { return relink::FixtureProvider::from_file(path); })));
  }
  if (auto http = relink::HttpProviderConfig::from_env()) {
    ex.add_provider(std::make_shared<relink::HttpProvider>(*http));
  }
}

relink::PatternClassifier load_model(const Settings& s) {
  auto path = require(s.model, "model");
  return load_data(path, [&] { return relink::PatternClassifier::load_file(path); });
}

relink::LinkConfig link_config(const Settings& s) {
  relink::LinkConfig cfg;
  cfg.max_depth = s.max_depth;
  try {
    cfg.validation = relink::parse_validation_mode(s.validation);
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitUsage, e.what());
  }
  return cfg;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

std::string pattern_text(const relink::SubgraphPattern& sp) {
  std::ostringstream out;
  for (std::size_t i = 0; i < sp.edges.size(); ++i) {
    const auto& e = sp.edges[i];
    if (i) out << ", ";
    out << "<" << e.src << " " << e.relation.local() << " " << e.dst << ">";
  }
  for (const auto& [v, t] : sp.types) out << " " << v << ":" << t.local();
  return out.str();
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Settings& s, const std::string& path) {
  Settings local = s;
  if (!path.empty()) local.kg = path;
  auto g = load_kg(local);
  auto sum = g.summary();
  if (s.format == "text") {
    std::cout << "triples     " << sum.triples << '\n'
              << "predicates  " << sum.predicates << '\n'
              << "types       " << sum.types << '\n'
              << "entities    " << sum.entities << '\n';
  } else {
    print_json({{"triples", sum.triples},
                {"predicates", sum.predicates},
                {"types", sum.types},
                {"entities", sum.entities}});
  }
  for (const auto& d : g.type_dictionary().discarded) std::cerr << "note: " << d << '\n';
  return kExitOk;
}

int cmd_link(const Settings& s, const std::vector<std::string>& words, bool trace) {
  std::string phrase;
  for (const auto& w : words) phrase += (phrase.empty() ? "" : " ") + w;
  if (relink::normalize_phrase(phrase).empty()) throw CliError(kExitUsage, "empty phrase");
  auto g = load_kg(s);
  relink::PhraseLinker pl(g, load_lexicon(s, g), load_stopwords(s));
  relink::Explainer ex;
  add_providers(ex, s);
  auto clf = load_model(s);
  relink::Assembler as(g, ex, pl, clf, link_config(s));
  auto r = as.link(phrase);
  for (const auto& w : ex.warnings()) std::cerr << "warning: " << w << '\n';
  if (s.format == "text") {
    std::cout << r.phrase << ": "
              << (r.pattern ? relink::shape_name(*r.pattern) + " " + pattern_text(*r.pattern) : "no match")
              << '\n';
    if (trace) {
      for (const auto& step : r.trace) std::cout << "  " << step.dump() << '\n';
    }
  } else {
    auto j = relink::to_json(r);
    if (!trace) j.erase("trace");
    print_json(j);
  }
  return r.pattern ? kExitOk : kExitNoMatch;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(require(path, "phrase list"));
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto p = relink::normalize_phrase(line);
    if (!p.empty() && p.front() != '#') out.push_back(p);
  }
  return out;
}

// Tab-separated: phrase, label, sentence. Lines starting with '#' are skipped.
std::vector<relink::TrainingExample> read_labeled(const std::string& path,
                                                  const relink::PhraseLinker& pl) {
  std::ifstream in(require(path, "labeled seed file"));
  std::vector<relink::TrainingExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    auto where = path + ": line " + std::to_string(lineno);
    if (cols.size() != 3) throw CliError(kExitData, where + ": expected 3 tab-separated columns");
    relink::TrainingExample e;
    e.phrase = relink::normalize_phrase(cols[0]);
    e.sentence = cols[2];
    auto label = relink::parse_meta_pattern(cols[1]);
    if (!label || *label == relink::MetaPattern::RP1) {
      throw CliError(kExitData, where + ": label must be RP2, RP3 or RP4");
    }
    auto tokens = relink::tokenize_sentence(e.sentence);
    auto elems = pl.detect(tokens);
    if (elems.relations.size() < 2) {
      throw CliError(kExitData, where + ": found " + std::to_string(elems.relations.size()) +
                                    " relation mention(s), need at least 2");
    }
    e.masked = relink::mask(tokens, elems);
    e.label = *label;
    e.pattern = relink::instantiate(*label, {elems.relations[0].relation, elems.relations[1].relation});
    e.origin = relink::Origin::manual;
    out.push_back(std::move(e));
  }
  return out;
}

int cmd_collect(const Settings& s, const std::string& phrases, std::size_t kappa,
                const std::string& labeled, const std::string& out_path) {
  auto g = load_kg(s);
  relink::PhraseLinker pl(g, load_lexicon(s, g), load_stopwords(s));
  std::vector<relink::TrainingExample> examples;
  if (!phrases.empty()) {
    if (kappa == 0) throw CliError(kExitUsage, "--kappa must be positive");
    relink::Explainer ex;
    add_providers(ex, s);
    std::vector<relink::HarvestSkip> skips;
    examples = relink::harvest(read_lines(phrases), g, ex, pl, kappa, &skips);
    for (const auto& sk : skips) std::cerr << "skip: " << sk.phrase << ": " << sk.reason << '\n';
  }
  if (!labeled.empty()) {
    auto manual = read_labeled(labeled, pl);
    examples.insert(examples.end(), manual.begin(), manual.end());
  }
  if (phrases.empty() && labeled.empty()) {
    throw CliError(kExitUsage, "collect-training needs --phrases and/or --labeled");
  }
  if (out_path.empty() || out_path == "-") {
    relink::write_examples(std::cout, examples);
  } else {
    std::ofstream out(out_path);
    if (!out) throw CliError(kExitUsage, "cannot write " + out_path);
    relink::write_examples(out, examples);
  }
  std::cerr << "collected " << examples.size() << " example(s)\n";
  return kExitOk;
}

std::vector<relink::TrainingExample> load_training(const std::vector<std::string>& paths,
                                                   const std::string& review) {
  std::vector<relink::TrainingExample> xs;
  for (const auto& p : paths) {
    auto path = require(p, "training data");
    auto part = load_data(path, [&] { return relink::read_examples_file(path); });
    xs.insert(xs.end(), part.begin(), part.end());
  }
  if (!review.empty()) {
    std::ifstream in(require(review, "review file"));
    xs = load_data(review, [&] { return relink::apply_review(std::move(xs), in); });
  }
  return xs;
}

int cmd_train(const Settings& s, const std::vector<std::string>& training, const std::string& review,
              const std::string& model_out, relink::TrainConfig tc) {
  tc.seed = s.seed;
  auto xs = load_training(training, review);
  relink::TrainReport rep;
  auto model = load_data("training data", [&] { return relink::train(xs, tc, &rep); });
  std::ofstream out(model_out);
  if (!out) throw CliError(kExitUsage, "cannot write " + model_out);
  out << model.to_json().dump() << '\n';
  nlohmann::json j = {{"examples", xs.size()},
                      {"class_counts", rep.class_counts},
                      {"training_accuracy", rep.training_accuracy},
                      {"features", rep.features},
                      {"model", model_out}};
  if (s.format == "text") {
    std::cout << "trained on " << xs.size() << " examples, " << rep.features
              << " features, training accuracy " << rep.training_accuracy << '\n';
  } else {
    print_json(j);
  }
  return kExitOk;
}

int cmd_eval(const Settings& s, const std::string& gold_path, const std::vector<std::string>& method_names,
             const std::string& report_json, bool timing, int reps,
             const std::vector<std::string>& training, const std::string& ablation) {
  auto gold = load_data(gold_path, [&] { return relink::read_gold_file(require(gold_path, "gold file")); });
  if (gold.empty()) throw CliError(kExitData, gold_path + ": no gold entries");
  std::vector<relink::Method> methods;
  try {
    for (const auto& m : method_names) methods.push_back(relink::parse_method(m));
  } catch (const std::invalid_argument& e) {
    throw CliError(kExitUsage, e.what());
  }
  auto g = load_kg(s);
  relink::PhraseLinker pl(g, load_lexicon(s, g), load_stopwords(s));
  relink::Explainer ex;
  add_providers(ex, s);
  relink::TrainConfig tc;
  tc.seed = s.seed;
  relink::PatternClassifier clf;
  if (!training.empty()) {
    auto xs = load_training(training, "");
    clf = load_data("training data", [&] { return relink::train(xs, tc); });
  } else {
    clf = load_model(s);
  }
  relink::Assembler as(g, ex, pl, clf, link_config(s));
  relink::Pipeline p{g, ex, pl, as};
  relink::EvalOptions opts;
  opts.timing = timing;
  opts.repetitions = reps;
  auto rep = relink::evaluate(gold, methods, p, opts);
  auto j = relink::to_json(rep);
  j["seed"] = s.seed;
  if (!ablation.empty()) {
    auto xs = load_training({ablation}, "");
    auto ab = load_data(ablation, [&] { return relink::ablate_masking(xs, tc); });
    j["ablation"] = relink::to_json(ab);
  }
  if (s.format == "text" || !report_json.empty()) std::cout << relink::format_table(rep);
  if (j.contains("ablation")) {
    const auto& a = j["ablation"];
    if (s.format == "text" || !report_json.empty()) {
      std::cout << "masking ablation: masked F1 " << a["masked"]["f1"].get<double>() << ", unmasked F1 "
                << a["unmasked"]["f1"].get<double>() << '\n';
    }
  }
  if (!report_json.empty()) {
    std::ofstream out(report_json);
    if (!out) throw CliError(kExitUsage, "cannot write " + report_json);
    out << j.dump(2) << '\n';
  } else if (s.format != "text") {
    print_json(j);
  }
  return kExitOk;
}

int cmd_mask(const Settings& s, const std::vector<std::string>& words) {
  std::string sentence;
  for (const auto& w : words) sentence += (sentence.empty() ? "" : " ") + w;
  auto g = load_kg(s);
  relink::PhraseLinker pl(g, load_lexicon(s, g), load_stopwords(s));
  auto tokens = relink::tokenize_sentence(sentence);
  auto elems = pl.detect(tokens);
  auto ms = relink::mask(tokens, elems);
  nlohmann::json j = {{"masked", ms.text()}, {"relation_count", ms.relation_count}};
  if (!s.model.empty() && ms.relation_count >= 2) {
    auto pred = load_model(s).predict(ms);
    j["pattern"] = relink::pattern_name(pred.pattern);
    j["confidence"] = pred.confidence;
  }
  if (s.format == "text") {
    std::cout << ms.text();
    if (j.contains("pattern")) std::cout << "\t" << j["pattern"].get<std::string>();
    std::cout << '\n';
  } else {
    print_json(j);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Links compound phrases to knowledge-graph subgraph patterns"};
  app.require_subcommand(1);
  Settings s;
  Opts o;
  app.add_option("--config", s.config, "JSON file with default settings")->envname("RELINK_CONFIG");
  o.kg = app.add_option("--kg", s.kg, "N-Triples knowledge graph")->envname("RELINK_KG");
  o.lexicon = app.add_option("--lexicon", s.lexicon, "JSON lexicon")->envname("RELINK_LEXICON");
  o.explanations = app.add_option("--explanations", s.explanations, "JSON explanation fixture")
                       ->envname("RELINK_EXPLANATIONS");
  o.stopwords = app.add_option("--stopwords", s.stopwords, "stopword list")->envname("RELINK_STOPWORDS");
  o.model = app.add_option("--model", s.model, "classifier model JSON")->envname("RELINK_MODEL");
  o.validation = app.add_option("--validation", s.validation, "strict or permissive")
                     ->check(CLI::IsMember({"strict", "permissive"}))
                     ->envname("RELINK_VALIDATION");
  o.max_depth = app.add_option("--max-depth", s.max_depth, "nested phrase recursion limit")
                    ->check(CLI::PositiveNumber)
                    ->envname("RELINK_MAX_DEPTH");
  o.seed = app.add_option("--seed", s.seed, "training seed")->envname("RELINK_SEED");
  o.format = app.add_option("--format", s.format, "text or json")
                 ->check(CLI::IsMember({"text", "json"}))
                 ->envname("RELINK_FORMAT");

  auto* ingest = app.add_subcommand("ingest", "load a graph and print counts");
  std::string ingest_path;
  ingest->add_option("path", ingest_path, "N-Triples file (defaults to --kg)");

  auto* link = app.add_subcommand("link", "link one phrase");
  std::vector<std::string> phrase;
  bool trace = false;
  link->add_option("phrase", phrase, "phrase to link")->required();
  link->add_flag("--trace", trace, "include the step trace");

  auto* collect = app.add_subcommand("collect-training", "harvest training examples");
  std::string phrases_path, labeled_path, collect_out;
  std::size_t kappa = 500;
  collect->add_option("--phrases", phrases_path, "phrase list, one per line");
  collect->add_option("--kappa", kappa, "stop after this many examples");
  collect->add_option("--labeled", labeled_path, "hand-labelled TSV: phrase, label, sentence");
  collect->add_option("--out", collect_out, "output JSON lines (default stdout)");

  auto* train = app.add_subcommand("train", "train the pattern classifier");
  std::vector<std::string> training;
  std::string review, model_out;
  relink::TrainConfig tc;
  train->add_option("--training", training, "training JSON lines")->required();
  train->add_option("--review", review, "review decisions JSON lines");
  train->add_option("--model-out", model_out, "where to write the model")->required();
  train->add_option("--epochs", tc.epochs, "SGD epochs")->check(CLI::PositiveNumber);
  train->add_option("--learning-rate", tc.learning_rate, "SGD step size");
  train->add_option("--l2", tc.l2, "L2 penalty");

  auto* eval = app.add_subcommand("eval", "score methods against a gold set");
  std::string gold_path, report_json, ablation;
  std::vector<std::string> methods = {"ours", "data-driven", "similarity", "keyword"};
  std::vector<std::string> eval_training;
  bool timing = false;
  int reps = 20;
  eval->add_option("--gold", gold_path, "gold JSON lines")->required();
  eval->add_option("--methods", methods, "methods to run")->delimiter(',');
  eval->add_option("--report-json", report_json, "write the JSON report here");
  eval->add_flag("--timing", timing, "measure latency (makes the report non-deterministic)");
  eval->add_option("--reps", reps, "timing repetitions")->check(CLI::PositiveNumber);
  eval->add_option("--training", eval_training, "train the classifier instead of loading --model");
  eval->add_option("--ablation", ablation, "labelled set for the masking ablation");

  auto* maskcmd = app.add_subcommand("mask", "mask relation mentions in a sentence");
  std::vector<std::string> sentence;
  maskcmd->add_option("sentence", sentence, "sentence")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    apply_config_file(s, o);
    if (*ingest) return cmd_ingest(s, ingest_path);
    if (*link) return cmd_link(s, phrase, trace);
    if (*collect) return cmd_collect(s, phrases_path, kappa, labeled_path, collect_out);
    if (*train) return cmd_train(s, training, review, model_out, tc);
    if (*eval) return cmd_eval(s, gold_path, methods, report_json, timing, reps, eval_training, ablation);
    if (*maskcmd) return cmd_mask(s, sentence);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
