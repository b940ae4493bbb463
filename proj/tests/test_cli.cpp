#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <string>

#include "support.hpp"

using testing_support::data_path;

namespace {

struct Run {
  int code;
  std::string out;
};

std::string base_flags() {
  return " --kg " + data_path("kg.nt") + " --lexicon " + data_path("lexicon.json") + " --explanations " +
         data_path("explanations.json") + " --stopwords " + data_path("stopwords.txt") + " --model " +
         data_path("model.json");
}

Run run(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + std::string(RELINK_CLI) + " " + args + " 2>/dev/null";
  Run r{0, {}};
  FILE* p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace

TEST(Cli, LinkJson) {
  auto r = run(base_flags() + " link mother-in-law");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["shape"], "RP2");
  EXPECT_FALSE(j.contains("trace"));
  auto t = nlohmann::json::parse(run(base_flags() + " link --trace mother-in-law").out);
  EXPECT_TRUE(t["trace"].is_array());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run(base_flags() + " link xyzzy").code, 3);
  EXPECT_EQ(run(base_flags() + " --kg /nonexistent.nt link grandparent").code, 2);
  EXPECT_EQ(run(" link grandparent").code, 2);  // no graph configured
  EXPECT_EQ(run(base_flags() + " frobnicate").code, 2);
  EXPECT_EQ(run(base_flags() + " --validation lenient link grandparent").code, 2);

  auto bad = testing::TempDir() + "relink_bad.nt";
  std::ofstream(bad) << "<http://ex.org/a> <http://ex.org/p> .\n";
  EXPECT_EQ(run(" --kg " + bad + " ingest").code, 4);
}

TEST(Cli, EnvironmentAndConfigPrecedence) {
  auto cfg = testing::TempDir() + "relink_cfg.json";
  std::ofstream(cfg) << nlohmann::json{{"kg", "/nonexistent-from-config.nt"}}.dump();
  // Config alone points at a missing file.
  EXPECT_EQ(run(" --config " + cfg + " ingest").code, 2);
  // The environment overrides the config file.
  EXPECT_EQ(run(" --config " + cfg + " ingest", "RELINK_KG=" + data_path("kg.nt")).code, 0);
  // A flag overrides the environment.
  EXPECT_EQ(run(" --kg " + data_path("kg.nt") + " ingest", "RELINK_KG=/nonexistent.nt").code, 0);
}

TEST(Cli, ConfigPathsAreRelativeToTheFile) {
  EXPECT_EQ(run(" --config " + data_path("relink.json") + " link mother-in-law").code, 0);
  EXPECT_EQ(run(" --config " + data_path("relink.json") + " link co-sister").code, 3);
}

TEST(Cli, IngestCounts) {
  auto r = run(" --kg " + data_path("kg.nt") + " ingest");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_GT(j["triples"].get<int>(), 10000);
  EXPECT_EQ(j["types"], 4);
}

TEST(Cli, MaskAndClassify) {
  auto r = run(base_flags() + " --format text mask a male child");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "a *gender *child\tRP2\n");
}

TEST(Cli, CollectTrainEvalRoundTrip) {
  auto dir = testing::TempDir();
  auto harvested = dir + "relink_harvest.jsonl", model = dir + "relink_model.json";
  auto c = run(base_flags() + " collect-training --phrases " + data_path("harvest_phrases.txt") +
               " --kappa 10 --out " + harvested);
  ASSERT_EQ(c.code, 0);
  std::ifstream a(harvested), b(data_path("harvest_golden.jsonl"));
  std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);

  auto t = run(base_flags() + " train --training " + data_path("labeled.jsonl") + " --model-out " + model);
  ASSERT_EQ(t.code, 0);
  std::ifstream m1(model), m2(data_path("model.json"));
  std::string s1((std::istreambuf_iterator<char>(m1)), {}), s2((std::istreambuf_iterator<char>(m2)), {});
  EXPECT_EQ(s1, s2);  // the bundled model is reproducible

  auto e = run(base_flags() + " eval --gold " + data_path("gold.jsonl") + " --methods ours,keyword");
  ASSERT_EQ(e.code, 0);
  auto j = nlohmann::json::parse(e.out);
  EXPECT_TRUE(j["methods"].contains("OurApproach"));
  EXPECT_FALSE(j["methods"].contains("DataDriven"));
  EXPECT_EQ(run(base_flags() + " eval --gold " + data_path("gold.jsonl") + " --methods sibkb").code, 2);
}

// Property: arbitrary phrases only ever produce a result or a clean no-match,
// and arbitrary unknown options are usage errors.
TEST(CliProperty, ExitCodesStayInContract) {
  std::mt19937 rng(21);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz-";
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1), len(1, 12);
  for (int trial = 0; trial < 12; ++trial) {
    std::string phrase;
    for (std::size_t k = len(rng); k > 0; --k) phrase.push_back(alphabet[ch(rng)]);
    if (phrase.front() == '-') phrase.front() = 'a';
    auto r = run(base_flags() + " link " + phrase);
    EXPECT_TRUE(r.code == 0 || r.code == 3) << phrase << " -> " << r.code;
    EXPECT_EQ(run(base_flags() + " link --" + phrase + " x").code, 2) << phrase;
  }
}
