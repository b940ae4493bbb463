#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace relink;
using namespace testing_support;

namespace {

const std::vector<GoldEntry>& gold() {
  static auto g = read_gold_file(data_path("gold.jsonl"));
  return g;
}

SubgraphPattern random_pattern(std::mt19937& rng, int max_edges) {
  std::uniform_int_distribution<int> ne(1, max_edges), var(0, 3), rel(0, 2);
  const char* names[] = {"x", "y", "z", "z2"};
  SubgraphPattern sp;
  for (int k = ne(rng); k > 0; --k) sp.edges.push_back({names[var(rng)], ex_pred(rel(rng)), names[var(rng)]});
  return sp;
}

SubgraphPattern renamed(const SubgraphPattern& sp, const std::map<std::string, std::string>& m) {
  SubgraphPattern out;
  for (const auto& e : sp.edges) out.edges.push_back({m.at(e.src), e.relation, m.at(e.dst)});
  return out;
}

}  // namespace

// Hand-computed: one of two gold edges recovered with no spurious edges.
TEST(Score, PartialCredit) {
  auto gold2 = edges({{"x", dbo("spouse"), "z"}, {"z", dbo("mother"), "y"}});
  auto s = score(instantiate(MetaPattern::RP1, {dbo("spouse")}), gold2);
  EXPECT_DOUBLE_EQ(s.p, 1.0);
  EXPECT_DOUBLE_EQ(s.r, 0.5);
  EXPECT_DOUBLE_EQ(s.f1, 2.0 / 3.0);
  EXPECT_FALSE(exact_match(instantiate(MetaPattern::RP1, {dbo("spouse")}), gold2));
}

TEST(Score, NoMatchScoresZero) {
  auto s = score(std::nullopt, edges({{"x", dbo("spouse"), "y"}}));
  EXPECT_EQ(s, (Score{0, 0, 0}));
  EXPECT_THROW(score(std::nullopt, SubgraphPattern{}), std::invalid_argument);
}

TEST(Score, VariableNamesDoNotMatter) {
  auto a = edges({{"x", dbo("spouse"), "z"}, {"z", dbo("mother"), "y"}});
  auto b = edges({{"p", dbo("spouse"), "q"}, {"q", dbo("mother"), "r"}});
  EXPECT_TRUE(exact_match(b, a));
  // Inconsistent renaming only earns one edge.
  auto c = edges({{"p", dbo("spouse"), "q"}, {"w", dbo("mother"), "r"}});
  EXPECT_EQ(matched_edges(c, a), 1u);
}

TEST(Score, TypesAreIgnored) {
  auto a = edges({{"x", dbo("spouse"), "y"}});
  auto b = a;
  b.types.emplace("x", dbo("Person"));
  EXPECT_TRUE(exact_match(b, a));
}

TEST(Score, DuplicateEdgesCountAsMultiset) {
  auto gold1 = edges({{"x", dbo("spouse"), "y"}});
  auto twice = edges({{"x", dbo("spouse"), "y"}, {"x", dbo("spouse"), "y"}});
  EXPECT_EQ(matched_edges(twice, gold1), 1u);
  EXPECT_DOUBLE_EQ(score(twice, gold1).p, 0.5);
}

// Property: the alignment search equals exhaustive enumeration and is
// invariant under renaming.
TEST(ScoreProperty, MatchedEdgesEqualsBruteForce) {
  std::mt19937 rng(42);
  std::map<std::string, std::string> perm = {{"x", "q1"}, {"y", "q2"}, {"z", "q3"}, {"z2", "q4"}};
  for (int trial = 0; trial < 400; ++trial) {
    auto p = random_pattern(rng, 4), g = random_pattern(rng, 4);
    auto m = matched_edges(p, g);
    EXPECT_EQ(m, brute_force_matched_edges(p, g));
    EXPECT_EQ(matched_edges(renamed(p, perm), g), m);
    EXPECT_EQ(matched_edges(g, p), m);  // symmetric
    auto s = score(p, g);
    EXPECT_GE(s.f1, 0.0);
    EXPECT_LE(s.f1, 1.0);
    EXPECT_TRUE(exact_match(p, p));
  }
}

TEST(Gold, FileIsWellFormed) {
  EXPECT_EQ(gold().size(), 20u);
  std::set<std::string> phrases;
  for (const auto& g : gold()) phrases.insert(g.phrase);
  EXPECT_EQ(phrases.size(), 20u);
  std::istringstream bad("{\"phrase\":\"x\"}\n");
  EXPECT_THROW(read_gold(bad), std::invalid_argument);
}

TEST(Baselines, KeywordAndSimilarity) {
  auto& g = fixture().g;
  EXPECT_EQ(keyword_match("birth place", g)->edges, instantiate(MetaPattern::RP1, {dbo("birthPlace")}).edges);
  EXPECT_FALSE(keyword_match("parents", g));  // no stemming
  EXPECT_EQ(similarity_search("parents", g)->edges, instantiate(MetaPattern::RP1, {dbo("parent")}).edges);
  EXPECT_EQ(similarity_search("grandparent", g)->edges, instantiate(MetaPattern::RP1, {dbo("parent")}).edges);
  EXPECT_EQ(parse_method("Keyword"), Method::keyword_match);
  EXPECT_THROW(parse_method("sibkb"), std::invalid_argument);
}

TEST(Evaluate, ReportShapeAndDeterminism) {
  auto& f = fixture();
  auto rep = evaluate(gold(), {std::begin(kAllMethods), std::end(kAllMethods)}, *f.pipeline);
  ASSERT_EQ(rep.methods.size(), 4u);
  EXPECT_EQ(rep.gold_size, 20u);
  EXPECT_FALSE(rep.methods[0].timing);
  auto again = evaluate(gold(), {std::begin(kAllMethods), std::end(kAllMethods)}, *f.pipeline);
  EXPECT_EQ(to_json(rep).dump(), to_json(again).dump());
  EXPECT_NE(format_table(rep).find("OurApproach"), std::string::npos);
  for (const auto& mr : rep.methods) {
    double p = 0;
    for (const auto& pr : mr.phrases) p += pr.score.p;
    EXPECT_NEAR(mr.precision, p / 20.0, 1e-12);
  }
}

TEST(Evaluate, TimingWhenRequested) {
  auto& f = fixture();
  EvalOptions o;
  o.timing = true;
  o.repetitions = 2;
  auto rep = evaluate(gold(), {Method::keyword_match}, *f.pipeline, o);
  ASSERT_TRUE(rep.methods[0].timing);
  EXPECT_EQ(rep.methods[0].timing->repetitions, 2);
  EXPECT_GT(rep.methods[0].timing->mean_seconds, 0.0);
}

// Hand-computed: two classes, one RP3 mistaken for RP2.
TEST(Ablation, ClassificationMetrics) {
  using M = MetaPattern;
  auto m = classification_metrics({M::RP2, M::RP2, M::RP3, M::RP3}, {M::RP2, M::RP2, M::RP2, M::RP3});
  // RP2: p 2/3 r 1 f 0.8; RP3: p 1 r 1/2 f 2/3
  EXPECT_NEAR(m.precision, (2.0 / 3.0 + 1.0) / 2, 1e-12);
  EXPECT_NEAR(m.recall, (1.0 + 0.5) / 2, 1e-12);
  EXPECT_NEAR(m.f1, (0.8 + 2.0 / 3.0) / 2, 1e-12);
  EXPECT_THROW(classification_metrics({M::RP2}, {}), std::invalid_argument);
}

TEST(Ablation, RunsOnLabeledSet) {
  auto xs = read_examples_file(data_path("labeled.jsonl"));
  auto a = ablate_masking(xs);
  EXPECT_EQ(a.folds, 5u);
  EXPECT_EQ(a.examples, xs.size());
  EXPECT_GE(a.masked.f1, 0.0);
  EXPECT_LE(a.masked.f1, 1.0);
  EXPECT_THROW(ablate_masking(xs, {}, 1), std::invalid_argument);
}
