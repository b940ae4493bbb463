#include <gtest/gtest.h>

#include "support.hpp"

using namespace relink;
using namespace testing_support;

namespace {

bool has_step(const Trace& t, const std::string& name) {
  return std::any_of(t.begin(), t.end(), [&](const nlohmann::json& j) { return j.at("step") == name; });
}

// Small chain graph with its own explanations, for recursion behaviour.
struct Chain {
  KnowledgeGraph g = load_string(
      "<http://ex.org/a> <http://ex.org/parent> <http://ex.org/b> .\n"
      "<http://ex.org/b> <http://ex.org/parent> <http://ex.org/c> .\n"
      "<http://ex.org/c> <http://ex.org/parent> <http://ex.org/d> .\n"
      "<http://ex.org/d> <http://ex.org/parent> <http://ex.org/e> .\n");
  Explainer ex;
  PhraseLinker pl{g, Lexicon{}};
  PatternClassifier clf;  // untrained: every prediction falls to RP2

  Chain() {
    ex.add_provider(std::make_shared<FixtureProvider>(std::map<std::string, std::string>{
        {"grandparent", "a parent of your parent"},
        {"great-grandparent", "a parent of your grandparent"},
        {"great-great-grandparent", "a parent of your great-grandparent"},
        {"ouroboros", "a parent of your ouroboros"},
        {"nobody", "a person without qualities"}}));
  }
  LinkResult link(const std::string& p, LinkConfig cfg = {}) { return Assembler(g, ex, pl, clf, cfg).link(p); }
};

Iri ex_parent() { return Iri("http://ex.org/parent"); }

}  // namespace

TEST(Assembler, DirectMatchIsDepthZero) {
  auto r = fixture().as->link("founder");
  ASSERT_TRUE(r.pattern);
  EXPECT_EQ(r.pattern->edges, instantiate(MetaPattern::RP1, {dbo("founder")}).edges);
  EXPECT_EQ(r.depth, 0);
  EXPECT_TRUE(has_step(r.trace, "direct-match"));
}

TEST(Assembler, MotherInLaw) {
  auto r = fixture().as->link("mother-in-law");
  ASSERT_TRUE(r.pattern);
  EXPECT_TRUE(same_edges_up_to_renaming(*r.pattern, edges({{"x", dbo("spouse"), "z"}, {"z", dbo("mother"), "y"}})));
  EXPECT_EQ(r.depth, 1);
  EXPECT_TRUE(has_step(r.trace, "classify"));
  EXPECT_TRUE(has_step(r.trace, "result"));
}

TEST(Assembler, SwappedCandidateWhenPredictedOrderHasNoInstance) {
  // The sentence mentions mother before spouse; only spouse-then-mother exists.
  auto r = fixture().as->link("mother-in-law");
  bool rejected_first = false;
  for (const auto& s : r.trace) {
    if (s["step"] == "candidate") {
      rejected_first = s["accepted"] == false;
      break;
    }
  }
  EXPECT_TRUE(rejected_first);
}

TEST(Assembler, TypeAttachedWhenSatisfiable) {
  auto r = fixture().as->link("mother-in-law");
  ASSERT_TRUE(r.pattern);
  EXPECT_EQ(r.pattern->types.size(), 1u);
  EXPECT_EQ(r.pattern->types.begin()->second, dbo("Person"));
  EXPECT_TRUE(has_instance(fixture().g, *r.pattern));
}

TEST(Assembler, NestedPhraseBecomesSubpattern) {
  auto r = fixture().as->link("great-grandparent");
  ASSERT_TRUE(r.pattern);
  EXPECT_EQ(r.pattern->edges.size(), 3u);
  EXPECT_EQ(r.depth, 2);
  EXPECT_TRUE(has_step(r.trace, "nested"));
  for (const auto& e : r.pattern->edges) {
    EXPECT_EQ(e.relation, dbo("parent"));
    EXPECT_FALSE(is_pseudo(e.relation));
  }
}

TEST(Assembler, ExplanationMissIsNoMatch) {
  auto r = fixture().as->link("xyzzy");
  EXPECT_FALSE(r.pattern);
  EXPECT_TRUE(has_step(r.trace, "explanation-miss"));
  EXPECT_THROW(fixture().as->link("  "), std::invalid_argument);
}

TEST(Assembler, DepthLimitStopsRecursion) {
  Chain c;
  auto deep = c.link("great-great-grandparent");
  ASSERT_TRUE(deep.pattern);
  EXPECT_EQ(deep.pattern->edges.size(), 4u);
  EXPECT_EQ(deep.depth, 3);

  LinkConfig shallow;
  shallow.max_depth = 2;
  auto cut = c.link("great-great-grandparent", shallow);
  EXPECT_TRUE(has_step(cut.trace, "recursion-limit"));
  EXPECT_LE(cut.depth, 2);

  LinkConfig bad;
  bad.max_depth = 0;
  EXPECT_THROW(c.link("grandparent", bad), std::invalid_argument);
}

TEST(Assembler, CycleIsDetected) {
  Chain c;
  auto r = c.link("ouroboros");
  EXPECT_TRUE(has_step(r.trace, "cycle"));
  // The self-reference is dropped, leaving a single parent edge.
  ASSERT_TRUE(r.pattern);
  EXPECT_EQ(r.pattern->edges, instantiate(MetaPattern::RP1, {ex_parent()}).edges);
}

TEST(Assembler, NoRelationsIsNoMatch) {
  Chain c;
  auto r = c.link("nobody");
  EXPECT_FALSE(r.pattern);
  EXPECT_TRUE(has_step(r.trace, "no-match"));
}

TEST(Assembler, PermissiveValidationAcceptsWithoutInstances) {
  auto& f = fixture();
  MetaElements m;
  m.relations = {{{0, 1}, dbo("mother"), 1.0}, {{1, 2}, dbo("founder"), 1.0}};
  EXPECT_FALSE(f.as->assemble_with_pattern(m, MetaPattern::RP2));
  LinkConfig cfg;
  cfg.validation = ValidationMode::permissive;
  Assembler loose(f.g, f.ex, *f.pl, f.clf, cfg);
  auto sp = loose.assemble_with_pattern(m, MetaPattern::RP3);
  ASSERT_TRUE(sp);
  EXPECT_EQ(shape_of(*sp), MetaPattern::RP3);
  EXPECT_THROW(parse_validation_mode("lenient"), std::invalid_argument);
}

TEST(Assembler, CandidateOrder) {
  auto& f = fixture();
  using P = std::pair<MetaPattern, bool>;
  EXPECT_EQ(f.as->candidate_order(MetaPattern::RP2),
            (std::vector<P>{{MetaPattern::RP2, false}, {MetaPattern::RP2, true}, {MetaPattern::RP3, false},
                            {MetaPattern::RP4, false}}));
  EXPECT_EQ(f.as->candidate_order(MetaPattern::RP4),
            (std::vector<P>{{MetaPattern::RP4, false}, {MetaPattern::RP2, false}, {MetaPattern::RP2, true},
                            {MetaPattern::RP3, false}}));
  LinkConfig strict;
  strict.data_driven_fallback = false;
  Assembler only(f.g, f.ex, *f.pl, f.clf, strict);
  EXPECT_EQ(only.candidate_order(MetaPattern::RP3), (std::vector<P>{{MetaPattern::RP3, false}}));
}

TEST(Assembler, TraceSerializes) {
  auto r = fixture().as->link("mother-in-law");
  auto j = to_json(r);
  EXPECT_EQ(j["shape"], "RP2");
  EXPECT_EQ(j["phrase"], "mother-in-law");
  EXPECT_TRUE(j["trace"].is_array());
}

TEST(DataDriven, IgnoresClassifierAndNeedsTwoRelations) {
  auto& f = fixture();
  auto s = tokenize_sentence("the mother of a person's spouse");
  Trace t;
  auto sp = link_data_driven(f.pl->detect(s), f.g, &t);
  ASSERT_TRUE(sp);
  EXPECT_TRUE(sp->types.empty());
  EXPECT_TRUE(same_edges_up_to_renaming(*sp, edges({{"x", dbo("spouse"), "z"}, {"z", dbo("mother"), "y"}})));
  // Every shape is retrieved, not just the first hit.
  EXPECT_EQ(std::count_if(t.begin(), t.end(), [](const auto& j) { return j["step"] == "retrieve"; }), 4);
  EXPECT_FALSE(link_data_driven(f.pl->detect(tokenize_sentence("a parent")), f.g));
}

// Property: every accepted strict-mode result has an instance in the graph.
TEST(AssemblerProperty, StrictResultsAreInstantiable) {
  auto& f = fixture();
  auto fp = FixtureProvider::from_file(data_path("explanations.json"));
  for (const auto& [phrase, _] : fp.entries()) {
    auto r = f.as->link(phrase);
    if (!r.pattern) continue;
    EXPECT_TRUE(brute_force_matched_edges(*r.pattern, *r.pattern) == r.pattern->edges.size());
    EXPECT_TRUE(has_instance(f.g, *r.pattern)) << phrase;
    EXPECT_TRUE(r.pattern->connected()) << phrase;
    for (const auto& e : r.pattern->edges) EXPECT_FALSE(is_pseudo(e.relation)) << phrase;
    EXPECT_LE(r.depth, f.as->config().max_depth);
  }
}

// Property: splicing keeps x as the source and y as the sink, and every
// inner variable is fresh.
TEST(AssemblerProperty, SpliceKeepsEndpoints) {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<MetaPattern> shapes = {MetaPattern::RP2, MetaPattern::RP3, MetaPattern::RP4};
  for (int trial = 0; trial < 200; ++trial) {
    auto make = [&](int depth) {
      detail::Unit u = detail::unit_of({{0, 1}, ex_pred(pick(rng)), 1.0});
      for (int d = 0; d < depth; ++d) {
        detail::Unit v = detail::unit_of({{0, 1}, ex_pred(pick(rng)), 1.0});
        u = detail::splice(shapes[pick(rng) % 3], u, v);
      }
      return u;
    };
    auto a = make(pick(rng)), b = make(pick(rng));
    auto mp = shapes[pick(rng) % 3];
    auto out = detail::splice(mp, a, b);
    EXPECT_EQ(out.pattern.edges.size(), a.pattern.edges.size() + b.pattern.edges.size());
    auto vars = out.pattern.variables();
    EXPECT_TRUE(vars.count("x"));
    EXPECT_TRUE(vars.count("y"));
    EXPECT_EQ(vars.size(), a.pattern.variables().size() + b.pattern.variables().size() - 1);
    EXPECT_TRUE(out.pattern.connected());
  }
}
