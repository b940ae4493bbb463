#include <gtest/gtest.h>

#include "support.hpp"

using namespace relink;
using namespace testing_support;

namespace {

std::vector<std::string> relation_locals(const MetaElements& m) {
  std::vector<std::string> out;
  for (const auto& r : m.relations) out.emplace_back(r.relation.local());
  return out;
}

MetaElements detect(const std::string& s) { return fixture().pl->detect(tokenize_sentence(s)); }

}  // namespace

// Hand-computed: latitude -> attitude is one deletion plus one insertion.
TEST(Similarity, HandComputedValues) {
  EXPECT_EQ(levenshtein("latitude", "attitude"), 2u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_DOUBLE_EQ(edit_similarity("latitude", "attitude"), 0.75);
  EXPECT_DOUBLE_EQ(jaccard({"birth", "place"}, {"place"}), 0.5);
  EXPECT_DOUBLE_EQ(similarity_score({"latitude"}, {"attitude"}), 0.225);
  EXPECT_LT(similarity_score({"latitude"}, {"attitude"}), LinkerConfig{}.threshold);
  // "birth place" vs "place": 0.7 * 1/2 + 0.3 * (1 - 6/11)
  EXPECT_NEAR(similarity_score({"birth", "place"}, {"place"}), 0.35 + 0.3 * 5.0 / 11.0, 1e-12);
}

TEST(Similarity, PluralsFoldBeforeComparison) {
  EXPECT_EQ(fold_plural("parents"), "parent");
  EXPECT_EQ(fold_plural("relatives"), "relative");
  EXPECT_EQ(fold_plural("glass"), "glass");
  EXPECT_EQ(fold_plural("his"), "his");
  EXPECT_DOUBLE_EQ(similarity_score({"parents"}, {"parent"}), 1.0);
}

TEST(Tokenize, PossessivesAndHyphens) {
  auto s = tokenize_sentence("the mother of a person's spouse, mother-in-law");
  ASSERT_EQ(s.size(), 7u);
  EXPECT_EQ(s[4].text, "person");
  EXPECT_TRUE(s[4].possessive);
  EXPECT_EQ(s[6].text, "mother-in-law");
}

TEST(PhraseLinker, LinkSimple) {
  auto& pl = *fixture().pl;
  EXPECT_EQ(pl.link_simple("birth place")->relation, dbo("birthPlace"));
  EXPECT_EQ(pl.link_simple("husband")->relation, dbo("spouse"));
  EXPECT_DOUBLE_EQ(pl.link_simple("husband")->score, 1.0);
  EXPECT_FALSE(pl.link_simple("xyzzy"));
  EXPECT_THROW(pl.link_simple("  "), std::invalid_argument);
}

TEST(PhraseLinker, DetectsWorkedExamples) {
  EXPECT_EQ(relation_locals(detect("the mother of a person's spouse")),
            (std::vector<std::string>{"mother", "spouse"}));
  EXPECT_EQ(relation_locals(detect("a parent of your parent")), (std::vector<std::string>{"parent", "parent"}));
  EXPECT_EQ(relation_locals(detect("a male child")), (std::vector<std::string>{"gender", "child"}));
  EXPECT_EQ(relation_locals(detect("someone who studied at the same school as you")),
            (std::vector<std::string>{"almaMater", "almaMater"}));
}

TEST(PhraseLinker, TypesBlockRelations) {
  auto m = detect("a person whose country is also your country");
  ASSERT_EQ(m.types.size(), 1u);
  EXPECT_EQ(m.types[0].type, dbo("Person"));
  EXPECT_EQ(m.types[0].span, (Span{1, 2}));
  EXPECT_EQ(relation_locals(m), (std::vector<std::string>{"country", "country"}));
}

TEST(PhraseLinker, DirectMatchCategories) {
  auto& pl = *fixture().pl;
  EXPECT_EQ(pl.direct_match("founder")->category, DirectMatch::Category::relation);
  EXPECT_EQ(pl.direct_match("wife")->iri, dbo("spouse"));
  EXPECT_EQ(pl.direct_match("person")->category, DirectMatch::Category::type);
  EXPECT_EQ(pl.direct_match("Ludwig van Beethoven")->category, DirectMatch::Category::entity);
  EXPECT_EQ(pl.direct_match("Microsoft")->category, DirectMatch::Category::entity);
  EXPECT_FALSE(pl.direct_match("mother-in-law"));
}

TEST(PhraseLinker, LexiconDropsUnknownRelations) {
  auto& g = fixture().g;
  std::vector<std::string> warnings;
  auto lex = Lexicon::from_json({{"wed", "<http://dbpedia.org/ontology/spouse>"},
                                 {"ghost", {"<http://dbpedia.org/ontology/haunts>"}}},
                                &g, &warnings);
  EXPECT_EQ(lex.size(), 1u);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_THROW(Lexicon::from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST(PhraseLinker, OverlapResolutionPrefersScoreThenLength) {
  std::vector<RelationMention> hits = {{{0, 1}, dbo("a"), 0.7}, {{0, 2}, dbo("b"), 0.7}, {{1, 2}, dbo("c"), 0.9},
                                       {{3, 4}, dbo("d"), 0.6}};
  auto kept = PhraseLinker::resolve_overlaps(hits);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].relation, dbo("a"));
  EXPECT_EQ(kept[1].relation, dbo("c"));
  EXPECT_EQ(kept[2].relation, dbo("d"));
}

// Property: detected relation spans never overlap, are sorted, never start
// on a stopword, and always score at or above the threshold.
TEST(PhraseLinkerProperty, DetectedSpansAreWellFormed) {
  auto& f = fixture();
  auto sentences = FixtureProvider::from_file(data_path("explanations.json")).entries();
  std::mt19937 rng(3);
  std::vector<std::string> vocab;
  for (const auto& [_, s] : sentences) {
    for (const auto& t : tokenize_sentence(s)) vocab.push_back(t.text);
  }
  auto check = [&](const Sentence& s) {
    auto m = f.pl->detect(s);
    for (std::size_t i = 0; i < m.relations.size(); ++i) {
      const auto& r = m.relations[i];
      EXPECT_GE(r.score, f.pl->config().threshold);
      EXPECT_LE(r.score, 1.0);
      EXPECT_FALSE(f.pl->stopwords().contains(s[r.span.begin].text));
      if (i) {
        EXPECT_LE(m.relations[i - 1].span.end, r.span.begin);
      }
      for (const auto& t : m.types) EXPECT_FALSE(t.span.overlaps(r.span));
    }
  };
  for (const auto& [_, s] : sentences) check(tokenize_sentence(s));
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1), len(1, 9);
  for (int trial = 0; trial < 300; ++trial) {
    Sentence s;
    for (std::size_t k = len(rng); k > 0; --k) s.push_back({vocab[pick(rng)], false});
    check(s);
  }
}
