#ifndef RELINK_TESTS_SUPPORT_HPP
#define RELINK_TESTS_SUPPORT_HPP

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "relink/relink.hpp"

namespace testing_support {

using namespace relink;

inline std::string data_path(const std::string& name) { return std::string(RELINK_DATA_DIR) + "/" + name; }

inline const std::string kDbo = "http://dbpedia.org/ontology/";
inline Iri dbo(const std::string& local) { return Iri(kDbo + local); }
inline Iri gender() { return Iri("http://xmlns.com/foaf/0.1/gender"); }

// The bundled fixture, loaded once per process.
struct Fixture {
  KnowledgeGraph g;
  Explainer ex;
  std::unique_ptr<PhraseLinker> pl;
  PatternClassifier clf;
  std::unique_ptr<Assembler> as;
  std::unique_ptr<Pipeline> pipeline;

  Fixture() {
    g = load_file(data_path("kg.nt"));
    ex.add_provider(std::make_shared<FixtureProvider>(FixtureProvider::from_file(data_path("explanations.json"))));
    pl = std::make_unique<PhraseLinker>(g, Lexicon::from_file(data_path("lexicon.json"), &g),
                                        Stopwords::from_file(data_path("stopwords.txt")));
    clf = PatternClassifier::load_file(data_path("model.json"));
    as = std::make_unique<Assembler>(g, ex, *pl, clf);
    pipeline = std::make_unique<Pipeline>(Pipeline{g, ex, *pl, *as});
  }
};

inline Fixture& fixture() {
  static Fixture f;
  return f;
}

inline SubgraphPattern edges(std::initializer_list<std::tuple<std::string, Iri, std::string>> es) {
  SubgraphPattern sp;
  for (const auto& [s, r, o] : es) sp.edges.push_back({s, r, o});
  return sp;
}

// ---------------------------------------------------------------------------
// Random graphs

inline Iri ex_node(int i) { return Iri("http://ex.org/n" + std::to_string(i)); }
inline Iri ex_pred(int i) { return Iri("http://ex.org/p" + std::to_string(i)); }

inline KnowledgeGraph random_graph(std::mt19937& rng, int nodes, int preds, int max_triples) {
  std::uniform_int_distribution<int> n(0, nodes - 1), p(0, preds - 1), count(1, max_triples);
  std::bernoulli_distribution literal(0.1);
  std::set<Triple> ts;
  int target = count(rng);
  for (int k = 0; k < target * 4 && static_cast<int>(ts.size()) < target; ++k) {
    Term o = literal(rng) ? Term::literal("v" + std::to_string(n(rng) % 3)) : Term::iri(ex_node(n(rng)));
    ts.insert({ex_node(n(rng)), ex_pred(p(rng)), o});
  }
  // Every predicate must exist so that patterns over it are well-formed.
  for (int i = 0; i < preds; ++i) ts.insert({ex_node(i % nodes), ex_pred(i), Term::iri(ex_node((i + 1) % nodes))});
  return KnowledgeGraph::from_triples({ts.begin(), ts.end()});
}

// ---------------------------------------------------------------------------
// Oracles

// Every assignment of pattern variables to graph nodes, checked edge by edge.
inline std::set<std::map<std::string, std::string>> brute_force_matches(const KnowledgeGraph& g,
                                                                       const SubgraphPattern& sp) {
  std::vector<std::string> vars;
  for (const auto& e : sp.edges) {
    for (const auto& v : {e.src, e.dst}) {
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    }
  }
  std::set<std::tuple<std::string, std::string, std::string>> facts;
  std::set<std::string> nodes;
  for (const auto& t : g.all_triples()) {
    facts.insert({Term::iri(t.subject).nt(), t.predicate.str(), t.object.nt()});
    nodes.insert(Term::iri(t.subject).nt());
    nodes.insert(t.object.nt());
  }
  std::vector<std::string> pool(nodes.begin(), nodes.end());
  std::set<std::map<std::string, std::string>> out;
  std::vector<std::size_t> idx(vars.size(), 0);
  if (pool.empty()) return out;
  while (true) {
    std::map<std::string, std::string> a;
    for (std::size_t i = 0; i < vars.size(); ++i) a[vars[i]] = pool[idx[i]];
    bool ok = true;
    for (const auto& e : sp.edges) {
      if (!facts.count({a[e.src], e.relation.str(), a[e.dst]})) {
        ok = false;
        break;
      }
    }
    if (ok) out.insert(a);
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == pool.size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return out;
}

inline std::set<std::map<std::string, std::string>> as_strings(const std::vector<Assignment>& rows) {
  std::set<std::map<std::string, std::string>> out;
  for (const auto& r : rows) {
    std::map<std::string, std::string> m;
    for (const auto& [v, t] : r) m[v] = t.nt();
    out.insert(m);
  }
  return out;
}

// Adjacent shapes found by testing each candidate pattern exhaustively.
inline std::set<Instantiation> brute_force_adjacent(const KnowledgeGraph& g, const Iri& r1, const Iri& r2) {
  std::set<Instantiation> out;
  auto has = [&](const SubgraphPattern& sp) { return !brute_force_matches(g, sp).empty(); };
  if (has(edges({{"x", r1, "z"}, {"z", r2, "y"}}))) out.insert({MetaPattern::RP2, r1, r2});
  if (has(edges({{"x", r2, "z"}, {"z", r1, "y"}}))) out.insert({MetaPattern::RP2, r2, r1});
  if (has(edges({{"x", r1, "z"}, {"y", r2, "z"}}))) out.insert({MetaPattern::RP3, r1, r2});
  if (has(edges({{"z", r1, "x"}, {"z", r2, "y"}}))) out.insert({MetaPattern::RP4, r1, r2});
  return out;
}

// The same question answered by nested-loop joins over the raw triple list;
// usable on graphs too large for exhaustive assignment.
inline std::set<Instantiation> join_adjacent(const KnowledgeGraph& g, const Iri& r1, const Iri& r2) {
  std::vector<std::pair<std::string, std::string>> a, b;  // (subject, object)
  for (const auto& t : g.all_triples()) {
    if (t.predicate == r1) a.emplace_back(Term::iri(t.subject).nt(), t.object.nt());
    if (t.predicate == r2) b.emplace_back(Term::iri(t.subject).nt(), t.object.nt());
  }
  bool chain12 = false, chain21 = false, conv = false, div = false;
  for (const auto& [xs, xo] : a) {
    for (const auto& [ys, yo] : b) {
      chain12 = chain12 || xo == ys;
      chain21 = chain21 || yo == xs;
      conv = conv || xo == yo;
      div = div || xs == ys;
    }
  }
  std::set<Instantiation> out;
  if (chain12) out.insert({MetaPattern::RP2, r1, r2});
  if (chain21) out.insert({MetaPattern::RP2, r2, r1});
  if (conv) out.insert({MetaPattern::RP3, r1, r2});
  if (div) out.insert({MetaPattern::RP4, r1, r2});
  return out;
}

// Largest number of predicted edges that land on gold edges under some
// injective partial renaming of predicted variables (multiset semantics),
// found by trying every such renaming.
inline std::size_t brute_force_matched_edges(const SubgraphPattern& pred, const SubgraphPattern& gold) {
  auto pset = pred.variables();
  auto gset = gold.variables();
  std::vector<std::string> pv(pset.begin(), pset.end()), gv(gset.begin(), gset.end());
  std::map<std::string, std::string> m;
  std::set<std::string> used;
  std::size_t best = 0;
  auto evaluate = [&] {
    std::multiset<std::tuple<std::string, std::string, std::string>> g;
    for (const auto& e : gold.edges) g.insert({e.src, e.relation.str(), e.dst});
    std::size_t hit = 0;
    for (const auto& e : pred.edges) {
      auto s = m.find(e.src), d = m.find(e.dst);
      if (s == m.end() || d == m.end()) continue;
      auto it = g.find({s->second, e.relation.str(), d->second});
      if (it != g.end()) {
        g.erase(it);
        ++hit;
      }
    }
    best = std::max(best, hit);
  };
  auto go = [&](auto& self, std::size_t i) -> void {
    if (i == pv.size()) {
      evaluate();
      return;
    }
    self(self, i + 1);
    for (const auto& v : gv) {
      if (used.count(v)) continue;
      used.insert(v);
      m[pv[i]] = v;
      self(self, i + 1);
      m.erase(pv[i]);
      used.erase(v);
    }
  };
  go(go, 0);
  return best;
}

// Same-shape comparison up to consistent variable renaming (types ignored).
inline bool same_edges_up_to_renaming(const SubgraphPattern& a, const SubgraphPattern& b) {
  return a.edges.size() == b.edges.size() && brute_force_matched_edges(a, b) == b.edges.size();
}

}  // namespace testing_support

#endif
