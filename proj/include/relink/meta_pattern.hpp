#ifndef RELINK_META_PATTERN_HPP
#define RELINK_META_PATTERN_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/iri.hpp"
#include "relink/kg_store.hpp"
#include "relink/pattern_kind.hpp"

namespace relink {

struct PatternEdge {
  std::string src;
  Iri relation;
  std::string dst;
  friend auto operator<=>(const PatternEdge&, const PatternEdge&) = default;
  friend bool operator==(const PatternEdge&, const PatternEdge&) = default;
};

// Variable-node, relation-labelled edge set with optional type restrictions.
struct SubgraphPattern {
  std::vector<PatternEdge> edges;
  std::map<std::string, Iri> types;

  std::set<std::string> variables() const {
    std::set<std::string> vs;
    for (const auto& e : edges) {
      vs.insert(e.src);
      vs.insert(e.dst);
    }
    return vs;
  }

  std::vector<Iri> relations() const {
    std::vector<Iri> rs;
    for (const auto& e : edges) rs.push_back(e.relation);
    return rs;
  }

  bool connected() const {
    auto vs = variables();
    if (vs.empty()) return true;
    std::set<std::string> seen{*vs.begin()};
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& e : edges) {
        bool a = seen.count(e.src) > 0, b = seen.count(e.dst) > 0;
        if (a != b) {
          seen.insert(e.src);
          seen.insert(e.dst);
          grew = true;
        }
      }
    }
    return seen.size() == vs.size();
  }

  // Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    if (edges.empty()) throw std::invalid_argument("pattern has no edges");
    for (const auto& e : edges) {
      if (e.src == e.dst) {
        throw std::invalid_argument("edge " + e.src + " -> " + e.dst +
                                    " is a self loop");
      }
    }
    if (!connected()) throw std::invalid_argument("pattern is not connected");
    auto vs = variables();
    for (const auto& [v, t] : types) {
      if (!vs.count(v)) {
        throw std::invalid_argument("type restriction on unused variable " + v);
      }
    }
  }

  friend bool operator==(const SubgraphPattern&, const SubgraphPattern&) = default;
};

class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Wires fresh variables x, z, y per template.
inline SubgraphPattern instantiate(MetaPattern mp, std::span<const Iri> relations) {
  if (static_cast<int>(relations.size()) != edge_slots(mp)) {
    throw ArityError(std::string(to_string(mp)) + " takes " +
                     std::to_string(edge_slots(mp)) + " relation(s), got " +
                     std::to_string(relations.size()));
  }
  SubgraphPattern sp;
  switch (mp) {
    case MetaPattern::RP1:
      sp.edges = {{"x", relations[0], "y"}};
      break;
    case MetaPattern::RP2:
      sp.edges = {{"x", relations[0], "z"}, {"z", relations[1], "y"}};
      break;
    case MetaPattern::RP3:
      sp.edges = {{"x", relations[0], "z"}, {"y", relations[1], "z"}};
      break;
    case MetaPattern::RP4:
      sp.edges = {{"z", relations[0], "x"}, {"z", relations[1], "y"}};
      break;
  }
  return sp;
}

inline SubgraphPattern instantiate(MetaPattern mp, std::initializer_list<Iri> rels) {
  std::vector<Iri> v(rels);
  return instantiate(mp, std::span<const Iri>(v));
}

// nullopt stands for "complex": three or more edges, or two edges sharing
// both endpoints or none.
inline std::optional<MetaPattern> shape_of(const SubgraphPattern& sp) {
  if (sp.edges.size() == 1) return MetaPattern::RP1;
  if (sp.edges.size() != 2) return std::nullopt;
  const auto& a = sp.edges[0];
  const auto& b = sp.edges[1];
  std::set<std::string> ea{a.src, a.dst}, eb{b.src, b.dst};
  std::vector<std::string> shared;
  std::set_intersection(ea.begin(), ea.end(), eb.begin(), eb.end(),
                        std::back_inserter(shared));
  if (shared.size() != 1) return std::nullopt;
  if (a.dst == b.src || b.dst == a.src) return MetaPattern::RP2;
  if (a.dst == b.dst) return MetaPattern::RP3;
  return MetaPattern::RP4;
}

inline std::string shape_name(const SubgraphPattern& sp) {
  auto s = shape_of(sp);
  return s ? std::string(to_string(*s)) : "complex";
}

// ---------------------------------------------------------------------------
// Matching (homomorphism semantics).

using Assignment = std::map<std::string, Term>;

namespace detail {

struct CompiledEdge {
  std::size_t src, dst;
  NodeId pred;
  std::size_t freq;
};

struct CompiledPattern {
  std::vector<std::string> vars;  // sorted
  std::vector<std::optional<Iri>> types;
  std::vector<CompiledEdge> plan;  // join order
  bool satisfiable = true;
  std::vector<std::string> warnings;
};

inline CompiledPattern compile(const KnowledgeGraph& g, const SubgraphPattern& sp) {
  CompiledPattern cp;
  auto vs = sp.variables();
  cp.vars.assign(vs.begin(), vs.end());
  auto index_of = [&](const std::string& v) {
    return static_cast<std::size_t>(
        std::lower_bound(cp.vars.begin(), cp.vars.end(), v) - cp.vars.begin());
  };
  cp.types.resize(cp.vars.size());
  for (const auto& [v, t] : sp.types) {
    if (vs.count(v)) cp.types[index_of(v)] = t;
  }

  std::vector<CompiledEdge> edges;
  for (const auto& e : sp.edges) {
    auto pid = g.find(e.relation);
    if (!pid || !g.has_predicate(e.relation)) {
      cp.satisfiable = false;
      cp.warnings.push_back("relation " + e.relation.bracketed() +
                            " is not in the knowledge graph");
      continue;
    }
    edges.push_back({index_of(e.src), index_of(e.dst), *pid,
                     g.by_predicate(*pid).size()});
  }
  if (!cp.satisfiable) return cp;

  // Seed with the least frequent relation, then extend through bound vars.
  std::vector<bool> bound(cp.vars.size(), false), used(edges.size(), false);
  for (std::size_t step = 0; step < edges.size(); ++step) {
    std::size_t best = edges.size();
    int best_bound = -1;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (used[i]) continue;
      int nb = int(bound[edges[i].src]) + int(bound[edges[i].dst]);
      if (best == edges.size() || nb > best_bound ||
          (nb == best_bound && edges[i].freq < edges[best].freq)) {
        best = i;
        best_bound = nb;
      }
    }
    used[best] = true;
    bound[edges[best].src] = bound[edges[best].dst] = true;
    cp.plan.push_back(edges[best]);
  }
  return cp;
}

// Calls visit(binding) for every homomorphism; stops when visit returns false.
template <typename Visit>
void enumerate(const KnowledgeGraph& g, const CompiledPattern& cp, Visit&& visit) {
  if (!cp.satisfiable) return;
  constexpr NodeId kUnbound = static_cast<NodeId>(-1);
  std::vector<NodeId> binding(cp.vars.size(), kUnbound);
  bool stop = false;

  auto type_ok = [&](std::size_t var, NodeId node) {
    return !cp.types[var] || g.has_type(node, *cp.types[var]);
  };

  std::function<void(std::size_t)> step = [&](std::size_t k) {
    if (stop) return;
    if (k == cp.plan.size()) {
      if (!visit(std::as_const(binding))) stop = true;
      return;
    }
    const auto& e = cp.plan[k];
    NodeId s = binding[e.src], o = binding[e.dst];
    if (s != kUnbound && o != kUnbound) {
      if (g.contains(s, e.pred, o)) step(k + 1);
      return;
    }
    if (s != kUnbound) {
      for (const auto& t : g.by_subject_predicate(s, e.pred)) {
        if (!type_ok(e.dst, t.o)) continue;
        binding[e.dst] = t.o;
        step(k + 1);
        if (stop) break;
      }
      binding[e.dst] = kUnbound;
      return;
    }
    if (o != kUnbound) {
      for (const auto& t : g.by_predicate_object(e.pred, o)) {
        if (!type_ok(e.src, t.s)) continue;
        binding[e.src] = t.s;
        step(k + 1);
        if (stop) break;
      }
      binding[e.src] = kUnbound;
      return;
    }
    for (const auto& t : g.by_predicate(e.pred)) {
      if (!type_ok(e.src, t.s) || !type_ok(e.dst, t.o)) continue;
      binding[e.src] = t.s;
      binding[e.dst] = t.o;
      step(k + 1);
      if (stop) break;
    }
    binding[e.src] = binding[e.dst] = kUnbound;
  };
  step(0);
}

}  // namespace detail

inline bool has_instance(const KnowledgeGraph& g, const SubgraphPattern& sp,
                         std::vector<std::string>* warnings = nullptr) {
  auto cp = detail::compile(g, sp);
  if (warnings) warnings->insert(warnings->end(), cp.warnings.begin(), cp.warnings.end());
  if (sp.edges.empty()) return false;
  bool found = false;
  detail::enumerate(g, cp, [&](const std::vector<NodeId>&) {
    found = true;
    return false;
  });
  return found;
}

inline std::size_t count_instances(const KnowledgeGraph& g, const SubgraphPattern& sp) {
  auto cp = detail::compile(g, sp);
  std::size_t n = 0;
  if (sp.edges.empty()) return 0;
  detail::enumerate(g, cp, [&](const std::vector<NodeId>&) {
    ++n;
    return true;
  });
  return n;
}

// Up to `limit` homomorphisms, ordered lexicographically by the assigned
// nodes taken in variable-name order.
inline std::vector<Assignment> match_instances(const KnowledgeGraph& g,
                                               const SubgraphPattern& sp,
                                               std::size_t limit) {
  std::vector<Assignment> out;
  if (limit == 0 || sp.edges.empty()) return out;
  auto cp = detail::compile(g, sp);
  std::vector<std::vector<NodeId>> rows;
  detail::enumerate(g, cp, [&](const std::vector<NodeId>& b) {
    rows.push_back(b);
    return true;
  });
  // Node ids follow lexicographic node order, so sorting ids sorts IRIs.
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  if (rows.size() > limit) rows.resize(limit);
  for (const auto& r : rows) {
    Assignment a;
    for (std::size_t i = 0; i < cp.vars.size(); ++i) a.emplace(cp.vars[i], g.node(r[i]));
    out.push_back(std::move(a));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON form: {"edges":[{"src":"x","rel":"<iri>","dst":"z"}],"types":{"x":"<iri>"}}

inline nlohmann::json to_json(const SubgraphPattern& sp) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : sp.edges) {
    edges.push_back({{"src", e.src}, {"rel", e.relation.bracketed()}, {"dst", e.dst}});
  }
  nlohmann::json types = nlohmann::json::object();
  for (const auto& [v, t] : sp.types) types[v] = t.bracketed();
  return {{"edges", std::move(edges)}, {"types", std::move(types)}};
}

inline SubgraphPattern pattern_from_json(const nlohmann::json& j) {
  SubgraphPattern sp;
  for (const auto& e : j.at("edges")) {
    sp.edges.push_back({e.at("src").get<std::string>(),
                        parse_iri_token(e.at("rel").get<std::string>()),
                        e.at("dst").get<std::string>()});
  }
  if (j.contains("types")) {
    for (auto it = j.at("types").begin(); it != j.at("types").end(); ++it) {
      sp.types.emplace(it.key(), parse_iri_token(it.value().get<std::string>()));
    }
  }
  return sp;
}

// Renames variables to x, z, z2, ... by first appearance, keeping `source`
// as x and `sink` as y when given.
inline SubgraphPattern canonical_names(const SubgraphPattern& sp,
                                       const std::string& source = {},
                                       const std::string& sink = {}) {
  std::map<std::string, std::string> rename;
  if (!source.empty()) rename[source] = "x";
  if (!sink.empty() && sink != source) rename[sink] = "y";
  int next = 0;
  auto name = [&](const std::string& v) {
    auto it = rename.find(v);
    if (it != rename.end()) return it->second;
    std::string n = next == 0 ? "z" : "z" + std::to_string(next + 1);
    ++next;
    rename[v] = n;
    return n;
  };
  SubgraphPattern out;
  for (const auto& e : sp.edges) {
    auto s = name(e.src);
    auto d = name(e.dst);
    out.edges.push_back({s, e.relation, d});
  }
  for (const auto& [v, t] : sp.types) {
    auto it = rename.find(v);
    if (it != rename.end()) out.types.emplace(it->second, t);
  }
  return out;
}

}  // namespace relink

#endif  // RELINK_META_PATTERN_HPP
