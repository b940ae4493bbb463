#ifndef RELINK_KG_STORE_HPP
#define RELINK_KG_STORE_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "relink/iri.hpp"
#include "relink/pattern_kind.hpp"

namespace relink {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnknownPredicate : public std::runtime_error {
 public:
  explicit UnknownPredicate(const Iri& p)
      : std::runtime_error("unknown predicate " + p.bracketed()),
        predicate_(p) {}
  const Iri& predicate() const { return predicate_; }

 private:
  Iri predicate_;
};

// A graph node: an IRI or an opaque literal.
struct Term {
  enum class Kind : std::uint8_t { iri, literal };
  Kind kind = Kind::iri;
  std::string value;

  static Term iri(std::string v) { return {Kind::iri, std::move(v)}; }
  static Term iri(const Iri& v) { return {Kind::iri, v.str()}; }
  static Term literal(std::string v) { return {Kind::literal, std::move(v)}; }

  bool is_iri() const { return kind == Kind::iri; }
  bool is_literal() const { return kind == Kind::literal; }

  // N-Triples rendering; also the lexicographic sort key of nodes.
  std::string nt() const {
    if (is_iri()) return "<" + value + ">";
    std::string out = "\"";
    for (char c : value) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    out.push_back('"');
    return out;
  }

  friend auto operator<=>(const Term&, const Term&) = default;
  friend bool operator==(const Term&, const Term&) = default;
};

struct Triple {
  Iri subject;
  Iri predicate;
  Term object;

  friend auto operator<=>(const Triple&, const Triple&) = default;
  friend bool operator==(const Triple&, const Triple&) = default;
};

using NodeId = std::uint32_t;

struct IdTriple {
  NodeId s = 0;
  NodeId p = 0;
  NodeId o = 0;
  friend bool operator==(const IdTriple&, const IdTriple&) = default;
};

struct RelationLabel {
  Iri relation;
  std::vector<std::string> tokens;
};

struct TypeDictionary {
  std::map<std::vector<std::string>, Iri> entries;
  // One message per type IRI that lost a token-key collision.
  std::vector<std::string> discarded;
  std::size_t max_key_length = 0;
};

struct GraphSummary {
  std::size_t triples = 0;
  std::size_t predicates = 0;
  std::size_t types = 0;
  std::size_t entities = 0;
};

struct LoadOptions {
  std::string type_predicate = std::string(kRdfType);
};

// Immutable indexed triple store. Node ids are assigned in lexicographic order
// of the nodes' N-Triples form, so id order is also display order.
class KnowledgeGraph {
 public:
  KnowledgeGraph() : type_predicate_(std::string(kRdfType)) {}

  static KnowledgeGraph from_triples(std::vector<Triple> triples,
                                     const LoadOptions& opts = {});

  std::size_t size() const { return spo_.size(); }
  bool empty() const { return spo_.empty(); }
  GraphSummary summary() const {
    return {spo_.size(), predicate_set_.size(), type_set_.size(),
            entity_set_.size()};
  }

  const Iri& type_predicate() const { return type_predicate_; }
  const std::set<Iri>& predicate_set() const { return predicate_set_; }
  const std::set<Iri>& type_set() const { return type_set_; }
  const std::set<Iri>& entity_set() const { return entity_set_; }

  bool has_predicate(const Iri& p) const { return predicate_set_.count(p) > 0; }

  std::size_t node_count() const { return nodes_.size(); }
  const Term& node(NodeId id) const { return nodes_.at(id); }
  std::optional<NodeId> find(const Term& t) const {
    auto it = node_ids_.find(t.nt());
    if (it == node_ids_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<NodeId> find(const Iri& iri) const { return find(Term::iri(iri)); }

  std::span<const IdTriple> triples() const { return spo_; }
  Triple materialize(const IdTriple& t) const {
    return {Iri(nodes_[t.s].value), Iri(nodes_[t.p].value), nodes_[t.o]};
  }
  std::vector<Triple> all_triples() const {
    std::vector<Triple> out;
    out.reserve(spo_.size());
    for (const auto& t : spo_) out.push_back(materialize(t));
    return out;
  }

  // Contiguous index ranges.
  std::span<const IdTriple> by_subject(NodeId s) const {
    return range(spo_, [s](const IdTriple& t) { return std::tuple(t.s); },
                 std::tuple(s));
  }
  std::span<const IdTriple> by_subject_predicate(NodeId s, NodeId p) const {
    return range(spo_, [](const IdTriple& t) { return std::tuple(t.s, t.p); },
                 std::tuple(s, p));
  }
  std::span<const IdTriple> by_predicate(NodeId p) const {
    return range(pos_, [](const IdTriple& t) { return std::tuple(t.p); },
                 std::tuple(p));
  }
  std::span<const IdTriple> by_predicate_object(NodeId p, NodeId o) const {
    return range(pos_, [](const IdTriple& t) { return std::tuple(t.p, t.o); },
                 std::tuple(p, o));
  }
  std::span<const IdTriple> by_object(NodeId o) const {
    return range(osp_, [](const IdTriple& t) { return std::tuple(t.o); },
                 std::tuple(o));
  }
  std::span<const IdTriple> by_object_subject(NodeId o, NodeId s) const {
    return range(osp_, [](const IdTriple& t) { return std::tuple(t.o, t.s); },
                 std::tuple(o, s));
  }

  bool contains(NodeId s, NodeId p, NodeId o) const {
    auto r = by_subject_predicate(s, p);
    return std::binary_search(r.begin(), r.end(), IdTriple{s, p, o},
                              [](const IdTriple& a, const IdTriple& b) {
                                return a.o < b.o;
                              });
  }

  std::size_t predicate_frequency(const Iri& p) const {
    auto id = find(p);
    return id ? by_predicate(*id).size() : 0;
  }

  // Types of an entity (objects of type-predicate triples).
  const std::set<Iri>& types_of(const Iri& entity) const {
    static const std::set<Iri> kNone;
    auto it = type_index_.find(entity);
    return it == type_index_.end() ? kNone : it->second;
  }
  bool has_type(NodeId node, const Iri& type) const {
    const Term& t = nodes_.at(node);
    if (!t.is_iri()) return false;
    auto it = type_index_.find(Iri(t.value));
    return it != type_index_.end() && it->second.count(type) > 0;
  }
  const std::map<Iri, std::set<Iri>>& type_index() const { return type_index_; }
  std::size_t type_instance_count(const Iri& type) const {
    auto it = type_counts_.find(type);
    return it == type_counts_.end() ? 0 : it->second;
  }

  const std::vector<RelationLabel>& relation_labels() const { return labels_; }
  const RelationLabel* relation_label(const Iri& p) const {
    for (const auto& l : labels_) {
      if (l.relation == p) return &l;
    }
    return nullptr;
  }
  const TypeDictionary& type_dictionary() const { return type_dictionary_; }
  // Entity labels: tokenized local names plus rdfs:label literals.
  const std::map<std::vector<std::string>, Iri>& entity_labels() const {
    return entity_labels_;
  }

 private:
  template <typename Key, typename Val>
  static std::span<const IdTriple> range(const std::vector<IdTriple>& v,
                                         Key key, const Val& val) {
    auto lo = std::lower_bound(v.begin(), v.end(), val,
                               [&](const IdTriple& t, const Val& x) {
                                 return key(t) < x;
                               });
    auto hi = std::upper_bound(lo, v.end(), val,
                               [&](const Val& x, const IdTriple& t) {
                                 return x < key(t);
                               });
    return {lo, hi};
  }

  Iri type_predicate_;
  std::vector<Term> nodes_;
  std::unordered_map<std::string, NodeId> node_ids_;
  std::vector<IdTriple> spo_, pos_, osp_;
  std::map<Iri, std::set<Iri>> type_index_;
  std::map<Iri, std::size_t> type_counts_;
  std::set<Iri> predicate_set_, type_set_, entity_set_;
  std::vector<RelationLabel> labels_;
  TypeDictionary type_dictionary_;
  std::map<std::vector<std::string>, Iri> entity_labels_;
};

namespace detail {

inline std::vector<std::string> tokenize_label(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t lineno)
      : s_(line), lineno_(lineno) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\r'))
      ++i_;
  }
  bool at_end() const { return i_ >= s_.size(); }
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(lineno_, msg + " (column " + std::to_string(i_ + 1) + ")");
  }

  std::string iri() {
    if (peek() != '<') fail("expected '<'");
    auto end = s_.find('>', i_ + 1);
    if (end == std::string_view::npos) fail("unterminated IRI");
    std::string v(s_.substr(i_ + 1, end - i_ - 1));
    if (v.empty()) fail("empty IRI");
    for (unsigned char c : v) {
      if (std::isspace(c)) fail("whitespace inside IRI");
    }
    if (local_name(v).empty()) fail("IRI without local name: <" + v + ">");
    i_ = end + 1;
    return v;
  }

  std::string literal() {
    if (peek() != '"') fail("expected '\"'");
    ++i_;
    std::string v;
    while (true) {
      if (at_end()) fail("unterminated literal");
      char c = s_[i_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("dangling escape");
        char e = s_[i_++];
        switch (e) {
          case 'n': v.push_back('\n'); break;
          case 't': v.push_back('\t'); break;
          case 'r': v.push_back('\r'); break;
          case '"': v.push_back('"'); break;
          case '\\': v.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        v.push_back(c);
      }
    }
    // Language tags and datatypes are accepted and dropped.
    if (peek() == '@') {
      ++i_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                           peek() == '-'))
        ++i_;
    } else if (s_.substr(i_, 2) == "^^") {
      i_ += 2;
      iri();
    }
    return v;
  }

  void expect_dot() {
    skip_ws();
    if (peek() != '.') fail("expected '.' at end of triple");
    ++i_;
    skip_ws();
    if (!at_end() && peek() != '#') fail("trailing content after '.'");
  }

 private:
  std::string_view s_;
  std::size_t lineno_;
  std::size_t i_ = 0;
};

}  // namespace detail

// Parses one line; returns nullopt for blank and comment lines.
inline std::optional<Triple> parse_triple_line(std::string_view line,
                                               std::size_t lineno) {
  detail::LineParser p(line, lineno);
  p.skip_ws();
  if (p.at_end() || p.peek() == '#') return std::nullopt;
  if (p.peek() == '_') p.fail("blank nodes are not supported");
  std::string s = p.iri();
  p.skip_ws();
  std::string pr = p.iri();
  p.skip_ws();
  Term o;
  if (p.peek() == '<') {
    o = Term::iri(p.iri());
  } else if (p.peek() == '"') {
    o = Term::literal(p.literal());
  } else if (p.peek() == '_') {
    p.fail("blank nodes are not supported");
  } else {
    p.fail("expected IRI or literal object");
  }
  p.expect_dot();
  return Triple{Iri(std::move(s)), Iri(std::move(pr)), std::move(o)};
}

inline KnowledgeGraph KnowledgeGraph::from_triples(std::vector<Triple> triples,
                                                   const LoadOptions& opts) {
  KnowledgeGraph g;
  g.type_predicate_ = Iri(opts.type_predicate);

  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

  std::set<Term> terms;
  for (const auto& t : triples) {
    terms.insert(Term::iri(t.subject));
    terms.insert(Term::iri(t.predicate));
    terms.insert(t.object);
  }
  std::vector<Term> sorted(terms.begin(), terms.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const Term& a, const Term& b) { return a.nt() < b.nt(); });
  g.nodes_ = std::move(sorted);
  for (NodeId i = 0; i < g.nodes_.size(); ++i) g.node_ids_[g.nodes_[i].nt()] = i;

  std::set<Iri> type_objects;
  std::set<Iri> non_type_nodes;
  for (const auto& t : triples) {
    IdTriple it{g.node_ids_.at(Term::iri(t.subject).nt()),
                g.node_ids_.at(Term::iri(t.predicate).nt()),
                g.node_ids_.at(t.object.nt())};
    g.spo_.push_back(it);
    g.predicate_set_.insert(t.predicate);
    non_type_nodes.insert(t.subject);
    if (t.predicate == g.type_predicate_) {
      if (!t.object.is_iri()) {
        throw std::invalid_argument("type triple with literal object for " +
                                    t.subject.bracketed());
      }
      Iri type(t.object.value);
      g.type_index_[t.subject].insert(type);
      g.type_set_.insert(type);
      type_objects.insert(type);
    } else if (t.object.is_iri()) {
      non_type_nodes.insert(Iri(t.object.value));
    }
  }
  for (const auto& [entity, types] : g.type_index_) {
    for (const auto& ty : types) ++g.type_counts_[ty];
  }
  g.entity_set_ = std::move(non_type_nodes);

  g.pos_ = g.spo_;
  g.osp_ = g.spo_;
  auto by = [](auto key) {
    return [key](const IdTriple& a, const IdTriple& b) { return key(a) < key(b); };
  };
  std::sort(g.spo_.begin(), g.spo_.end(),
            by([](const IdTriple& t) { return std::tuple(t.s, t.p, t.o); }));
  std::sort(g.pos_.begin(), g.pos_.end(),
            by([](const IdTriple& t) { return std::tuple(t.p, t.o, t.s); }));
  std::sort(g.osp_.begin(), g.osp_.end(),
            by([](const IdTriple& t) { return std::tuple(t.o, t.s, t.p); }));

  for (const auto& p : g.predicate_set_) {
    auto tokens = tokenize_identifier(p.local());
    if (tokens.empty()) tokens.push_back(std::string(p.local()));
    g.labels_.push_back({p, std::move(tokens)});
  }

  // Type dictionary; collisions keep the type with more instances, then the
  // lexicographically smaller IRI.
  for (const auto& ty : g.type_set_) {
    auto key = tokenize_identifier(ty.local());
    if (key.empty()) continue;
    auto [it, inserted] = g.type_dictionary_.entries.emplace(key, ty);
    if (!inserted) {
      const Iri& kept = it->second;
      std::size_t a = g.type_instance_count(ty), b = g.type_instance_count(kept);
      if (a > b) {
        g.type_dictionary_.discarded.push_back(
            "type " + kept.bracketed() + " shadowed by " + ty.bracketed());
        it->second = ty;
      } else {
        g.type_dictionary_.discarded.push_back(
            "type " + ty.bracketed() + " shadowed by " + kept.bracketed());
      }
    }
    g.type_dictionary_.max_key_length =
        std::max(g.type_dictionary_.max_key_length, key.size());
  }

  Iri label_pred{std::string(kRdfsLabel)};
  for (const auto& e : g.entity_set_) {
    auto key = detail::tokenize_label(e.local());
    if (!key.empty()) g.entity_labels_.emplace(std::move(key), e);
  }
  for (const auto& t : triples) {
    if (t.predicate == label_pred && t.object.is_literal()) {
      auto key = detail::tokenize_label(t.object.value);
      if (!key.empty()) g.entity_labels_.emplace(std::move(key), t.subject);
    }
  }
  return g;
}

inline KnowledgeGraph load(std::istream& in, const LoadOptions& opts = {}) {
  std::vector<Triple> triples;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto t = parse_triple_line(line, lineno)) triples.push_back(std::move(*t));
  }
  return KnowledgeGraph::from_triples(std::move(triples), opts);
}

inline KnowledgeGraph load_string(std::string_view text,
                                  const LoadOptions& opts = {}) {
  std::istringstream in{std::string(text)};
  return load(in, opts);
}

inline KnowledgeGraph load_file(const std::string& path,
                                const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open knowledge graph file " + path);
  return load(in, opts);
}

// Free-function view of the precomputed dictionary.
inline const TypeDictionary& type_dictionary(const KnowledgeGraph& g) {
  return g.type_dictionary();
}

// A 2-edge template over an ordered relation pair. For RP2 the order is the
// chain order (first edge, second edge); RP3 and RP4 are symmetric.
struct Instantiation {
  MetaPattern kind;
  Iri first;
  Iri second;
  friend auto operator<=>(const Instantiation&, const Instantiation&) = default;
  friend bool operator==(const Instantiation&, const Instantiation&) = default;
};

// Which 2-edge shapes over (r1, r2) have at least one instance in g.
// Members: RP2(r1,r2), RP2(r2,r1), RP3(r1,r2), RP4(r1,r2). When r1 == r2 the
// two RP2 orders coincide and are reported once.
inline std::set<Instantiation> adjacent_instantiations(const KnowledgeGraph& g,
                                                      const Iri& r1,
                                                      const Iri& r2) {
  auto id1 = g.find(r1);
  auto id2 = g.find(r2);
  if (!id1 || !g.has_predicate(r1)) throw UnknownPredicate(r1);
  if (!id2 || !g.has_predicate(r2)) throw UnknownPredicate(r2);

  auto chains = [&](NodeId a, NodeId b) {
    for (const auto& t : g.by_predicate(a)) {
      if (!g.by_subject_predicate(t.o, b).empty()) return true;
    }
    return false;
  };
  auto sorted_column = [&](NodeId p, bool objects) {
    std::vector<NodeId> v;
    for (const auto& t : g.by_predicate(p)) v.push_back(objects ? t.o : t.s);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  auto intersects = [](const std::vector<NodeId>& a, const std::vector<NodeId>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
      if (*i < *j) ++i;
      else if (*j < *i) ++j;
      else return true;
    }
    return false;
  };

  std::set<Instantiation> out;
  if (chains(*id1, *id2)) out.insert({MetaPattern::RP2, r1, r2});
  if (chains(*id2, *id1)) out.insert({MetaPattern::RP2, r2, r1});
  if (intersects(sorted_column(*id1, true), sorted_column(*id2, true)))
    out.insert({MetaPattern::RP3, r1, r2});
  if (intersects(sorted_column(*id1, false), sorted_column(*id2, false)))
    out.insert({MetaPattern::RP4, r1, r2});
  return out;
}

}  // namespace relink

#endif  // RELINK_KG_STORE_HPP
