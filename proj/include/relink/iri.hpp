#ifndef RELINK_IRI_HPP
#define RELINK_IRI_HPP

#include <algorithm>
#include <cctype>
#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace relink {

inline constexpr std::string_view kRdfType =
    "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kRdfsLabel =
    "http://www.w3.org/2000/01/rdf-schema#label";

// Substring after the last '#' or '/'. Empty if the IRI ends with one of them.
inline std::string_view local_name(std::string_view iri) {
  auto pos = iri.find_last_of("#/");
  if (pos == std::string_view::npos) return iri;
  return iri.substr(pos + 1);
}

class Iri {
 public:
  Iri() = default;
  explicit Iri(std::string value) : value_(std::move(value)) {
    if (value_.empty()) throw std::invalid_argument("empty IRI");
    for (unsigned char c : value_) {
      if (std::isspace(c)) {
        throw std::invalid_argument("IRI contains whitespace: " + value_);
      }
    }
    if (local_name(value_).empty()) {
      throw std::invalid_argument("IRI has no local name: " + value_);
    }
  }

  const std::string& str() const { return value_; }
  std::string_view local() const { return local_name(value_); }
  bool empty() const { return value_.empty(); }

  // N-Triples form, e.g. <http://dbpedia.org/ontology/mother>.
  std::string bracketed() const { return "<" + value_ + ">"; }

  friend auto operator<=>(const Iri&, const Iri&) = default;
  friend bool operator==(const Iri&, const Iri&) = default;

 private:
  std::string value_;
};

// Accepts "<iri>" or a bare absolute IRI.
inline Iri parse_iri_token(std::string_view text) {
  if (text.size() >= 2 && text.front() == '<' && text.back() == '>') {
    text = text.substr(1, text.size() - 2);
  }
  return Iri(std::string(text));
}

// Splits an IRI local name into lowercase word tokens: camelCase boundaries,
// '_', '-', and digit runs (kept as their own tokens).
inline std::vector<std::string> tokenize_identifier(std::string_view name) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  auto cls = [](unsigned char c) {
    if (std::isdigit(c)) return 'd';
    if (std::isupper(c)) return 'U';
    if (std::isalpha(c) || c >= 0x80) return 'l';
    return ' ';
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    unsigned char c = name[i];
    char k = cls(c);
    if (k == ' ') {
      flush();
      continue;
    }
    if (!cur.empty()) {
      unsigned char prev = name[i - 1];
      char pk = cls(prev);
      bool boundary = false;
      if (k == 'd' && pk != 'd') boundary = true;
      if (k != 'd' && pk == 'd') boundary = true;
      if (k == 'U' && pk == 'l') boundary = true;
      // "IRIName" -> "iri", "name"
      if (k == 'U' && pk == 'U' && i + 1 < name.size() &&
          cls(static_cast<unsigned char>(name[i + 1])) == 'l') {
        boundary = true;
      }
      if (boundary) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  return out;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

// Prefix table used only for display: {"dbo": "http://dbpedia.org/ontology/"}.
class PrefixTable {
 public:
  PrefixTable() = default;

  static PrefixTable from_json(const nlohmann::json& j) {
    PrefixTable t;
    for (auto it = j.begin(); it != j.end(); ++it) {
      t.add(it.key(), it.value().get<std::string>());
    }
    return t;
  }

  void add(std::string prefix, std::string base) {
    bases_[std::move(base)] = std::move(prefix);
  }

  // Longest matching base wins; falls back to the bracketed IRI.
  std::string compact(const Iri& iri) const {
    const std::string* best_base = nullptr;
    const std::string* best_prefix = nullptr;
    for (const auto& [base, prefix] : bases_) {
      if (iri.str().starts_with(base) &&
          (!best_base || base.size() > best_base->size())) {
        best_base = &base;
        best_prefix = &prefix;
      }
    }
    if (!best_base) return iri.bracketed();
    return *best_prefix + ":" + iri.str().substr(best_base->size());
  }

  std::optional<Iri> expand(std::string_view curie) const {
    auto colon = curie.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto prefix = curie.substr(0, colon);
    for (const auto& [base, p] : bases_) {
      if (p == prefix) return Iri(base + std::string(curie.substr(colon + 1)));
    }
    return std::nullopt;
  }

  bool empty() const { return bases_.empty(); }

 private:
  std::map<std::string, std::string> bases_;  // base -> prefix
};

}  // namespace relink

template <>
struct std::hash<relink::Iri> {
  std::size_t operator()(const relink::Iri& iri) const noexcept {
    return std::hash<std::string>{}(iri.str());
  }
};

#endif  // RELINK_IRI_HPP
