#ifndef RELINK_TEXT_HPP
#define RELINK_TEXT_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace relink {

struct Token {
  std::string text;
  // The surface form carried a possessive ('s or trailing ').
  bool possessive = false;
  friend bool operator==(const Token&, const Token&) = default;
};

using Sentence = std::vector<Token>;

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Lowercase, trim, collapse internal whitespace. Hyphens are kept.
inline std::string normalize_phrase(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Splits a sentence into lowercase word tokens. Hyphens inside a word are
// kept ("mother-in-law"); possessive 's is stripped and flagged.
inline Sentence tokenize_sentence(std::string_view text) {
  Sentence out;
  std::string cur;
  auto is_word = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
  auto flush = [&] {
    Token t;
    if (cur.size() > 2 && cur.ends_with("'s")) {
      cur.resize(cur.size() - 2);
      t.possessive = true;
    } else if (cur.size() > 1 && cur.ends_with("s'")) {
      cur.pop_back();
      t.possessive = true;
    }
    while (!cur.empty() && (cur.back() == '-' || cur.back() == '\'')) cur.pop_back();
    if (cur.empty()) return;
    t.text = std::move(cur);
    out.push_back(std::move(t));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    unsigned char c = text[i];
    if (is_word(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if ((c == '-' || c == '\'') && !cur.empty()) {
      cur.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

inline std::vector<std::string> token_texts(const Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(t.text);
  return out;
}

// Word tokens of a mention or phrase: split on whitespace, '-' and '_'.
inline std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c) || c == '-' || c == '_' || c == '\'' || c == ',' || c == '.') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

class Stopwords {
 public:
  Stopwords() : words_(default_words()) {}
  explicit Stopwords(std::set<std::string> words) : words_(std::move(words)) {}

  static Stopwords from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopword file " + path);
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      auto w = normalize_phrase(line);
      if (!w.empty() && w.front() != '#') words.insert(w);
    }
    return Stopwords(std::move(words));
  }

  bool contains(std::string_view w) const { return words_.count(std::string(w)) > 0; }
  std::size_t size() const { return words_.size(); }

  static const std::set<std::string>& default_words() {
    static const std::set<std::string> kWords = {
        "a",       "an",     "the",   "of",      "to",     "in",    "on",
        "at",      "for",    "from",  "with",    "by",     "as",    "into",
        "your",    "you",    "my",    "me",      "his",    "her",   "their",
        "them",    "they",   "its",   "it",      "our",    "one",   "someone",
        "somebody", "who",   "whom",  "whose",   "which",  "that",  "this",
        "these",   "those",  "is",    "are",     "was",    "were",  "be",
        "been",    "being",  "has",   "have",    "had",    "do",    "does",
        "and",     "or",     "but",   "not",     "no",     "also",  "same",
        "another", "other",  "else",  "own",     "both",   "either", "there",
        "where",   "when",   "while", "than",    "then",   "very",  "any",
        "some",    "each",
    };
    return kWords;
  }

 private:
  std::set<std::string> words_;
};

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// 1 - dist / max(len); 1.0 for two empty strings.
inline double edit_similarity(std::string_view a, std::string_view b) {
  std::size_t m = std::max(a.size(), b.size());
  if (m == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
}

inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : sa) inter += sb.count(x);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

}  // namespace relink

#endif  // RELINK_TEXT_HPP
