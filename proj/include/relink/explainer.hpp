#ifndef RELINK_EXPLAINER_HPP
#define RELINK_EXPLAINER_HPP

#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "relink/text.hpp"

namespace relink {

struct Explanation {
  std::string phrase;    // normalized
  std::string sentence;  // non-empty
  std::string source;    // provider id
  friend bool operator==(const Explanation&, const Explanation&) = default;
};

// Raised by a provider that could not be consulted (network, bad payload).
// The explainer skips that provider and records a warning.
class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExplanationProvider {
 public:
  virtual ~ExplanationProvider() = default;
  virtual std::string id() const = 0;
  // `phrase` is already normalized. nullopt means "no entry".
  virtual std::optional<std::string> lookup(const std::string& phrase) const = 0;
};

// JSON map phrase -> sentence, e.g. {"mother-in-law": "the mother of a person's spouse"}.
class FixtureProvider : public ExplanationProvider {
 public:
  explicit FixtureProvider(std::map<std::string, std::string> entries,
                           std::string id = "fixture")
      : id_(std::move(id)) {
    for (auto& [k, v] : entries) {
      if (!v.empty()) entries_[normalize_phrase(k)] = std::move(v);
    }
  }

  static FixtureProvider from_json(const nlohmann::json& j, std::string id = "fixture") {
    if (!j.is_object()) throw std::invalid_argument("explanation fixture must be a JSON object");
    return FixtureProvider(j.get<std::map<std::string, std::string>>(), std::move(id));
  }

  static FixtureProvider from_file(const std::string& path, std::string id = "fixture") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open explanation fixture " + path);
    return from_json(nlohmann::json::parse(in), std::move(id));
  }

  std::string id() const override { return id_; }
  std::optional<std::string> lookup(const std::string& phrase) const override {
    auto it = entries_.find(phrase);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::string id_;
  std::map<std::string, std::string> entries_;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t entries = 0;
  friend bool operator==(const CacheStats&, const CacheStats&) = default;
};

// Resolves phrases through providers in priority order, caching every
// outcome (including not-found). Lookups for the same phrase are
// single-flight: concurrent callers wait on the first caller's result.
class Explainer {
 public:
  using Result = std::optional<Explanation>;

  Explainer() = default;
  explicit Explainer(std::vector<std::shared_ptr<const ExplanationProvider>> providers)
      : providers_(std::move(providers)) {}

  void add_provider(std::shared_ptr<const ExplanationProvider> p) {
    std::lock_guard lock(mu_);
    providers_.push_back(std::move(p));
  }

  Result explain(std::string_view phrase) {
    std::string key = normalize_phrase(phrase);
    if (key.empty()) throw std::invalid_argument("explain: empty phrase");

    std::promise<Result> promise;
    std::shared_future<Result> future;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        ++stats_.hits;
        future = it->second;
      } else {
        ++stats_.misses;
        owner = true;
        future = promise.get_future().share();
        cache_.emplace(key, future);
      }
    }
    if (!owner) return future.get();

    Result result;
    std::vector<std::shared_ptr<const ExplanationProvider>> providers;
    {
      std::lock_guard lock(mu_);
      providers = providers_;
    }
    bool failed = false;
    for (const auto& p : providers) {
      try {
        auto sentence = p->lookup(key);
        if (sentence && !sentence->empty()) {
          result = Explanation{key, *sentence, p->id()};
          break;
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu_);
        failed = true;
        warnings_.push_back("provider " + p->id() + " failed for '" + key + "': " + e.what());
      }
    }
    promise.set_value(result);
    if (failed && !result) {
      // Do not pin a transient provider failure as a permanent miss.
      std::lock_guard lock(mu_);
      cache_.erase(key);
    }
    return result;
  }

  CacheStats cache_stats() const {
    std::lock_guard lock(mu_);
    CacheStats s = stats_;
    s.entries = cache_.size();
    return s;
  }

  std::vector<std::string> warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
  }

  void clear_cache() {
    std::lock_guard lock(mu_);
    cache_.clear();
    stats_ = {};
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<const ExplanationProvider>> providers_;
  std::map<std::string, std::shared_future<Result>> cache_;
  CacheStats stats_;
  std::vector<std::string> warnings_;
};

}  // namespace relink

#endif  // RELINK_EXPLAINER_HPP
