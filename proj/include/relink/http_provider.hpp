#ifndef RELINK_HTTP_PROVIDER_HPP
#define RELINK_HTTP_PROVIDER_HPP

// Optional dictionary provider over plain HTTP. Pulls in cpp-httplib; only
// include this header when a live provider is wanted.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "relink/explainer.hpp"

namespace relink {

struct HttpProviderConfig {
  std::string id = "http";
  // "{phrase}" is replaced by the URL-encoded phrase,
  // e.g. "http://localhost:8080/define/{phrase}".
  std::string url_template;
  // Dot path into the response JSON; numeric segments index arrays.
  std::string json_path = "definition";
  std::string api_key_header;
  std::string api_key;
  std::chrono::milliseconds timeout{5000};
  // Optional JSON file persisting fetched sentences between runs.
  std::string disk_cache_path;

  // Reads <prefix>URL, <prefix>JSON_PATH, <prefix>API_KEY_HEADER,
  // <prefix>API_KEY, <prefix>TIMEOUT_MS, <prefix>CACHE. nullopt when URL is unset.
  static std::optional<HttpProviderConfig> from_env(const std::string& prefix = "RELINK_HTTP_") {
    auto get = [&](const char* name) -> std::optional<std::string> {
      const char* v = std::getenv((prefix + name).c_str());
      if (!v || !*v) return std::nullopt;
      return std::string(v);
    };
    auto url = get("URL");
    if (!url) return std::nullopt;
    HttpProviderConfig c;
    c.url_template = *url;
    if (auto v = get("JSON_PATH")) c.json_path = *v;
    if (auto v = get("API_KEY_HEADER")) c.api_key_header = *v;
    if (auto v = get("API_KEY")) c.api_key = *v;
    if (auto v = get("TIMEOUT_MS")) c.timeout = std::chrono::milliseconds(std::stol(*v));
    if (auto v = get("CACHE")) c.disk_cache_path = *v;
    return c;
  }

  static HttpProviderConfig from_json(const nlohmann::json& j) {
    HttpProviderConfig c;
    c.url_template = j.at("url").get<std::string>();
    c.id = j.value("id", c.id);
    c.json_path = j.value("json_path", c.json_path);
    c.api_key_header = j.value("api_key_header", c.api_key_header);
    c.api_key = j.value("api_key", c.api_key);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 5000));
    c.disk_cache_path = j.value("disk_cache", c.disk_cache_path);
    return c;
  }
};

class HttpProvider : public ExplanationProvider {
 public:
  explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    auto scheme_end = cfg_.url_template.find("://");
    if (scheme_end == std::string::npos) {
      throw std::invalid_argument("HTTP provider URL needs a scheme: " + cfg_.url_template);
    }
    auto path_start = cfg_.url_template.find('/', scheme_end + 3);
    host_ = cfg_.url_template.substr(0, path_start);
    path_template_ = path_start == std::string::npos ? "/" : cfg_.url_template.substr(path_start);
    load_disk_cache();
  }

  std::string id() const override { return cfg_.id; }

  std::optional<std::string> lookup(const std::string& phrase) const override {
    {
      std::lock_guard lock(mu_);
      auto it = disk_.find(phrase);
      if (it != disk_.end()) return it->second;
    }
    std::string path = path_template_;
    auto pos = path.find("{phrase}");
    if (pos != std::string::npos) path.replace(pos, 8, encode(phrase));

    httplib::Client client(host_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!cfg_.api_key_header.empty()) headers.emplace(cfg_.api_key_header, cfg_.api_key);

    auto res = client.Get(path, headers);
    if (!res) {
      throw ProviderError("request to " + host_ + path + " failed: " +
                          httplib::to_string(res.error()));
    }
    std::optional<std::string> out;
    if (res->status == 404) {
      out = std::nullopt;
    } else if (res->status != 200) {
      throw ProviderError("HTTP " + std::to_string(res->status) + " from " + host_ + path);
    } else {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("malformed JSON response: ") + e.what());
      }
      const nlohmann::json* node = follow(body, cfg_.json_path);
      if (node && node->is_string() && !node->get<std::string>().empty()) {
        out = node->get<std::string>();
      }
    }
    store(phrase, out);
    return out;
  }

 private:
  static std::string encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
      if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
        out.push_back(static_cast<char>(c));
      } else {
        out.push_back('%');
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 15]);
      }
    }
    return out;
  }

  static const nlohmann::json* follow(const nlohmann::json& root, const std::string& path) {
    const nlohmann::json* node = &root;
    std::size_t start = 0;
    while (start <= path.size() && !path.empty()) {
      auto dot = path.find('.', start);
      std::string seg = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (node->is_array()) {
        char* end = nullptr;
        auto idx = std::strtoul(seg.c_str(), &end, 10);
        if (end == seg.c_str() || *end != '\0' || idx >= node->size()) return nullptr;
        node = &(*node)[idx];
      } else if (node->is_object() && node->contains(seg)) {
        node = &(*node)[seg];
      } else {
        return nullptr;
      }
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return node;
  }

  void load_disk_cache() {
    if (cfg_.disk_cache_path.empty()) return;
    std::ifstream in(cfg_.disk_cache_path);
    if (!in) return;
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.value().is_string()) disk_[it.key()] = it.value().get<std::string>();
      else disk_[it.key()] = std::nullopt;
    }
  }

  void store(const std::string& phrase, const std::optional<std::string>& sentence) const {
    std::lock_guard lock(mu_);
    disk_[phrase] = sentence;
    if (cfg_.disk_cache_path.empty()) return;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : disk_) j[k] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    std::ofstream out(cfg_.disk_cache_path);
    out << j.dump(2) << '\n';
  }

  HttpProviderConfig cfg_;
  std::string host_;
  std::string path_template_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::optional<std::string>> disk_;
};

}  // namespace relink

#endif  // RELINK_HTTP_PROVIDER_HPP
