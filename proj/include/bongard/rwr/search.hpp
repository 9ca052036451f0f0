#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "bongard/core/raster.hpp"
#include "bongard/core/sha256.hpp"
#include "bongard/core/types.hpp"

namespace bongard::rwr {

struct SearchHit {
  std::string url;
  std::string id;
};

// Paged image search plus retrieval. Pages are 1-based; an empty page means
// the provider is exhausted for that query.
class ImageSearchClient {
 public:
  virtual ~ImageSearchClient() = default;
  virtual std::vector<SearchHit> search(const std::string& query, int page) = 0;
  virtual std::vector<std::uint8_t> fetch(const SearchHit& hit) = 0;
};

namespace detail {

inline std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    else if (!out.empty() && out.back() != '-')
      out.push_back('-');
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

inline std::string extension_for(std::span<const std::uint8_t> bytes) {
  std::string mt = core::sniff_media_type(bytes);
  if (mt == "image/png") return ".png";
  if (mt == "image/jpeg") return ".jpg";
  if (mt == "image/x-portable-pixmap") return ".ppm";
  if (mt == "image/x-portable-graymap") return ".pgm";
  return ".bin";
}

}  // namespace detail

// Fixture-directory mock: one subdirectory per query slug (falling back to
// the root), files served in lexicographic order. Counters make download
// budgets observable.
class DirectoryImageClient : public ImageSearchClient {
 public:
  explicit DirectoryImageClient(std::filesystem::path root, int page_size = 5)
      : root_(std::move(root)), page_size_(page_size) {}

  std::vector<SearchHit> search(const std::string& query, int page) override {
    ++search_calls_;
    std::filesystem::path dir = root_ / detail::slug(query);
    if (!std::filesystem::is_directory(dir)) dir = root_;
    std::vector<std::string> files;
    if (std::filesystem::is_directory(dir))
      for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    std::vector<SearchHit> hits;
    std::size_t from = static_cast<std::size_t>(page - 1) * page_size_;
    for (std::size_t i = from; i < files.size() && i < from + page_size_; ++i)
      hits.push_back({files[i], std::filesystem::path(files[i]).filename().string()});
    return hits;
  }

  std::vector<std::uint8_t> fetch(const SearchHit& hit) override {
    ++fetch_calls_;
    return core::read_file_bytes(hit.url);
  }

  int search_calls() const { return search_calls_.load(); }
  int fetch_calls() const { return fetch_calls_.load(); }

 private:
  std::filesystem::path root_;
  int page_size_;
  std::atomic<int> search_calls_{0};
  std::atomic<int> fetch_calls_{0};
};

// In-memory mock for property suites: byte blobs registered per query.
class MemoryImageClient : public ImageSearchClient {
 public:
  explicit MemoryImageClient(int page_size = 5) : page_size_(page_size) {}

  void add(const std::string& query, std::vector<std::uint8_t> bytes) {
    store_[query].push_back(std::move(bytes));
  }

  std::vector<SearchHit> search(const std::string& query, int page) override {
    ++search_calls_;
    std::vector<SearchHit> hits;
    auto it = store_.find(query);
    if (it == store_.end()) return hits;
    std::size_t from = static_cast<std::size_t>(page - 1) * page_size_;
    for (std::size_t i = from; i < it->second.size() && i < from + page_size_; ++i)
      hits.push_back({query + "#" + std::to_string(i), query + "#" + std::to_string(i)});
    return hits;
  }

  std::vector<std::uint8_t> fetch(const SearchHit& hit) override {
    ++fetch_calls_;
    std::size_t sep = hit.id.rfind('#');
    const auto& pool = store_.at(hit.id.substr(0, sep));
    return pool.at(std::stoul(hit.id.substr(sep + 1)));
  }

  int search_calls() const { return search_calls_.load(); }
  int fetch_calls() const { return fetch_calls_.load(); }

 private:
  std::map<std::string, std::vector<std::vector<std::uint8_t>>> store_;
  int page_size_;
  std::atomic<int> search_calls_{0};
  std::atomic<int> fetch_calls_{0};
};

// Write-through cache around any client so re-runs replay search results
// and image bytes without touching the wrapped provider.
class CachingSearchClient : public ImageSearchClient {
 public:
  CachingSearchClient(ImageSearchClient& inner, std::filesystem::path dir)
      : inner_(inner), dir_(std::move(dir)) {}

  std::vector<SearchHit> search(const std::string& query, int page) override {
    std::string key = core::sha256_hex("search\x1f" + query + "\x1f" + std::to_string(page));
    std::filesystem::path p = dir_ / "search" / (key + ".json");
    if (std::filesystem::exists(p)) {
      nlohmann::json doc = nlohmann::json::parse(core::read_file_text(p));
      std::vector<SearchHit> hits;
      for (const auto& h : doc) hits.push_back({h.at("url").get<std::string>(), h.at("id").get<std::string>()});
      return hits;
    }
    auto hits = inner_.search(query, page);
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& h : hits) doc.push_back({{"url", h.url}, {"id", h.id}});
    core::write_file_text(p, doc.dump());
    return hits;
  }

  std::vector<std::uint8_t> fetch(const SearchHit& hit) override {
    std::string key = core::sha256_hex("fetch\x1f" + hit.url);
    std::filesystem::path p = dir_ / "fetch" / key;
    if (std::filesystem::exists(p)) return core::read_file_bytes(p);
    auto bytes = inner_.fetch(hit);
    core::write_file_bytes(p, bytes);
    return bytes;
  }

 private:
  ImageSearchClient& inner_;
  std::filesystem::path dir_;
};

// Pexels-style REST client. Key comes from the environment, never config.
class PexelsClient : public ImageSearchClient {
 public:
  struct Config {
    std::string base_url = "https://api.pexels.com";
    std::string api_key_env = "BONGARD_PEXELS_API_KEY";
    int per_page = 15;
    int timeout_s = 30;
  };

  PexelsClient() = default;
  explicit PexelsClient(Config config) : config_(std::move(config)) {}

  std::vector<SearchHit> search(const std::string& query, int page) override {
    httplib::Client client(config_.base_url);
    client.set_read_timeout(config_.timeout_s, 0);
    httplib::Headers headers{{"Authorization", api_key()}};
    httplib::Params params{{"query", query},
                           {"page", std::to_string(page)},
                           {"per_page", std::to_string(config_.per_page)}};
    auto res = client.Get("/v1/search", params, headers);
    if (!res) throw core::TransportError("image search failed: " + httplib::to_string(res.error()));
    if (res->status == 429) throw core::RateLimitedError("image search rate-limited");
    if (res->status < 200 || res->status >= 300)
      throw core::TransportError("image search HTTP " + std::to_string(res->status));
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) throw core::TransportError("image search returned non-JSON body");
    std::vector<SearchHit> hits;
    for (const auto& photo : doc.value("photos", nlohmann::json::array())) {
      std::string url = photo.contains("src") ? photo.at("src").value("large", std::string{}) : std::string{};
      if (url.empty()) continue;
      hits.push_back({url, std::to_string(photo.value("id", 0LL))});
    }
    return hits;
  }

  std::vector<std::uint8_t> fetch(const SearchHit& hit) override {
    auto [origin, path] = split_url(hit.url);
    httplib::Client client(origin);
    client.set_read_timeout(config_.timeout_s, 0);
    client.set_follow_location(true);
    auto res = client.Get(path);
    if (!res) throw core::TransportError("image fetch failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw core::TransportError("image fetch HTTP " + std::to_string(res->status) + " for " + hit.url);
    return std::vector<std::uint8_t>(res->body.begin(), res->body.end());
  }

 private:
  std::string api_key() const {
    const char* v = std::getenv(config_.api_key_env.c_str());
    if (!v || !*v) throw core::ConfigError("environment variable " + config_.api_key_env + " is not set");
    return v;
  }

  static std::pair<std::string, std::string> split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw core::TransportError("unsupported URL: " + url);
    std::size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
  }

  Config config_;
};

// Eager form: up to `want` images for one query, deduplicated by digest and
// persisted under the staging directory. Returns fewer without error when
// the provider runs dry.
inline std::vector<core::ImageRef> search_images(ImageSearchClient& client, const std::string& query,
                                                 int want, const std::filesystem::path& staging) {
  std::vector<core::ImageRef> out;
  std::set<std::string> seen;
  for (int page = 1; static_cast<int>(out.size()) < want; ++page) {
    auto hits = client.search(query, page);
    if (hits.empty()) break;
    for (const auto& hit : hits) {
      if (static_cast<int>(out.size()) >= want) break;
      auto bytes = client.fetch(hit);
      std::string digest = core::sha256_hex(bytes);
      if (!seen.insert(digest).second) continue;
      core::ImageRef ref;
      ref.id = hit.id;
      ref.digest = digest;
      ref.media_type = core::sniff_media_type(bytes);
      std::filesystem::path path =
          std::filesystem::absolute(staging / (digest + detail::extension_for(bytes)));
      if (!std::filesystem::exists(path)) core::write_file_bytes(path, bytes);
      ref.location = path.string();
      out.push_back(std::move(ref));
    }
  }
  return out;
}

// Lazy per-query stream used by the generation loop: one not-yet-seen image
// per call, staged to disk. `seen` is shared across the streams of one
// concept so no digest repeats within an assembled instance.
class ImageStream {
 public:
  ImageStream(ImageSearchClient& client, std::string query, std::filesystem::path staging,
              std::set<std::string>& seen)
      : client_(client), query_(std::move(query)), staging_(std::move(staging)), seen_(seen) {}

  std::optional<core::ImageRef> next() {
    while (true) {
      if (cursor_ >= buffer_.size()) {
        if (exhausted_) return std::nullopt;
        auto hits = client_.search(query_, page_++);
        if (hits.empty()) {
          exhausted_ = true;
          return std::nullopt;
        }
        buffer_.insert(buffer_.end(), hits.begin(), hits.end());
      }
      const SearchHit& hit = buffer_[cursor_++];
      auto bytes = client_.fetch(hit);
      std::string digest = core::sha256_hex(bytes);
      if (!seen_.insert(digest).second) continue;
      core::ImageRef ref;
      ref.id = hit.id;
      ref.digest = digest;
      ref.media_type = core::sniff_media_type(bytes);
      std::filesystem::path path =
          std::filesystem::absolute(staging_ / (digest + detail::extension_for(bytes)));
      if (!std::filesystem::exists(path)) core::write_file_bytes(path, bytes);
      ref.location = path.string();
      return ref;
    }
  }

  bool exhausted() const { return exhausted_ && cursor_ >= buffer_.size(); }

 private:
  ImageSearchClient& client_;
  std::string query_;
  std::filesystem::path staging_;
  std::set<std::string>& seen_;
  std::vector<SearchHit> buffer_;
  std::size_t cursor_ = 0;
  int page_ = 1;
  bool exhausted_ = false;
};

}  // namespace bongard::rwr
