#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "bongard/core/sha256.hpp"
#include "bongard/core/types.hpp"
#include "bongard/gateway/backend.hpp"

namespace bongard::gateway {

// Cache key over the full request semantics: endpoint identity, sampling
// params, entire history, and the new message. Images enter by content
// digest only.
inline std::string cache_key(const TransportRequest& req) {
  json material;
  material["endpoint"] = req.endpoint_tag;
  material["params"] = req.params.canonical();
  json hist = json::array();
  for (const auto& m : req.history) hist.push_back(message_to_json(m, /*include_locations=*/false));
  material["history"] = hist;
  material["message"] = message_to_json(req.message, /*include_locations=*/false);
  return core::sha256_hex(material.dump());
}

// One file per key under <dir>/<key[0..1]>/<key>.json holding the request
// and reply. Writes go through a temp file and a rename.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }

  std::optional<std::string> get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::filesystem::path p = path_for(key);
    if (!std::filesystem::exists(p)) return std::nullopt;
    json doc = json::parse(core::read_file_text(p));
    return doc.at("reply").get<std::string>();
  }

  void put(const std::string& key, const TransportRequest& req, const std::string& reply) const {
    if (!enabled()) return;
    json doc;
    doc["key"] = key;
    doc["endpoint"] = req.endpoint_tag;
    doc["params"] = req.params.canonical();
    json hist = json::array();
    for (const auto& m : req.history) hist.push_back(message_to_json(m));
    doc["history"] = hist;
    doc["message"] = message_to_json(req.message);
    doc["reply"] = reply;
    core::write_file_text(path_for(key), doc.dump(2) + "\n");
  }

 private:
  std::filesystem::path path_for(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
  }

  std::filesystem::path dir_;
};

}  // namespace bongard::gateway
