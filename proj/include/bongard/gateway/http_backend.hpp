#pragma once

#include <cstdlib>
#include <string>

#include <httplib.h>

#include "bongard/gateway/backend.hpp"

namespace bongard::gateway {

namespace detail {

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char tbl[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out.push_back(tbl[v & 63]);
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == bytes.size()) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(tbl[(v >> 18) & 63]);
    out.push_back(tbl[(v >> 12) & 63]);
    out.push_back(tbl[(v >> 6) & 63]);
    out += "=";
  }
  return out;
}

inline std::string image_b64(const core::ImageRef& ref) {
  auto bytes = core::load_image_bytes(ref);
  return base64_encode(bytes);
}

}  // namespace detail

// Speaks one of the supported provider wire dialects over HTTP(S). The API
// key is read from the configured environment variable per request, never
// stored in config files.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (config_.request_shape != "openai" && config_.request_shape != "anthropic")
      throw core::ConfigError("unsupported request_shape: " + config_.request_shape);
  }

  std::string complete(const TransportRequest& req) override {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(std::max(1, req.params.timeout_ms / 1000), 0);
    client.set_read_timeout(std::max(1, req.params.timeout_ms / 1000), 0);
    client.set_write_timeout(std::max(1, req.params.timeout_ms / 1000), 0);

    std::string key;
    if (!config_.auth_env.empty()) {
      const char* v = std::getenv(config_.auth_env.c_str());
      if (!v || !*v)
        throw core::ConfigError("environment variable " + config_.auth_env + " is not set");
      key = v;
    }

    httplib::Headers headers;
    std::string path;
    json body;
    if (config_.request_shape == "openai") {
      path = config_.path.empty() ? "/v1/chat/completions" : config_.path;
      headers.emplace("Authorization", "Bearer " + key);
      body = openai_body(req);
    } else {
      path = config_.path.empty() ? "/v1/messages" : config_.path;
      headers.emplace("x-api-key", key);
      headers.emplace("anthropic-version", "2023-06-01");
      body = anthropic_body(req);
    }

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
      throw core::TransportError("request to " + config_.base_url + path +
                                 " failed: " + httplib::to_string(res.error()));
    if (res->status == 429)
      throw core::RateLimitedError("429 from " + config_.base_url + ": " + snippet(res->body));
    if (res->status >= 500)
      throw core::TransportError("HTTP " + std::to_string(res->status) + " from " + config_.base_url +
                                 ": " + snippet(res->body));
    if (res->status < 200 || res->status >= 300)
      throw core::ProviderError("HTTP " + std::to_string(res->status) + " from " + config_.base_url +
                                ": " + snippet(res->body));
    return parse_reply(res->body);
  }

 private:
  static std::string snippet(const std::string& body) {
    return body.size() <= 240 ? body : body.substr(0, 240) + "...";
  }

  json openai_body(const TransportRequest& req) const {
    json body;
    body["model"] = config_.model_name;
    if (req.params.temperature) body["temperature"] = *req.params.temperature;
    if (req.params.max_tokens) body["max_tokens"] = *req.params.max_tokens;
    json messages = json::array();
    auto add = [&messages](const Message& m) {
      json content = json::array();
      for (const auto& p : m.parts) {
        if (p.kind == MessagePart::Kind::Text) {
          content.push_back({{"type", "text"}, {"text", p.text}});
        } else {
          content.push_back(
              {{"type", "image_url"},
               {"image_url",
                {{"url", "data:" + p.image.media_type + ";base64," + detail::image_b64(p.image)}}}});
        }
      }
      messages.push_back({{"role", to_string(m.role)}, {"content", content}});
    };
    for (const auto& m : req.history) add(m);
    add(req.message);
    body["messages"] = messages;
    return body;
  }

  json anthropic_body(const TransportRequest& req) const {
    json body;
    body["model"] = config_.model_name;
    body["max_tokens"] = req.params.max_tokens.value_or(1024);
    if (req.params.temperature) body["temperature"] = *req.params.temperature;
    json messages = json::array();
    auto add = [&messages, &body](const Message& m) {
      if (m.role == Role::System) {
        body["system"] = m.text();
        return;
      }
      json content = json::array();
      for (const auto& p : m.parts) {
        if (p.kind == MessagePart::Kind::Text) {
          content.push_back({{"type", "text"}, {"text", p.text}});
        } else {
          content.push_back({{"type", "image"},
                             {"source",
                              {{"type", "base64"},
                               {"media_type", p.image.media_type},
                               {"data", detail::image_b64(p.image)}}}});
        }
      }
      messages.push_back({{"role", to_string(m.role)}, {"content", content}});
    };
    for (const auto& m : req.history) add(m);
    add(req.message);
    body["messages"] = messages;
    return body;
  }

  std::string parse_reply(const std::string& body) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw core::ProviderError(std::string{"response is not JSON: "} + e.what());
    }
    try {
      if (config_.request_shape == "openai") {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string out;
        for (const auto& block : content)
          if (block.value("type", std::string{}) == "text") out += block.value("text", std::string{});
        return out;
      }
      std::string out;
      for (const auto& block : doc.at("content"))
        if (block.value("type", std::string{}) == "text") out += block.value("text", std::string{});
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw core::ProviderError(std::string{"unexpected response shape: "} + e.what());
    }
  }

  HttpConfig config_;
};

}  // namespace bongard::gateway
