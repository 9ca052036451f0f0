#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bongard/core/errors.hpp"

namespace bongard::gateway {

struct EndpointParams {
  std::optional<double> temperature;  // absent: provider default
  std::optional<int> max_tokens;      // absent: provider default
  int timeout_ms = 120000;
  int max_retries = 5;
  int min_interval_ms = 0;  // client-side throttle between requests

  // Canonical text form; part of the cache key, so formatting is fixed.
  std::string canonical() const {
    char buf[64];
    std::string out = "t=";
    if (temperature) {
      std::snprintf(buf, sizeof buf, "%.10g", *temperature);
      out += buf;
    } else {
      out += "none";
    }
    out += ";mt=";
    out += max_tokens ? std::to_string(*max_tokens) : "none";
    return out;
  }
};

struct HttpConfig {
  std::string base_url;       // e.g. https://api.example.com
  std::string model_name;     // provider model identifier
  std::string auth_env;       // env var holding the API key
  std::string request_shape;  // "openai" or "anthropic"
  std::string path;           // optional override of the dialect default
};

// One entry of a scripted backend: an optional matcher over the incoming
// request plus either a canned reply or an injected failure.
struct ScriptEntry {
  enum class Kind { Reply, RateLimited, TransportError, ProviderError };
  Kind kind = Kind::Reply;
  std::string reply;
  std::optional<int> require_images;
  std::vector<std::string> require_text;
};

inline ScriptEntry script_reply(std::string reply) {
  ScriptEntry e;
  e.reply = std::move(reply);
  return e;
}

struct ModelEndpoint {
  enum class Kind { RemoteHttp, Scripted };
  std::string tag;
  Kind kind = Kind::Scripted;
  HttpConfig http;
  std::vector<ScriptEntry> script;
  EndpointParams params;
};

inline ModelEndpoint scripted_endpoint(std::string tag, std::vector<ScriptEntry> script) {
  ModelEndpoint ep;
  ep.tag = std::move(tag);
  ep.kind = ModelEndpoint::Kind::Scripted;
  ep.script = std::move(script);
  return ep;
}

inline ModelEndpoint scripted_endpoint(std::string tag, std::vector<std::string> replies) {
  std::vector<ScriptEntry> script;
  script.reserve(replies.size());
  for (auto& r : replies) script.push_back(script_reply(std::move(r)));
  return scripted_endpoint(std::move(tag), std::move(script));
}

inline ModelEndpoint endpoint_from_json(const nlohmann::ordered_json& j) {
  ModelEndpoint ep;
  ep.tag = j.value("tag", std::string{});
  if (ep.tag.empty()) throw core::ConfigError("endpoint without tag");
  std::string kind = j.value("kind", std::string{"http"});
  if (kind == "scripted") {
    ep.kind = ModelEndpoint::Kind::Scripted;
    for (const auto& ej : j.value("script", nlohmann::ordered_json::array())) {
      ScriptEntry e;
      if (ej.is_string()) {
        e.reply = ej.get<std::string>();
      } else {
        e.reply = ej.value("reply", std::string{});
        std::string fail = ej.value("fail", std::string{});
        if (fail == "rate_limited") e.kind = ScriptEntry::Kind::RateLimited;
        else if (fail == "transport") e.kind = ScriptEntry::Kind::TransportError;
        else if (fail == "provider") e.kind = ScriptEntry::Kind::ProviderError;
        else if (!fail.empty()) throw core::ConfigError("unknown script failure kind: " + fail);
        if (ej.contains("require_images")) e.require_images = ej.at("require_images").get<int>();
        for (const auto& t : ej.value("require_text", nlohmann::ordered_json::array()))
          e.require_text.push_back(t.get<std::string>());
      }
      ep.script.push_back(std::move(e));
    }
  } else if (kind == "http") {
    ep.kind = ModelEndpoint::Kind::RemoteHttp;
    ep.http.base_url = j.value("base_url", std::string{});
    ep.http.model_name = j.value("model_name", std::string{});
    ep.http.auth_env = j.value("auth_env", "BONGARD_API_KEY_" + ep.tag);
    ep.http.request_shape = j.value("request_shape", std::string{"openai"});
    ep.http.path = j.value("path", std::string{});
    if (ep.http.base_url.empty())
      throw core::ConfigError("http endpoint " + ep.tag + " needs base_url");
  } else {
    throw core::ConfigError("unknown endpoint kind: " + kind);
  }
  if (j.contains("temperature")) ep.params.temperature = j.at("temperature").get<double>();
  if (j.contains("max_tokens")) ep.params.max_tokens = j.at("max_tokens").get<int>();
  ep.params.timeout_ms = j.value("timeout_ms", ep.params.timeout_ms);
  ep.params.max_retries = j.value("max_retries", ep.params.max_retries);
  ep.params.min_interval_ms = j.value("min_interval_ms", ep.params.min_interval_ms);
  return ep;
}

}  // namespace bongard::gateway
