#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

#include "bongard/gateway/backend.hpp"
#include "bongard/gateway/cache.hpp"
#include "bongard/gateway/http_backend.hpp"

namespace bongard::gateway {

// Provider-agnostic transport front. Owns the backends, the response cache,
// retry/backoff, the in-flight bound, and per-endpoint throttling.
//
// Thread safety: the gateway may be called from many threads, but a single
// SessionContext must only ever be driven by one caller at a time.
class Gateway {
 public:
  struct Options {
    std::filesystem::path cache_dir;  // empty disables the cache
    int max_in_flight = 4;
    int backoff_base_ms = 250;
    int backoff_cap_ms = 30000;
    std::function<void(int)> sleeper;  // injectable for tests
    std::uint64_t jitter_seed = 0x5eedc0de;
  };

  Gateway() : Gateway(Options{}) {}

  explicit Gateway(Options options)
      : options_(std::move(options)), cache_(options_.cache_dir), jitter_rng_(options_.jitter_seed) {
    if (!options_.sleeper)
      options_.sleeper = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
    if (options_.max_in_flight < 1) options_.max_in_flight = 1;
  }

  void register_endpoint(const ModelEndpoint& endpoint) {
    std::shared_ptr<Backend> backend;
    if (endpoint.kind == ModelEndpoint::Kind::Scripted)
      backend = std::make_shared<ScriptedBackend>(endpoint.script);
    else
      backend = std::make_shared<HttpBackend>(endpoint.http);
    register_backend(endpoint, std::move(backend));
  }

  // Registers a caller-supplied backend (instrumented mocks and the like).
  void register_backend(const ModelEndpoint& endpoint, std::shared_ptr<Backend> backend) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (endpoints_.contains(endpoint.tag))
      throw core::ConfigError("endpoint tag registered twice: " + endpoint.tag);
    endpoints_[endpoint.tag] = endpoint;
    backends_[endpoint.tag] = std::move(backend);
  }

  bool has_endpoint(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return endpoints_.contains(tag);
  }

  const ModelEndpoint& endpoint(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = endpoints_.find(tag);
    if (it == endpoints_.end()) throw core::ConfigError("unknown endpoint: " + tag);
    return it->second;
  }

  std::shared_ptr<Backend> backend(const std::string& tag) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = backends_.find(tag);
    if (it == backends_.end()) throw core::ConfigError("unknown endpoint: " + tag);
    return it->second;
  }

  // Convenience for tests: the scripted backend behind a tag, or null.
  std::shared_ptr<ScriptedBackend> scripted(const std::string& tag) const {
    return std::dynamic_pointer_cast<ScriptedBackend>(backend(tag));
  }

  SessionContext new_session(const std::string& endpoint_tag,
                             const std::optional<std::string>& system_prompt = std::nullopt,
                             std::string id_hint = {}) {
    [[maybe_unused]] const ModelEndpoint& ep = endpoint(endpoint_tag);  // existence check
    SessionContext session;
    session.endpoint_tag = endpoint_tag;
    session.id = id_hint.empty() ? endpoint_tag + "#" + std::to_string(session_counter_++) : id_hint;
    if (system_prompt && !system_prompt->empty()) {
      Message sys;
      sys.role = Role::System;
      sys.parts = {text_part(*system_prompt)};
      session.history.push_back(std::move(sys));
    }
    return session;
  }

  // Appends the user message and the assistant reply to the session and
  // returns the reply. Cache hits perform zero backend calls.
  Message complete(SessionContext& session, Message user_msg) {
    if (user_msg.role != Role::User)
      throw core::Error("complete() requires a User message");
    const ModelEndpoint ep = endpoint(session.endpoint_tag);

    TransportRequest req;
    req.endpoint_tag = ep.tag;
    req.session_id = session.id;
    req.params = ep.params;
    req.history = session.history;
    req.message = user_msg;

    std::string key = cache_key(req);
    std::string reply;
    if (auto cached = cache_.get(key)) {
      reply = *cached;
    } else {
      reply = dispatch_with_retries(ep, req);
      cache_.put(key, req, reply);
    }
    session.append(std::move(user_msg));
    Message assistant = assistant_text(reply);
    session.append(assistant);
    return assistant;
  }

  // One-shot helper: fresh session, single exchange, reply text returned.
  std::string complete_once(const std::string& endpoint_tag, const std::optional<std::string>& system_prompt,
                            Message user_msg, SessionContext* out_session = nullptr,
                            std::string id_hint = {}) {
    SessionContext session = new_session(endpoint_tag, system_prompt, std::move(id_hint));
    Message reply = complete(session, std::move(user_msg));
    if (out_session) *out_session = std::move(session);
    return reply.text();
  }

 private:
  struct InFlightGuard {
    Gateway& g;
    explicit InFlightGuard(Gateway& gw) : g(gw) {
      std::unique_lock<std::mutex> lock(g.flight_mutex_);
      g.flight_cv_.wait(lock, [&] { return g.in_flight_ < g.options_.max_in_flight; });
      ++g.in_flight_;
    }
    ~InFlightGuard() {
      {
        std::lock_guard<std::mutex> lock(g.flight_mutex_);
        --g.in_flight_;
      }
      g.flight_cv_.notify_one();
    }
  };

  std::string dispatch_with_retries(const ModelEndpoint& ep, const TransportRequest& req) {
    std::shared_ptr<Backend> be = backend(ep.tag);
    InFlightGuard guard(*this);
    throttle(ep);
    int attempts = ep.params.max_retries + 1;
    for (int attempt = 0;; ++attempt) {
      try {
        return be->complete(req);
      } catch (const core::TransportError& e) {  // includes RateLimitedError
        if (attempt + 1 >= attempts)
          throw core::TransportError("exhausted " + std::to_string(attempts) + " attempts against " +
                                     ep.tag + "; last error: " + e.what());
        options_.sleeper(backoff_ms(attempt));
      }
    }
  }

  // Exponential backoff with +/-25% jitter.
  int backoff_ms(int attempt) {
    std::int64_t base = static_cast<std::int64_t>(options_.backoff_base_ms) << std::min(attempt, 20);
    base = std::min<std::int64_t>(base, options_.backoff_cap_ms);
    std::lock_guard<std::mutex> lock(mutex_);
    std::uniform_int_distribution<int> dist(static_cast<int>(-base / 4), static_cast<int>(base / 4));
    return std::max<int>(1, static_cast<int>(base) + dist(jitter_rng_));
  }

  void throttle(const ModelEndpoint& ep) {
    if (ep.params.min_interval_ms <= 0) return;
    int wait_ms = 0;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto now = std::chrono::steady_clock::now();
      auto& last = last_call_[ep.tag];
      auto earliest = last + std::chrono::milliseconds(ep.params.min_interval_ms);
      if (last.time_since_epoch().count() != 0 && earliest > now) {
        wait_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(earliest - now).count());
        last = earliest;
      } else {
        last = now;
      }
    }
    if (wait_ms > 0) options_.sleeper(wait_ms);
  }

  Options options_;
  ResponseCache cache_;
  mutable std::mutex mutex_;
  std::map<std::string, ModelEndpoint> endpoints_;
  std::map<std::string, std::shared_ptr<Backend>> backends_;
  std::map<std::string, std::chrono::steady_clock::time_point> last_call_;
  std::mt19937_64 jitter_rng_;
  std::atomic<std::uint64_t> session_counter_{0};

  std::mutex flight_mutex_;
  std::condition_variable flight_cv_;
  int in_flight_ = 0;
};

}  // namespace bongard::gateway
