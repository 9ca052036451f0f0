#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "bongard/gateway/endpoint.hpp"
#include "bongard/gateway/message.hpp"

namespace bongard::gateway {

// Everything a backend sees for one completion. `history` is the session
// transcript before the new user message.
struct TransportRequest {
  std::string endpoint_tag;
  std::string session_id;
  EndpointParams params;
  std::vector<Message> history;
  Message message;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const TransportRequest& req) = 0;
};

// Deterministic scripted backend. Pops entries in order, enforces matchers,
// and keeps a full request log plus concurrency counters for assertions.
class ScriptedBackend : public Backend {
 public:
  struct LogEntry {
    TransportRequest request;
    std::size_t script_index = 0;
  };

  explicit ScriptedBackend(std::vector<ScriptEntry> script, int latency_ms = 0)
      : script_(std::move(script)), latency_ms_(latency_ms) {}

  std::string complete(const TransportRequest& req) override {
    int now_in_flight = ++in_flight_;
    int seen = max_in_flight_seen_.load();
    while (now_in_flight > seen && !max_in_flight_seen_.compare_exchange_weak(seen, now_in_flight)) {
    }
    if (latency_ms_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(latency_ms_));
    struct Guard {
      std::atomic<int>& c;
      ~Guard() { --c; }
    } guard{in_flight_};

    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    if (cursor_ >= script_.size())
      throw core::ScriptExhaustedError("scripted endpoint " + req.endpoint_tag + " out of replies after " +
                                       std::to_string(script_.size()) + " completions");
    const ScriptEntry& entry = script_[cursor_];
    check_matcher(entry, req);
    log_.push_back({req, cursor_});
    ++cursor_;
    switch (entry.kind) {
      case ScriptEntry::Kind::Reply: return entry.reply;
      case ScriptEntry::Kind::RateLimited:
        throw core::RateLimitedError("scripted 429 from " + req.endpoint_tag);
      case ScriptEntry::Kind::TransportError:
        throw core::TransportError("scripted transport failure from " + req.endpoint_tag);
      case ScriptEntry::Kind::ProviderError:
        throw core::ProviderError("scripted provider rejection from " + req.endpoint_tag);
    }
    throw core::Error("unreachable");
  }

  std::vector<LogEntry> log() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
  }
  int calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
  }
  std::size_t remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return script_.size() - cursor_;
  }
  int max_in_flight_seen() const { return max_in_flight_seen_.load(); }

 private:
  static void check_matcher(const ScriptEntry& entry, const TransportRequest& req) {
    if (entry.require_images && req.message.image_count() != *entry.require_images)
      throw core::MatcherMismatchError("script matcher expects " + std::to_string(*entry.require_images) +
                                       " image parts, request carries " +
                                       std::to_string(req.message.image_count()));
    if (!entry.require_text.empty()) {
      std::string text = req.message.text();
      for (const auto& needle : entry.require_text)
        if (text.find(needle) == std::string::npos)
          throw core::MatcherMismatchError("script matcher expects text containing \"" + needle + "\"");
    }
  }

  std::vector<ScriptEntry> script_;
  int latency_ms_ = 0;
  mutable std::mutex mutex_;
  std::vector<LogEntry> log_;
  std::size_t cursor_ = 0;
  int calls_ = 0;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_seen_{0};
};

// Computes replies from the request; used where a fixed script would be
// unwieldy (randomized property suites, mock judges).
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const TransportRequest&)>;
  explicit FunctionBackend(Fn fn) : fn_(std::move(fn)) {}

  std::string complete(const TransportRequest& req) override {
    ++calls_;
    return fn_(req);
  }

  int calls() const { return calls_.load(); }

 private:
  Fn fn_;
  std::atomic<int> calls_{0};
};

}  // namespace bongard::gateway
