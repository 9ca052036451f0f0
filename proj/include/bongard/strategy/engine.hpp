#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <functional>
#include <mutex>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "bongard/core/compose.hpp"
#include "bongard/core/types.hpp"
#include "bongard/gateway/gateway.hpp"
#include "bongard/prompts/catalog.hpp"

namespace bongard::strategy {

enum class StrategyKind {
  Direct,
  Descriptive,
  DescriptiveIterative,
  DescriptiveDirect,
  Contrastive,
  ContrastiveIterative,
  ContrastiveDirect,
};

inline constexpr std::array<StrategyKind, 7> kAllStrategies = {
    StrategyKind::Direct,          StrategyKind::Descriptive,
    StrategyKind::DescriptiveIterative, StrategyKind::DescriptiveDirect,
    StrategyKind::Contrastive,     StrategyKind::ContrastiveIterative,
    StrategyKind::ContrastiveDirect,
};

inline std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::Direct: return "direct";
    case StrategyKind::Descriptive: return "descriptive";
    case StrategyKind::DescriptiveIterative: return "descriptive-iterative";
    case StrategyKind::DescriptiveDirect: return "descriptive-direct";
    case StrategyKind::Contrastive: return "contrastive";
    case StrategyKind::ContrastiveIterative: return "contrastive-iterative";
    case StrategyKind::ContrastiveDirect: return "contrastive-direct";
  }
  return "direct";
}

inline StrategyKind strategy_from_string(const std::string& s) {
  for (StrategyKind k : kAllStrategies)
    if (to_string(k) == s) return k;
  throw core::ConfigError("unknown strategy: " + s);
}

// Expected completions per strategy against any backend.
inline int expected_call_count(StrategyKind k) {
  switch (k) {
    case StrategyKind::Direct: return 1;
    case StrategyKind::Descriptive:
    case StrategyKind::DescriptiveDirect: return 13;
    case StrategyKind::DescriptiveIterative: return 15;
    case StrategyKind::Contrastive:
    case StrategyKind::ContrastiveIterative:
    case StrategyKind::ContrastiveDirect: return 7;
  }
  return 0;
}

// Full trace of one strategy execution.
struct StrategyRun {
  std::string problem_id;
  StrategyKind strategy = StrategyKind::Direct;
  std::string endpoint_tag;
  std::vector<gateway::SessionContext> sessions;
  std::string final_answer;
  int call_count = 0;
  std::chrono::milliseconds wall_time{0};
};

// Executes the seven answer-generation strategies as explicit call graphs.
// Independent-context fan-out (captions, pair comparisons) can be widened
// via Config::fanout; the default keeps request order deterministic.
class StrategyEngine {
 public:
  struct Config {
    core::LayoutParams layout;
    std::filesystem::path compose_dir = std::filesystem::temp_directory_path() / "bongard-compose";
    prompts::PromptCatalog catalog;
    int fanout = 1;
  };

  StrategyEngine(gateway::Gateway& gw, Config config) : gw_(gw), config_(std::move(config)) {}

  StrategyRun solve(const core::BongardProblem& bp, StrategyKind kind, const std::string& endpoint_tag,
                    const prompts::Preamble& preamble) {
    switch (kind) {
      case StrategyKind::Direct: return run_direct(bp, endpoint_tag, preamble);
      case StrategyKind::Descriptive: return run_descriptive(bp, endpoint_tag, preamble, false);
      case StrategyKind::DescriptiveDirect: return run_descriptive(bp, endpoint_tag, preamble, true);
      case StrategyKind::DescriptiveIterative:
        return run_descriptive_iterative(bp, endpoint_tag, preamble);
      case StrategyKind::Contrastive: return run_contrastive(bp, endpoint_tag, preamble, false);
      case StrategyKind::ContrastiveDirect: return run_contrastive(bp, endpoint_tag, preamble, true);
      case StrategyKind::ContrastiveIterative:
        return run_contrastive_iterative(bp, endpoint_tag, preamble);
    }
    throw core::Error("unreachable strategy kind");
  }

  // One completion: whole-matrix image plus the solver prompt.
  StrategyRun run_direct(const core::BongardProblem& bp, const std::string& tag,
                         const prompts::Preamble& preamble) {
    Trace trace(bp, StrategyKind::Direct, tag);
    core::ImageRef matrix = compose(bp);
    auto session = gw_.new_session(tag, preamble.task_description, session_id(bp, "direct", "main"));
    gw_.complete(session, gateway::user_message({gateway::image_part(matrix),
                                                 gateway::text_part(config_.catalog.get("direct_solver"))}));
    trace.final_from(session);
    trace.add(std::move(session));
    return trace.finish();
  }

  // 12 captions in isolated contexts (L1..L6 then R1..R6), then one
  // synthesis request over the caption blocks; 13 completions.
  StrategyRun run_descriptive(const core::BongardProblem& bp, const std::string& tag,
                              const prompts::Preamble& preamble, bool direct) {
    StrategyKind kind = direct ? StrategyKind::DescriptiveDirect : StrategyKind::Descriptive;
    Trace trace(bp, kind, tag);
    std::string caption_prompt = config_.catalog.get("caption_panel");

    std::vector<gateway::SessionContext> caption_sessions(12);
    std::vector<std::string> captions(12);
    for_each_indexed(12, [&](int i) {
      core::Side side = i < 6 ? core::Side::Left : core::Side::Right;
      int k = i % 6;
      std::string name = (side == core::Side::Left ? "caption-L" : "caption-R") + std::to_string(k + 1);
      auto session = gw_.new_session(tag, preamble.task_description,
                                     session_id(bp, to_string(kind), name));
      gateway::Message reply =
          gw_.complete(session, gateway::user_message({gateway::image_part(bp.side(side)[k]),
                                                       gateway::text_part(caption_prompt)}));
      captions[i] = reply.text();
      caption_sessions[i] = std::move(session);
    });
    for (auto& s : caption_sessions) trace.add(std::move(s));

    std::string text = config_.catalog.render(
        "descriptive_synthesis", {{"left_descriptions", join(captions, 0, 6)},
                                  {"right_descriptions", join(captions, 6, 12)}});
    gateway::SessionContext synth = synthesis(bp, kind, tag, preamble, text, direct);
    trace.final_from(synth);
    trace.add(std::move(synth));
    return trace.finish();
  }

  // Two shared-context side dialogs (6 image turns + final-answer turn each),
  // then one synthesis over the two side descriptions; 15 completions.
  StrategyRun run_descriptive_iterative(const core::BongardProblem& bp, const std::string& tag,
                                        const prompts::Preamble& preamble) {
    StrategyKind kind = StrategyKind::DescriptiveIterative;
    Trace trace(bp, kind, tag);
    std::string framing = preamble.task_description + "\n\n" + config_.catalog.get("iterative_side_framing");
    std::array<std::string, 2> side_descriptions;
    for (core::Side side : {core::Side::Left, core::Side::Right}) {
      auto session = gw_.new_session(
          tag, framing, session_id(bp, to_string(kind), side == core::Side::Left ? "side-L" : "side-R"));
      for (const core::ImageRef& panel : bp.side(side))
        gw_.complete(session, gateway::user_message({gateway::image_part(panel)}));
      gateway::Message reply =
          gw_.complete(session, gateway::user_text(config_.catalog.get("iterative_last_image")));
      side_descriptions[side == core::Side::Left ? 0 : 1] = reply.text();
      trace.add(std::move(session));
    }
    std::string text = config_.catalog.render("iterative_synthesis",
                                              {{"left_description", side_descriptions[0]},
                                               {"right_description", side_descriptions[1]}});
    gateway::SessionContext synth = synthesis(bp, kind, tag, preamble, text, /*with_matrix=*/false);
    trace.final_from(synth);
    trace.add(std::move(synth));
    return trace.finish();
  }

  // Six pair comparisons in isolated contexts, then one synthesis over the
  // comparison block; 7 completions.
  StrategyRun run_contrastive(const core::BongardProblem& bp, const std::string& tag,
                              const prompts::Preamble& preamble, bool direct) {
    StrategyKind kind = direct ? StrategyKind::ContrastiveDirect : StrategyKind::Contrastive;
    Trace trace(bp, kind, tag);
    std::string compare_prompt = config_.catalog.get("compare_pair");

    std::vector<gateway::SessionContext> pair_sessions(6);
    std::vector<std::string> comparisons(6);
    for_each_indexed(6, [&](int k) {
      auto session = gw_.new_session(tag, preamble.task_description,
                                     session_id(bp, to_string(kind), "pair-" + std::to_string(k + 1)));
      gateway::Message reply = gw_.complete(
          session, gateway::user_message({gateway::image_part(bp.left[k]),
                                          gateway::image_part(bp.right[k]),
                                          gateway::text_part(compare_prompt)}));
      comparisons[k] = reply.text();
      pair_sessions[k] = std::move(session);
    });
    for (auto& s : pair_sessions) trace.add(std::move(s));

    std::string text =
        config_.catalog.render("contrastive_synthesis", {{"comparisons", join(comparisons, 0, 6)}});
    gateway::SessionContext synth = synthesis(bp, kind, tag, preamble, text, direct);
    trace.final_from(synth);
    trace.add(std::move(synth));
    return trace.finish();
  }

  // One shared context: six pair turns, then the closing question; the last
  // reply is the answer. 7 completions.
  StrategyRun run_contrastive_iterative(const core::BongardProblem& bp, const std::string& tag,
                                        const prompts::Preamble& preamble) {
    StrategyKind kind = StrategyKind::ContrastiveIterative;
    Trace trace(bp, kind, tag);
    std::string framing =
        preamble.task_description + "\n\n" + config_.catalog.get("contrastive_iterative_framing");
    auto session = gw_.new_session(tag, framing, session_id(bp, to_string(kind), "dialog"));
    for (int k = 0; k < 6; ++k)
      gw_.complete(session, gateway::user_message({gateway::image_part(bp.left[k]),
                                                   gateway::image_part(bp.right[k])}));
    gw_.complete(session, gateway::user_text(config_.catalog.get("contrastive_last_pair")));
    trace.final_from(session);
    trace.add(std::move(session));
    return trace.finish();
  }

  core::ImageRef compose(const core::BongardProblem& bp) {
    return core::compose_matrix_image(bp, config_.layout, config_.compose_dir);
  }

 private:
  // Collects sessions, derives call_count, and enforces a nonempty answer.
  struct Trace {
    StrategyRun run;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    Trace(const core::BongardProblem& bp, StrategyKind kind, const std::string& tag) {
      run.problem_id = bp.id;
      run.strategy = kind;
      run.endpoint_tag = tag;
    }

    void add(gateway::SessionContext session) { run.sessions.push_back(std::move(session)); }

    void final_from(const gateway::SessionContext& session) {
      const gateway::Message* last = session.last_assistant();
      run.final_answer = last ? last->text() : std::string{};
    }

    StrategyRun finish() {
      run.call_count = 0;
      for (const auto& s : run.sessions) run.call_count += s.assistant_count();
      run.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      std::string trimmed = run.final_answer;
      while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) trimmed.pop_back();
      if (trimmed.empty())
        throw core::EmptyAnswerError("model " + run.endpoint_tag + " returned a blank answer for problem " +
                                     run.problem_id);
      return std::move(run);
    }
  };

  gateway::SessionContext synthesis(const core::BongardProblem& bp, StrategyKind kind,
                                    const std::string& tag, const prompts::Preamble& preamble,
                                    const std::string& text, bool with_matrix) {
    auto session = gw_.new_session(tag, preamble.task_description,
                                   session_id(bp, to_string(kind), "synthesis"));
    std::vector<gateway::MessagePart> parts;
    if (with_matrix) parts.push_back(gateway::image_part(compose(bp)));  // image precedes the text block
    parts.push_back(gateway::text_part(text));
    gw_.complete(session, gateway::user_message(std::move(parts)));
    return session;
  }

  static std::string session_id(const core::BongardProblem& bp, const std::string& strategy,
                                const std::string& role) {
    return bp.id + "/" + strategy + "/" + role;
  }

  static std::string join(const std::vector<std::string>& items, int from, int to) {
    std::string out;
    for (int i = from; i < to; ++i) {
      if (i > from) out += "\n";
      out += items[i];
    }
    return out;
  }

  // Runs fn(0..n-1); order is sequential unless fanout > 1, in which case
  // the independent contexts run on a small thread pool.
  void for_each_indexed(int n, const std::function<void(int)>& fn) {
    if (config_.fanout <= 1) {
      for (int i = 0; i < n; ++i) fn(i);
      return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    int workers = std::min(config_.fanout, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  gateway::Gateway& gw_;
  Config config_;
};

}  // namespace bongard::strategy
