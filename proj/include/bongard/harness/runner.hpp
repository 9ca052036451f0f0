#pragma once

#include <atomic>
#include <mutex>
#include <functional>
#include <thread>
#include <vector>

#include "bongard/core/manifest.hpp"
#include "bongard/core/test_split.hpp"
#include "bongard/harness/results.hpp"
#include "bongard/harness/run_spec.hpp"

namespace bongard::harness {

// Derives a stable per-problem seed from the run seed. Uses the content
// hash, not std::hash, so draws reproduce across toolchains.
inline std::uint64_t derive_seed(std::uint64_t seed, const std::string& problem_id,
                                 const std::string& salt) {
  std::string material = std::to_string(seed) + "\x1f" + problem_id + "\x1f" + salt;
  core::Sha256 h;
  h.update(material);
  auto digest = h.finish();
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out = (out << 8) | digest[i];
  return out;
}

// Drives (problem, model) tasks over the gateway and appends one record per
// outcome. Resumable: tuples already in the store are skipped up front.
class Runner {
 public:
  Runner(gateway::Gateway& gw, const RunSpec& spec, const core::DatasetManifest& manifest,
         ResultsStore& store)
      : gw_(gw), spec_(spec), manifest_(manifest), store_(store) {
    prompts::PromptCatalog catalog;
    if (!spec.prompt_overrides.empty()) catalog.load_overrides(spec.prompt_overrides);
    catalog_ = catalog;
    preamble_ = prompts::Preamble::from_catalog(catalog_);
  }

  // Test hook: stop scheduling after this many new records (simulates an
  // interrupted run). 0 means unlimited.
  void set_max_new_records(int n) { max_new_records_ = n; }

  // Natural-language generation over problems x solvers x strategies.
  bool solve(const std::vector<strategy::StrategyKind>& strategies) {
    strategy::StrategyEngine engine(gw_, engine_config());
    std::vector<std::function<void()>> tasks;
    for (const auto& bp : manifest_.problems) {
      for (const auto& model : spec_.solver_tags()) {
        for (strategy::StrategyKind kind : strategies) {
          ResultRecord r = base_record(bp, model, strategy_workload(kind));
          if (store_.contains(r)) continue;
          tasks.push_back([this, &engine, &bp, model, kind, r]() mutable {
            strategy::StrategyRun run = engine.solve(bp, kind, model, preamble_);
            r.payload = strategy_run_payload(run);
            store_.append(std::move(r));
          });
        }
      }
    }
    return run_tasks(tasks);
  }

  // Binary-classification settings over problems x solvers.
  bool classify(const std::vector<std::string>& settings) {
    eval::BinaryEvaluator evaluator(gw_, evaluator_config());
    std::vector<std::function<void()>> tasks;
    for (const auto& bp : manifest_.problems) {
      for (const auto& model : spec_.solver_tags()) {
        for (const auto& setting : settings) {
          std::string workload = "classify:" + setting;
          ResultRecord r = base_record(bp, model, workload);
          if (store_.contains(r)) continue;
          tasks.push_back([this, &evaluator, &bp, model, setting, r]() mutable {
            if (setting == "ground_truth") {
              auto outcome = evaluator.assess_label(bp, eval::render_candidate(bp.concept_label), model,
                                                    eval::OkWrong::Ok);
              r.payload = label_check_payload(outcome, setting);
            } else if (setting == "incorrect_label") {
              auto [label, source_id] = eval::BinaryEvaluator::sample_incorrect_label(
                  manifest_, bp, derive_seed(spec_.seed, bp.id, "incorrect_label"));
              auto outcome = evaluator.assess_label(bp, eval::render_candidate(label), model,
                                                    eval::OkWrong::Wrong);
              outcome.candidate_source_id = source_id;
              r.payload = label_check_payload(outcome, setting);
            } else {
              core::TestSplit split = core::make_test_split(bp);
              auto outcome = evaluator.images_to_sides(split.reduced, split.pair, model,
                                                       derive_seed(spec_.seed, bp.id, "sides"));
              r.payload = side_assignment_payload(outcome);
            }
            store_.append(std::move(r));
          });
        }
      }
    }
    return run_tasks(tasks);
  }

  // Adjudicates every recorded strategy answer that lacks a verdict yet.
  bool judge_answers() {
    if (spec_.judges.empty()) throw core::ConfigError("judging needs a nonempty judge list");
    std::vector<ResultRecord> existing = ResultsStore::read_all(store_.path());
    std::vector<std::function<void()>> tasks;
    for (const auto& rec : existing) {
      if (!rec.workload.starts_with("strategy:")) continue;
      strategy::StrategyKind kind = strategy::strategy_from_string(rec.workload.substr(9));
      const core::BongardProblem* bp = manifest_.find(rec.problem_id);
      if (!bp)
        throw core::ConfigError("recorded problem " + rec.problem_id + " is not in the manifest");
      ResultRecord r = base_record(*bp, rec.model, verdict_workload(kind));
      if (store_.contains(r)) continue;
      std::string answer = rec.payload.value("final_answer", std::string{});
      tasks.push_back([this, r, kind, answer, labels = bp->concept_label, problem_id = rec.problem_id,
                       model = rec.model]() mutable {
        judge::EnsembleVerdict verdict = judge::ensemble_verdict(
            gw_, answer, labels, spec_.judge_tags(), spec_.judge_variant, catalog_,
            spec_.judge_threshold, problem_id + "/" + model + "/" + strategy::to_string(kind));
        r.payload = verdict_payload(verdict, kind);
        store_.append(std::move(r));
      });
    }
    return run_tasks(tasks);
  }

  strategy::StrategyEngine::Config engine_config() const {
    strategy::StrategyEngine::Config cfg;
    cfg.layout = spec_.layout;
    cfg.compose_dir = compose_dir();
    cfg.catalog = catalog_;
    return cfg;
  }

  eval::BinaryEvaluator::Config evaluator_config() const {
    eval::BinaryEvaluator::Config cfg;
    cfg.layout = spec_.layout;
    cfg.compose_dir = compose_dir();
    cfg.catalog = catalog_;
    cfg.composed_context = spec_.composed_context;
    cfg.strict_json = spec_.strict_json;
    return cfg;
  }

 private:
  std::filesystem::path compose_dir() const {
    auto dir = spec_.output_dir / "composites";
    std::filesystem::create_directories(dir);
    return dir;
  }

  ResultRecord base_record(const core::BongardProblem& bp, const std::string& model,
                           const std::string& workload) const {
    ResultRecord r;
    r.run_id = spec_.run_id;
    r.problem_id = bp.id;
    r.dataset = core::to_string(bp.dataset);
    r.model = model;
    r.workload = workload;
    return r;
  }

  // Runs tasks in order (or across spec_.concurrency workers), honoring the
  // interruption hook. Returns true when every task ran.
  bool run_tasks(const std::vector<std::function<void()>>& tasks) {
    if (tasks.empty()) return true;
    std::atomic<bool> stopped{false};
    auto should_stop = [&] {
      return max_new_records_ > 0 && store_.appended() >= max_new_records_;
    };
    if (spec_.concurrency <= 1) {
      for (const auto& task : tasks) {
        if (should_stop()) return false;
        task();
      }
      return true;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    int workers = std::min<int>(spec_.concurrency, static_cast<int>(tasks.size()));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          if (stopped.load() || should_stop()) {
            stopped.store(true);
            return;
          }
          try {
            tasks[i]();
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            stopped.store(true);
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return !stopped.load();
  }

  gateway::Gateway& gw_;
  const RunSpec& spec_;
  const core::DatasetManifest& manifest_;
  ResultsStore& store_;
  prompts::PromptCatalog catalog_;
  prompts::Preamble preamble_;
  int max_new_records_ = 0;
};

// Marker file flagging a run that has not finished cleanly.
class PartialRunMarker {
 public:
  explicit PartialRunMarker(const std::filesystem::path& results_path)
      : path_(results_path.string() + ".partial") {
    core::write_file_text(path_, iso_timestamp() + "\n");
  }
  void complete() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    completed_ = true;
  }
  ~PartialRunMarker() = default;  // marker survives on abnormal exit
  bool completed() const { return completed_; }

 private:
  std::filesystem::path path_;
  bool completed_ = false;
};

}  // namespace bongard::harness
