#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bongard/core/errors.hpp"
#include "bongard/core/types.hpp"
#include "bongard/eval/binary.hpp"
#include "bongard/judge/ensemble.hpp"
#include "bongard/strategy/engine.hpp"

namespace bongard::harness {

using json = nlohmann::ordered_json;

// Workload identifiers as they appear in the results stream.
inline std::string strategy_workload(strategy::StrategyKind k) {
  return "strategy:" + strategy::to_string(k);
}
inline std::string verdict_workload(strategy::StrategyKind k) {
  return "verdict:" + strategy::to_string(k);
}
inline constexpr const char* kGroundTruthWorkload = "classify:ground_truth";
inline constexpr const char* kIncorrectLabelWorkload = "classify:incorrect_label";
inline constexpr const char* kImagesToSidesWorkload = "classify:images_to_sides";

struct ResultRecord {
  std::string run_id;
  std::string problem_id;
  std::string dataset;
  std::string model;
  std::string workload;
  json payload;
  std::string ts;

  std::string key() const { return problem_id + "\x1f" + model + "\x1f" + workload; }
};

inline std::string iso_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json record_to_json(const ResultRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["problem_id"] = r.problem_id;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["workload"] = r.workload;
  j["payload"] = r.payload;
  j["ts"] = r.ts;
  return j;
}

inline ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  r.run_id = j.value("run_id", std::string{});
  r.problem_id = j.value("problem_id", std::string{});
  r.dataset = j.value("dataset", std::string{});
  r.model = j.value("model", std::string{});
  r.workload = j.value("workload", std::string{});
  if (j.contains("payload")) r.payload = j.at("payload");
  r.ts = j.value("ts", std::string{});
  return r;
}

// Append-only JSONL stream with one line per outcome. The writer is
// serialized behind a mutex; each record goes out in a single write.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    for (const auto& r : read_all(path_)) keys_.insert(r.key());
  }

  const std::filesystem::path& path() const { return path_; }

  bool contains(const ResultRecord& r) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return keys_.contains(r.key());
  }

  bool contains(const std::string& problem_id, const std::string& model,
                const std::string& workload) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return keys_.contains(problem_id + "\x1f" + model + "\x1f" + workload);
  }

  // Returns false (and writes nothing) when the tuple is already recorded.
  bool append(ResultRecord r) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!keys_.insert(r.key()).second) return false;
    if (r.ts.empty()) r.ts = iso_timestamp();
    std::string line = record_to_json(r).dump() + "\n";
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw core::Error("cannot append to results file: " + path_.string());
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    ++appended_;
    return true;
  }

  int appended() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return appended_;
  }

  static std::vector<ResultRecord> read_all(const std::filesystem::path& path) {
    std::vector<ResultRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw core::SchemaError("results stream has a corrupt line: " + line);
      out.push_back(record_from_json(j));
    }
    return out;
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::set<std::string> keys_;
  int appended_ = 0;
};

// --- payload serializers ----------------------------------------------------

inline json strategy_run_payload(const strategy::StrategyRun& run) {
  json j;
  j["kind"] = "strategy_run";
  j["strategy"] = strategy::to_string(run.strategy);
  j["final_answer"] = run.final_answer;
  j["call_count"] = run.call_count;
  j["sessions"] = json::array();
  for (const auto& s : run.sessions) j["sessions"].push_back(gateway::session_to_json(s));
  j["wall_ms"] = run.wall_time.count();
  return j;
}

inline json verdict_payload(const judge::EnsembleVerdict& v, strategy::StrategyKind strategy_kind) {
  json j;
  j["kind"] = "verdict";
  j["strategy"] = strategy::to_string(strategy_kind);
  j["correct"] = v.correct;
  j["threshold"] = v.threshold;
  j["incomplete"] = v.incomplete;
  if (!v.failure_detail.empty()) j["failure"] = v.failure_detail;
  j["votes"] = json::array();
  for (const auto& vote : v.votes)
    j["votes"].push_back({{"judge", vote.judge_tag},
                          {"parsed", eval::to_string(vote.parsed)},
                          {"raw", vote.raw_reply}});
  return j;
}

inline json label_check_payload(const eval::LabelCheckOutcome& o, const std::string& setting) {
  json j;
  j["kind"] = "label_check";
  j["setting"] = setting;
  j["expected"] = eval::to_string(o.expected);
  j["parsed"] = eval::to_string(o.parsed);
  j["correct"] = o.correct;
  j["candidate"] = o.candidate;
  if (!o.candidate_source_id.empty()) j["candidate_source_id"] = o.candidate_source_id;
  j["raw"] = o.raw_reply;
  return j;
}

inline json side_assignment_payload(const eval::SideAssignment& a) {
  auto side_str = [](const std::optional<core::Side>& s) {
    return s ? core::to_wire(*s) : std::string{"UNPARSEABLE"};
  };
  json j;
  j["kind"] = "side_assignment";
  j["first"] = side_str(a.first);
  j["second"] = side_str(a.second);
  j["solved"] = a.solved;
  j["presented_swapped"] = a.presented_swapped;
  j["raw"] = a.raw_reply;
  return j;
}

}  // namespace bongard::harness
