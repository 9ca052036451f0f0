#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bongard/eval/parsers.hpp"
#include "bongard/gateway/gateway.hpp"
#include "bongard/prompts/catalog.hpp"

namespace bongard::judge {

enum class JudgeVariant { Initial, Final };

inline std::string to_string(JudgeVariant v) {
  return v == JudgeVariant::Initial ? "initial" : "final";
}

inline JudgeVariant variant_from_string(const std::string& s) {
  if (s == "initial") return JudgeVariant::Initial;
  if (s == "final") return JudgeVariant::Final;
  throw core::ConfigError("unknown judge variant: " + s);
}

struct Vote {
  std::string judge_tag;
  std::string raw_reply;
  eval::OkWrong parsed = eval::OkWrong::Unparseable;
};

// Hard-voting outcome: correct iff at least `threshold` judges voted OK.
// Unparseable votes count as not-OK.
struct EnsembleVerdict {
  std::vector<Vote> votes;
  int threshold = 2;
  bool correct = false;
  bool incomplete = false;      // a judge transport failed hard; excluded from aggregates
  std::string failure_detail;

  int ok_votes() const {
    int n = 0;
    for (const auto& v : votes)
      if (v.parsed == eval::OkWrong::Ok) ++n;
    return n;
  }
};

inline bool hard_vote(int ok_votes, int threshold) { return ok_votes >= threshold; }

// One text-only completion per judge; the template carries the labels and
// the answer, no image is ever attached.
inline Vote judge_answer(gateway::Gateway& gw, const std::string& answer,
                         const core::ConceptLabel& labels, const std::string& judge_tag,
                         JudgeVariant variant, const prompts::PromptCatalog& catalog,
                         const std::string& session_hint = {}) {
  if (answer.empty()) throw core::EmptyAnswerError("judge_answer requires a nonempty answer");
  std::string text = catalog.render(variant == JudgeVariant::Initial ? "judge_initial" : "judge_final",
                                    {{"left_label", labels.left_label},
                                     {"right_label", labels.right_label},
                                     {"model_answer", answer}});
  Vote vote;
  vote.judge_tag = judge_tag;
  vote.raw_reply = gw.complete_once(judge_tag, std::nullopt, gateway::user_text(text), nullptr,
                                    session_hint.empty() ? "judge/" + judge_tag : session_hint);
  vote.parsed = eval::parse_ok_wrong(vote.raw_reply);
  return vote;
}

inline EnsembleVerdict ensemble_verdict(gateway::Gateway& gw, const std::string& answer,
                                        const core::ConceptLabel& labels,
                                        const std::vector<std::string>& judge_tags,
                                        JudgeVariant variant, const prompts::PromptCatalog& catalog,
                                        int threshold = 2, const std::string& session_hint_prefix = {}) {
  if (static_cast<int>(judge_tags.size()) < threshold)
    throw core::ConfigError("ensemble needs at least " + std::to_string(threshold) + " judges, got " +
                            std::to_string(judge_tags.size()));
  EnsembleVerdict verdict;
  verdict.threshold = threshold;
  for (const auto& tag : judge_tags) {
    try {
      std::string hint = session_hint_prefix.empty() ? std::string{} : session_hint_prefix + "/" + tag;
      verdict.votes.push_back(judge_answer(gw, answer, labels, tag, variant, catalog, hint));
    } catch (const core::Error& e) {
      verdict.incomplete = true;
      verdict.failure_detail += std::string(verdict.failure_detail.empty() ? "" : "; ") + tag + ": " + e.what();
    }
  }
  verdict.correct = !verdict.incomplete && hard_vote(verdict.ok_votes(), threshold);
  return verdict;
}

// Manual-gold file: problem id -> manual correctness judgment.
inline std::map<std::string, bool> load_manual_gold(const std::filesystem::path& path) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::parse(core::read_file_text(path));
  if (!doc.is_object()) throw core::SchemaError("manual gold must be a JSON object");
  std::map<std::string, bool> gold;
  for (const auto& [id, value] : doc.items()) gold[id] = value.get<bool>();
  return gold;
}

// --- consensus measurement ------------------------------------------------

struct JudgedItem {
  std::string problem_id;
  std::vector<eval::OkWrong> votes;  // aligned with the judge-tag list
};

struct ConsensusReport {
  int items = 0;
  double unanimity_rate = 0.0;
  std::map<std::string, std::vector<std::string>> deviations;  // judge -> ids where vote != voting outcome
  // Present only when a manual-gold mapping is supplied.
  std::optional<double> all_models_rate;
  std::optional<double> any_model_rate;
  std::optional<double> voting_rate;
};

// Agreement statistics over aligned per-judge vote matrices, plus consensus
// with a manual evaluation under the three aggregation modes.
inline ConsensusReport consensus_report(const std::vector<JudgedItem>& items,
                                        const std::vector<std::string>& judge_tags, int threshold = 2,
                                        const std::map<std::string, bool>* manual_gold = nullptr) {
  ConsensusReport report;
  report.items = static_cast<int>(items.size());
  if (items.empty()) return report;

  int unanimous = 0;
  int all_match = 0, any_match = 0, voting_match = 0;
  for (const auto& item : items) {
    if (item.votes.size() != judge_tags.size())
      throw core::MisalignedIdsError("problem " + item.problem_id + " has " +
                                     std::to_string(item.votes.size()) + " votes for " +
                                     std::to_string(judge_tags.size()) + " judges");
    int ok = 0;
    for (auto v : item.votes)
      if (v == eval::OkWrong::Ok) ++ok;
    bool all_ok = ok == static_cast<int>(item.votes.size());
    bool none_ok = ok == 0;
    if (all_ok || none_ok) ++unanimous;
    bool voted = hard_vote(ok, threshold);
    for (std::size_t j = 0; j < judge_tags.size(); ++j)
      if ((item.votes[j] == eval::OkWrong::Ok) != voted)
        report.deviations[judge_tags[j]].push_back(item.problem_id);
    if (manual_gold) {
      auto it = manual_gold->find(item.problem_id);
      if (it == manual_gold->end())
        throw core::MisalignedIdsError("manual gold is missing problem " + item.problem_id);
      if (all_ok == it->second) ++all_match;
      if ((ok > 0) == it->second) ++any_match;
      if (voted == it->second) ++voting_match;
    }
  }
  report.unanimity_rate = static_cast<double>(unanimous) / report.items;
  if (manual_gold) {
    report.all_models_rate = static_cast<double>(all_match) / report.items;
    report.any_model_rate = static_cast<double>(any_match) / report.items;
    report.voting_rate = static_cast<double>(voting_match) / report.items;
  }
  return report;
}

}  // namespace bongard::judge
