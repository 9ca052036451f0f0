#pragma once

#include <random>
#include <string>

#include "bongard/core/compose.hpp"
#include "bongard/core/test_split.hpp"
#include "bongard/eval/parsers.hpp"
#include "bongard/gateway/gateway.hpp"
#include "bongard/prompts/catalog.hpp"

namespace bongard::eval {

struct LabelCheckOutcome {
  OkWrong expected = OkWrong::Ok;  // Ok for Ground-truth, Wrong for Incorrect Label
  OkWrong parsed = OkWrong::Unparseable;
  bool correct = false;
  std::string raw_reply;
  std::string candidate;
  std::string candidate_source_id;  // which problem lent the label (incorrect setting)
};

struct SideAssignment {
  std::optional<core::Side> first;   // parsed side for pair.first, after un-shuffling
  std::optional<core::Side> second;  // parsed side for pair.second
  bool solved = false;
  bool presented_swapped = false;
  std::string raw_reply;
};

struct SettingSummary {
  int correct = 0;
  int total = 0;
  double rate() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// How a candidate concept is written into the evaluation prompt's slot.
inline std::string render_candidate(const core::ConceptLabel& label) {
  return "LEFT: " + label.left_label + " RIGHT: " + label.right_label;
}

// The three binary-classification settings. Stateless over the gateway;
// safe to run many problems concurrently.
class BinaryEvaluator {
 public:
  struct Config {
    core::LayoutParams layout;
    std::filesystem::path compose_dir = std::filesystem::temp_directory_path() / "bongard-compose";
    prompts::PromptCatalog catalog;
    bool composed_context = false;  // Images-to-Sides: send one matrix instead of panels
    bool strict_json = false;       // reject prose- or fence-wrapped replies
  };

  BinaryEvaluator(gateway::Gateway& gw, Config config) : gw_(gw), config_(std::move(config)) {}

  // Ground-truth / Incorrect Label: one completion with the whole-matrix
  // image and the assessment prompt; the reply is parsed for OK / WRONG.
  LabelCheckOutcome assess_label(const core::BongardProblem& bp, const std::string& candidate,
                                 const std::string& endpoint_tag, OkWrong expected = OkWrong::Ok) {
    core::ImageRef matrix = core::compose_matrix_image(bp, config_.layout, config_.compose_dir);
    std::string text = config_.catalog.render("assess_answer", {{"user_answer", candidate}});
    std::string reply = gw_.complete_once(
        endpoint_tag, std::nullopt,
        gateway::user_message({gateway::image_part(matrix), gateway::text_part(text)}), nullptr,
        bp.id + "/assess/" + endpoint_tag);
    LabelCheckOutcome out;
    out.expected = expected;
    out.candidate = candidate;
    out.raw_reply = reply;
    out.parsed = parse_ok_wrong(reply);
    out.correct = out.parsed == expected;
    return out;
  }

  gateway::Gateway& gateway() { return gw_; }
  const Config& config() const { return config_; }

  // Uniform draw of another problem's concept; deterministic per seed.
  static std::pair<core::ConceptLabel, std::string> sample_incorrect_label(
      const core::DatasetManifest& dataset, const core::BongardProblem& bp, std::uint64_t seed) {
    std::vector<const core::BongardProblem*> others;
    for (const auto& p : dataset.problems)
      if (p.id != bp.id) others.push_back(&p);
    if (others.empty())
      throw core::TooFewProblemsError("need at least 2 problems to borrow an incorrect label");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, others.size() - 1);
    const core::BongardProblem* pick = others[dist(rng)];
    return {pick->concept_label, pick->id};
  }

  // Images to Sides: the two test images are shown in seed-determined order
  // with the classification prompt and the context panels; solved only when
  // both assignments match the truth after un-shuffling.
  SideAssignment images_to_sides(const core::BongardProblem& reduced, const core::TestPair& pair,
                                 const std::string& endpoint_tag, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    bool swap = (rng() & 1) != 0;
    const core::ImageRef& shown_first = swap ? pair.second : pair.first;
    const core::ImageRef& shown_second = swap ? pair.first : pair.second;

    std::vector<gateway::MessagePart> parts;
    parts.push_back(gateway::text_part(config_.catalog.get("classify_sides")));
    if (config_.composed_context) {
      parts.push_back(gateway::text_part("Problem:"));
      parts.push_back(gateway::image_part(
          core::compose_matrix_image(reduced, config_.layout, config_.compose_dir)));
    } else {
      parts.push_back(gateway::text_part("Left images:"));
      for (const auto& panel : reduced.left) parts.push_back(gateway::image_part(panel));
      parts.push_back(gateway::text_part("Right images:"));
      for (const auto& panel : reduced.right) parts.push_back(gateway::image_part(panel));
    }
    parts.push_back(gateway::text_part("First test image:"));
    parts.push_back(gateway::image_part(shown_first));
    parts.push_back(gateway::text_part("Second test image:"));
    parts.push_back(gateway::image_part(shown_second));

    std::string reply = gw_.complete_once(endpoint_tag, std::nullopt,
                                          gateway::user_message(std::move(parts)), nullptr,
                                          reduced.id + "/sides/" + endpoint_tag);

    SidesReply parsed = parse_sides_reply(reply, config_.strict_json);
    SideAssignment out;
    out.presented_swapped = swap;
    out.raw_reply = reply;
    // un-shuffle: map presented slots back onto the pair
    out.first = swap ? parsed.second : parsed.first;
    out.second = swap ? parsed.first : parsed.second;
    out.solved = out.first && out.second && *out.first == pair.first_side &&
                 *out.second == pair.second_side;
    return out;
  }

  static SettingSummary score_label_outcomes(const std::vector<LabelCheckOutcome>& outcomes) {
    SettingSummary s;
    s.total = static_cast<int>(outcomes.size());
    for (const auto& o : outcomes)
      if (o.correct) ++s.correct;
    return s;
  }

  static SettingSummary score_side_outcomes(const std::vector<SideAssignment>& outcomes) {
    SettingSummary s;
    s.total = static_cast<int>(outcomes.size());
    for (const auto& o : outcomes)
      if (o.solved) ++s.correct;
    return s;
  }

 private:
  gateway::Gateway& gw_;
  Config config_;
};

}  // namespace bongard::eval
