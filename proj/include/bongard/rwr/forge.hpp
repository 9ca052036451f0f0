#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bongard/core/manifest.hpp"
#include "bongard/eval/parsers.hpp"
#include "bongard/gateway/gateway.hpp"
#include "bongard/prompts/catalog.hpp"
#include "bongard/rwr/search.hpp"

namespace bongard::rwr {

struct TranslationSide {
  std::string concept_text;
  std::string prompt;  // search hint; falls back to the concept text
};

struct ConceptTranslation {
  int index = 0;
  TranslationSide left;
  TranslationSide right;

  const TranslationSide& side(core::Side s) const { return s == core::Side::Left ? left : right; }
};

struct RwrParams {
  int images_per_side = 15;  // M
  int translations = 10;     // N
  int required = 3;          // T

  void validate() const {
    if (images_per_side < 1 || translations < 1 || required < 1)
      throw core::ConfigError("generation parameters must be positive");
    if (required > translations)
      throw core::ConfigError("required translations cannot exceed the translation count");
  }
};

struct SlotProvenance {
  int translation_index = 0;
  int occurrence = 1;  // 1 or 2
};

// An assembled real-world instance: per side, the first accepted image of
// each qualifying translation, then their second ones.
struct RwrInstance {
  std::string source_bp_id;
  std::vector<core::ImageRef> left;
  std::vector<core::ImageRef> right;
  std::vector<SlotProvenance> left_provenance;
  std::vector<SlotProvenance> right_provenance;
  std::vector<ConceptTranslation> used_translations;
  RwrParams params;
};

// One filtered candidate: which translation and side it was fetched for,
// its rank in the search stream, and the judge's decision.
struct CandidateImage {
  int translation_index = 0;
  core::Side side = core::Side::Left;
  int rank = 1;  // m-step that fetched it
  core::ImageRef image;
  bool accepted = false;
  bool flagged = false;
  std::string judge_explanation;
};

struct ConceptBuildStats {
  std::string source_bp_id;
  int translations_parsed = 0;
  int images_fetched = 0;
  int filter_calls = 0;
  int accepted = 0;
  int rejected = 0;
  int flagged = 0;
  int qualified = 0;
  bool produced = false;
  std::string skip_reason;
  std::vector<std::string> warnings;
  std::vector<CandidateImage> candidates;
};

struct TranslationParse {
  std::vector<ConceptTranslation> translations;
  std::vector<std::string> warnings;
};

// Reply must be a raw JSON array of {left,right} objects (a bare object is
// taken as a one-element array). Short arrays produce a warning; oversize
// arrays are truncated to n.
inline TranslationParse parse_translations(const std::string& reply, int n) {
  TranslationParse out;
  std::optional<std::string> blob = eval::extract_first_json(reply, '[');
  if (!blob) blob = eval::extract_first_json(reply, '{');
  if (!blob) throw core::ParseError("translation reply contains no JSON array");
  nlohmann::json doc = nlohmann::json::parse(*blob, nullptr, false);
  if (doc.is_discarded()) throw core::ParseError("translation reply is not valid JSON");
  if (doc.is_object()) doc = nlohmann::json::array({doc});
  if (!doc.is_array()) throw core::ParseError("translation reply is not an array of objects");
  for (const auto& item : doc) {
    if (static_cast<int>(out.translations.size()) >= n) {
      out.warnings.push_back("oversize translation array truncated to " + std::to_string(n));
      break;
    }
    if (!item.is_object() || !item.contains("left") || !item.contains("right"))
      throw core::ParseError("translation entry is not a {left,right} object");
    ConceptTranslation t;
    t.index = static_cast<int>(out.translations.size());
    for (core::Side s : {core::Side::Left, core::Side::Right}) {
      const auto& node = item.at(s == core::Side::Left ? "left" : "right");
      TranslationSide& side = s == core::Side::Left ? t.left : t.right;
      if (node.is_string()) {
        side.concept_text = node.get<std::string>();
      } else if (node.is_object()) {
        side.concept_text = node.value("concept", std::string{});
        side.prompt = node.value("prompt", std::string{});
      }
      if (side.concept_text.empty())
        throw core::ParseError("translation entry with empty concept text");
      if (side.prompt.empty()) side.prompt = side.concept_text;
    }
    out.translations.push_back(std::move(t));
  }
  if (static_cast<int>(out.translations.size()) < n)
    out.warnings.push_back("model produced " + std::to_string(out.translations.size()) +
                           " translations, asked for " + std::to_string(n));
  return out;
}

struct FilterDecision {
  bool accepted = false;
  bool flagged = false;
  std::string explanation;
  std::string raw_reply;
};

// The generation pipeline: translate the concept, stream candidate images
// per translated side, filter each with the judge model, and assemble an
// instance once three translations qualify.
class RwrForge {
 public:
  struct Config {
    RwrParams params;
    std::string translate_tag;
    std::string filter_tag;
    std::filesystem::path staging = std::filesystem::temp_directory_path() / "bongard-rwr-staging";
    prompts::PromptCatalog catalog;
  };

  RwrForge(gateway::Gateway& gw, ImageSearchClient& client, Config config)
      : gw_(gw), client_(client), config_(std::move(config)) {
    config_.params.validate();
  }

  // One completion; the reply is parsed as the translation array.
  std::vector<ConceptTranslation> generate_translations(const core::ConceptLabel& concept_label, int n,
                                                        std::vector<std::string>* warnings = nullptr,
                                                        const std::string& session_hint = {}) {
    if (n < 1) throw core::ConfigError("translation count must be at least 1");
    std::string text = config_.catalog.render("translate_concept",
                                              {{"number", std::to_string(n)},
                                               {"concept", core::concept_vs_text(concept_label)}});
    std::string reply = gw_.complete_once(config_.translate_tag, std::nullopt,
                                          gateway::user_text(text), nullptr, session_hint);
    TranslationParse parsed = parse_translations(reply, n);
    if (warnings)
      warnings->insert(warnings->end(), parsed.warnings.begin(), parsed.warnings.end());
    return parsed.translations;
  }

  // One completion carrying the candidate image and the filled filter
  // prompt. Unparseable replies reject with a flag, never throw.
  FilterDecision filter_image(const ConceptTranslation& translation, core::Side side,
                              const core::ImageRef& image, const core::ConceptLabel& source_concept,
                              const std::string& session_hint = {}) {
    std::string text = config_.catalog.render(
        "filter_image", {{"left_geometric_concept", source_concept.left_label},
                         {"right_geometric_concept", source_concept.right_label},
                         {"left_concept", translation.left.concept_text},
                         {"left_concept_description", translation.left.prompt},
                         {"right_concept", translation.right.concept_text},
                         {"right_concept_description", translation.right.prompt},
                         {"side_concept", translation.side(side).concept_text}});
    std::string reply = gw_.complete_once(
        config_.filter_tag, std::nullopt,
        gateway::user_message({gateway::image_part(image), gateway::text_part(text)}), nullptr,
        session_hint);
    eval::FilterReply parsed = eval::parse_filter_reply(reply);
    FilterDecision out;
    out.accepted = parsed.accepted && !parsed.flagged;
    out.flagged = parsed.flagged;
    out.explanation = parsed.explanation;
    out.raw_reply = reply;
    return out;
  }

  // Translation loop per the generation algorithm: for each translation,
  // alternate sides one image at a time up to M per side, stop the
  // translation as soon as both sides hold two accepted images, and stop
  // translating once T translations qualify.
  std::optional<RwrInstance> run_pipeline(const core::BongardProblem& source,
                                          ConceptBuildStats* stats_out = nullptr) {
    ConceptBuildStats stats;
    stats.source_bp_id = source.id;
    const RwrParams& params = config_.params;

    std::vector<ConceptTranslation> translations =
        generate_translations(source.concept_label, params.translations, &stats.warnings,
                              source.id + "/translate");
    stats.translations_parsed = static_cast<int>(translations.size());

    std::set<std::string> seen_digests;  // concept-wide: no digest repeats in the instance
    std::vector<int> qualifying;
    std::map<int, std::array<std::vector<core::ImageRef>, 2>> accepted;

    for (const ConceptTranslation& translation : translations) {
      if (static_cast<int>(qualifying.size()) >= params.required) break;
      ImageStream left_stream(client_, translation.left.prompt, config_.staging, seen_digests);
      ImageStream right_stream(client_, translation.right.prompt, config_.staging, seen_digests);
      auto& acc = accepted[translation.index];
      for (int m = 1; m <= params.images_per_side; ++m) {
        for (core::Side side : {core::Side::Left, core::Side::Right}) {
          auto& stream = side == core::Side::Left ? left_stream : right_stream;
          std::optional<core::ImageRef> image = stream.next();
          if (!image) continue;
          ++stats.images_fetched;
          ++stats.filter_calls;
          FilterDecision decision =
              filter_image(translation, side, *image, source.concept_label,
                           source.id + "/filter/" + std::to_string(translation.index) + "/" +
                               core::to_wire(side) + "/" + image->digest.substr(0, 12));
          if (decision.flagged) ++stats.flagged;
          stats.candidates.push_back({translation.index, side, m, *image, decision.accepted,
                                      decision.flagged, decision.explanation});
          if (decision.accepted) {
            ++stats.accepted;
            acc[side == core::Side::Left ? 0 : 1].push_back(std::move(*image));
          } else {
            ++stats.rejected;
          }
        }
        if (acc[0].size() >= 2 && acc[1].size() >= 2) {
          qualifying.push_back(translation.index);
          break;  // remaining downloads for this translation stop here
        }
        if (left_stream.exhausted() && right_stream.exhausted()) break;
      }
    }

    stats.qualified = static_cast<int>(qualifying.size());
    if (stats.qualified < params.required) {
      stats.skip_reason = "only " + std::to_string(stats.qualified) + " of " +
                          std::to_string(params.required) + " required translations qualified";
      if (stats_out) *stats_out = std::move(stats);
      return std::nullopt;
    }

    RwrInstance instance;
    instance.source_bp_id = source.id;
    instance.params = params;
    for (int occurrence = 1; occurrence <= 2; ++occurrence) {
      for (int index : qualifying) {
        const auto& acc = accepted.at(index);
        instance.left.push_back(acc[0][occurrence - 1]);
        instance.left_provenance.push_back({index, occurrence});
        instance.right.push_back(acc[1][occurrence - 1]);
        instance.right_provenance.push_back({index, occurrence});
      }
    }
    for (int index : qualifying) instance.used_translations.push_back(translations[index]);
    stats.produced = true;
    if (stats_out) *stats_out = std::move(stats);
    return instance;
  }

  struct ForgeResult {
    core::DatasetManifest manifest;
    nlohmann::ordered_json manifest_json;  // manifest plus per-problem provenance
    std::vector<ConceptBuildStats> report;
  };

  // Runs the pipeline over every source concept. Per-concept errors are
  // recorded and the run continues; concepts that fail to qualify are
  // reported, never padded.
  ForgeResult forge_dataset(const std::vector<core::BongardProblem>& sources) {
    ForgeResult result;
    result.manifest.name = "bongard-rwr-forged";
    result.manifest.source_notes = "assembled from translated concepts and filtered search images";
    result.manifest_json["name"] = result.manifest.name;
    result.manifest_json["source_notes"] = result.manifest.source_notes;
    result.manifest_json["problems"] = nlohmann::ordered_json::array();
    for (const core::BongardProblem& source : sources) {
      ConceptBuildStats stats;
      std::optional<RwrInstance> instance;
      try {
        instance = run_pipeline(source, &stats);
      } catch (const core::Error& e) {
        stats.source_bp_id = source.id;
        stats.skip_reason = std::string{"error: "} + e.what();
      }
      result.report.push_back(stats);
      if (!instance) continue;
      core::BongardProblem bp = to_problem(*instance, source);
      nlohmann::ordered_json pj = core::problem_to_json(bp);
      pj["provenance"] = provenance_json(*instance);
      result.manifest_json["problems"].push_back(std::move(pj));
      result.manifest.problems.push_back(std::move(bp));
    }
    return result;
  }

  static core::BongardProblem to_problem(const RwrInstance& instance,
                                         const core::BongardProblem& source) {
    core::BongardProblem bp;
    bp.id = "rwr-" + instance.source_bp_id;
    bp.dataset = core::DatasetKind::RWR;
    bp.left = instance.left;
    bp.right = instance.right;
    bp.concept_label = source.concept_label;
    bp.categories = source.categories;
    core::validate_problem(bp);
    return bp;
  }

  static nlohmann::ordered_json provenance_json(const RwrInstance& instance) {
    nlohmann::ordered_json j;
    j["source_bp_id"] = instance.source_bp_id;
    j["params"] = {{"images_per_side", instance.params.images_per_side},
                   {"translations", instance.params.translations},
                   {"required", instance.params.required}};
    auto slots = [](const std::vector<SlotProvenance>& prov) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& p : prov)
        arr.push_back({{"translation", p.translation_index}, {"occurrence", p.occurrence}});
      return arr;
    };
    j["left"] = slots(instance.left_provenance);
    j["right"] = slots(instance.right_provenance);
    nlohmann::ordered_json used = nlohmann::ordered_json::array();
    for (const auto& t : instance.used_translations)
      used.push_back({{"index", t.index},
                      {"left", {{"concept", t.left.concept_text}, {"prompt", t.left.prompt}}},
                      {"right", {{"concept", t.right.concept_text}, {"prompt", t.right.prompt}}}});
    j["used_translations"] = used;
    return j;
  }

  static nlohmann::ordered_json report_json(const std::vector<ConceptBuildStats>& report) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : report) {
      nlohmann::ordered_json j;
      j["source_bp_id"] = s.source_bp_id;
      j["translations_parsed"] = s.translations_parsed;
      j["images_fetched"] = s.images_fetched;
      j["filter_calls"] = s.filter_calls;
      j["accepted"] = s.accepted;
      j["rejected"] = s.rejected;
      j["flagged"] = s.flagged;
      j["qualified"] = s.qualified;
      j["produced"] = s.produced;
      if (!s.skip_reason.empty()) j["skip_reason"] = s.skip_reason;
      if (!s.warnings.empty()) j["warnings"] = s.warnings;
      nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
      for (const auto& c : s.candidates)
        candidates.push_back({{"translation", c.translation_index},
                              {"side", core::to_wire(c.side)},
                              {"rank", c.rank},
                              {"image", c.image.id},
                              {"digest", c.image.digest},
                              {"accepted", c.accepted},
                              {"flagged", c.flagged},
                              {"explanation", c.judge_explanation}});
      j["candidates"] = std::move(candidates);
      arr.push_back(std::move(j));
    }
    return arr;
  }

 private:
  gateway::Gateway& gw_;
  ImageSearchClient& client_;
  Config config_;
};

}  // namespace bongard::rwr
