#pragma once

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "bongard/core/raster.hpp"
#include "bongard/core/types.hpp"

namespace bongard::core {

using json = nlohmann::ordered_json;

namespace detail {

inline json image_ref_to_json(const ImageRef& ref) {
  return json{{"id", ref.id},
              {"location", ref.location},
              {"media_type", ref.media_type},
              {"digest", ref.digest}};
}

inline ImageRef image_ref_from_json(const json& j) {
  if (!j.is_object() || !j.contains("id") || !j.contains("location"))
    throw SchemaError("image record needs id and location");
  ImageRef ref;
  ref.id = j.at("id").get<std::string>();
  ref.location = j.at("location").get<std::string>();
  ref.media_type = j.value("media_type", std::string{});
  ref.digest = j.value("digest", std::string{});
  return ref;
}

// Local files get their digest computed and checked; remote records must
// already carry one since nothing is fetched at load time.
inline void settle_digest(ImageRef& ref, const std::filesystem::path& base) {
  if (ref.is_remote()) {
    if (ref.digest.empty())
      throw SchemaError("remote image record without digest: " + ref.location);
    return;
  }
  std::filesystem::path p = ref.location;
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::exists(p))
    throw MissingImageError("image file not found: " + p.string());
  ref.location = p.string();
  auto bytes = read_file_bytes(p);
  std::string actual = sha256_hex(bytes);
  if (!ref.digest.empty() && ref.digest != actual)
    throw IntegrityError("digest mismatch for " + ref.location + ": manifest says " + ref.digest +
                         ", bytes hash to " + actual);
  ref.digest = actual;
  if (ref.media_type.empty()) ref.media_type = sniff_media_type(bytes);
}

}  // namespace detail

inline void validate_problem(const BongardProblem& bp) {
  if (bp.id.empty()) throw SchemaError("problem with empty id");
  if (bp.left.size() != 6 || bp.right.size() != 6)
    throw IntegrityError("problem " + bp.id + " has " + std::to_string(bp.left.size()) + "/" +
                         std::to_string(bp.right.size()) + " panels, need 6/6");
  std::set<std::string> digests;
  for (const auto* side : {&bp.left, &bp.right})
    for (const auto& ref : *side)
      if (!digests.insert(ref.digest).second)
        throw IntegrityError("problem " + bp.id + " repeats panel digest " + ref.digest);
  if (bp.concept_label.left_label.empty() || bp.concept_label.right_label.empty())
    throw SchemaError("problem " + bp.id + " has an empty concept label");
  if (bp.concept_label.left_label == bp.concept_label.right_label)
    throw SchemaError("problem " + bp.id + " has identical side labels");
  if (bp.extra_tests) {
    for (const auto& t : {bp.extra_tests->first, bp.extra_tests->second})
      if (digests.contains(t.digest))
        throw IntegrityError("problem " + bp.id + " test image duplicates a panel");
  }
  for (const auto& tag : bp.categories)
    if (tag.empty()) throw SchemaError("problem " + bp.id + " has an empty category tag");
}

inline json problem_to_json(const BongardProblem& bp) {
  json j;
  j["id"] = bp.id;
  j["dataset"] = to_string(bp.dataset);
  j["left"] = json::array();
  for (const auto& r : bp.left) j["left"].push_back(detail::image_ref_to_json(r));
  j["right"] = json::array();
  for (const auto& r : bp.right) j["right"].push_back(detail::image_ref_to_json(r));
  j["concept"] = {{"left_label", bp.concept_label.left_label}, {"right_label", bp.concept_label.right_label}};
  if (bp.extra_tests) {
    j["extra_tests"] = {{"left_test", detail::image_ref_to_json(bp.extra_tests->first)},
                        {"right_test", detail::image_ref_to_json(bp.extra_tests->second)}};
  }
  if (!bp.categories.empty()) j["categories"] = bp.categories;
  return j;
}

inline BongardProblem problem_from_json(const json& j) {
  BongardProblem bp;
  bp.id = j.value("id", std::string{});
  bp.dataset = dataset_from_string(j.value("dataset", std::string{"custom"}));
  if (!j.contains("left") || !j.contains("right") || !j.contains("concept"))
    throw SchemaError("problem " + bp.id + " missing left/right/concept");
  for (const auto& r : j.at("left")) bp.left.push_back(detail::image_ref_from_json(r));
  for (const auto& r : j.at("right")) bp.right.push_back(detail::image_ref_from_json(r));
  bp.concept_label.left_label = j.at("concept").value("left_label", std::string{});
  bp.concept_label.right_label = j.at("concept").value("right_label", std::string{});
  if (j.contains("extra_tests")) {
    bp.extra_tests = {detail::image_ref_from_json(j.at("extra_tests").at("left_test")),
                      detail::image_ref_from_json(j.at("extra_tests").at("right_test"))};
  }
  if (j.contains("categories"))
    for (const auto& t : j.at("categories")) bp.categories.insert(t.get<std::string>());
  return bp;
}

// Parses, resolves image locations relative to the manifest file, settles
// digests, and validates every problem invariant.
inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("manifest not found: " + path.string());
  json doc;
  try {
    doc = json::parse(read_file_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("problems"))
    throw SchemaError("manifest " + path.string() + " missing problems array");
  DatasetManifest m;
  m.name = doc.value("name", path.stem().string());
  m.source_notes = doc.value("source_notes", std::string{});
  std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
  std::set<std::string> ids;
  for (const auto& pj : doc.at("problems")) {
    BongardProblem bp = problem_from_json(pj);
    for (auto& r : bp.left) detail::settle_digest(r, base);
    for (auto& r : bp.right) detail::settle_digest(r, base);
    if (bp.extra_tests) {
      detail::settle_digest(bp.extra_tests->first, base);
      detail::settle_digest(bp.extra_tests->second, base);
    }
    validate_problem(bp);
    if (!ids.insert(bp.id).second)
      throw SchemaError("duplicate problem id in manifest: " + bp.id);
    m.problems.push_back(std::move(bp));
  }
  return m;
}

inline json manifest_to_json(const DatasetManifest& m) {
  json doc;
  doc["name"] = m.name;
  if (!m.source_notes.empty()) doc["source_notes"] = m.source_notes;
  doc["problems"] = json::array();
  for (const auto& bp : m.problems) doc["problems"].push_back(problem_to_json(bp));
  return doc;
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  write_file_text(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace bongard::core
