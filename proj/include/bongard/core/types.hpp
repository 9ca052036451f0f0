#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bongard/core/errors.hpp"
#include "bongard/core/sha256.hpp"

namespace bongard::core {

enum class Side { Left, Right };

inline std::string to_wire(Side s) { return s == Side::Left ? "LEFT" : "RIGHT"; }

inline std::optional<Side> side_from_wire(std::string_view text) {
  std::string up;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) up.push_back(static_cast<char>(std::toupper(c)));
  if (up == "LEFT") return Side::Left;
  if (up == "RIGHT") return Side::Right;
  return std::nullopt;
}

inline Side opposite(Side s) { return s == Side::Left ? Side::Right : Side::Left; }

enum class DatasetKind { Synthetic, HOI, OpenWorld, RWR, Custom };

inline std::string to_string(DatasetKind k) {
  switch (k) {
    case DatasetKind::Synthetic: return "synthetic";
    case DatasetKind::HOI: return "hoi";
    case DatasetKind::OpenWorld: return "openworld";
    case DatasetKind::RWR: return "rwr";
    case DatasetKind::Custom: return "custom";
  }
  return "custom";
}

inline DatasetKind dataset_from_string(const std::string& s) {
  if (s == "synthetic") return DatasetKind::Synthetic;
  if (s == "hoi") return DatasetKind::HOI;
  if (s == "openworld") return DatasetKind::OpenWorld;
  if (s == "rwr") return DatasetKind::RWR;
  if (s == "custom") return DatasetKind::Custom;
  throw SchemaError("unknown dataset kind: " + s);
}

// One referenced panel image. `digest` is lowercase-hex SHA-256 of the raw
// bytes; identity everywhere else in the harness is by digest, never path.
struct ImageRef {
  std::string id;
  std::string location;  // local path or URL
  std::string media_type;
  std::string digest;

  bool operator==(const ImageRef&) const = default;
  bool is_remote() const { return location.starts_with("http://") || location.starts_with("https://"); }
};

struct ConceptLabel {
  std::string left_label;
  std::string right_label;

  bool operator==(const ConceptLabel&) const = default;
};

// "triangles vs squares" form used when a concept is passed through a prompt slot.
inline std::string concept_vs_text(const ConceptLabel& c) {
  return c.left_label + " vs " + c.right_label;
}

struct TestPair {
  ImageRef first;
  ImageRef second;
  Side first_side = Side::Left;
  Side second_side = Side::Right;
};

struct BongardProblem {
  std::string id;
  DatasetKind dataset = DatasetKind::Custom;
  std::vector<ImageRef> left;   // exactly 6
  std::vector<ImageRef> right;  // exactly 6
  ConceptLabel concept_label;
  std::optional<std::pair<ImageRef, ImageRef>> extra_tests;  // (left_test, right_test)
  std::set<std::string> categories;

  const std::vector<ImageRef>& side(Side s) const { return s == Side::Left ? left : right; }
};

struct DatasetManifest {
  std::string name;
  std::vector<BongardProblem> problems;
  std::string source_notes;

  const BongardProblem* find(const std::string& id) const {
    for (const auto& p : problems)
      if (p.id == id) return &p;
    return nullptr;
  }
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingImageError("cannot open file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write file: " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, path);
}

inline void write_file_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_file_text(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

// Loads the referenced bytes. Remote locations are never fetched here; the
// harness consumes manifests whose payloads are already on disk.
inline std::vector<std::uint8_t> load_image_bytes(const ImageRef& ref) {
  if (ref.is_remote())
    throw MissingImageError("remote image not fetched: " + ref.location);
  return read_file_bytes(ref.location);
}

inline ImageRef make_image_ref(std::string id, const std::filesystem::path& location,
                               std::string media_type = {}) {
  auto bytes = read_file_bytes(location);
  ImageRef ref;
  ref.id = std::move(id);
  ref.location = location.string();
  ref.digest = sha256_hex(bytes);
  ref.media_type = std::move(media_type);
  return ref;
}

}  // namespace bongard::core
