#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "bongard/core/compose.hpp"
#include "bongard/core/manifest.hpp"
#include "bongard/core/raster.hpp"

namespace testsupport {

using namespace bongard;

// Scratch directory removed when the fixture goes out of scope.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& label) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("bongard-test-" + label + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Tiny solid-color PNG whose color encodes `tone`, so every panel has a
// distinct digest.
inline std::vector<std::uint8_t> tiny_png(int tone, int w = 8, int h = 8) {
  core::Raster img = core::Raster::filled(w, h, static_cast<std::uint8_t>(tone % 256),
                                          static_cast<std::uint8_t>((tone / 256) % 256),
                                          static_cast<std::uint8_t>((tone / 65536) % 256));
  return core::encode_png(img);
}

inline core::ImageRef write_panel(const std::filesystem::path& dir, const std::string& id, int tone,
                                  int w = 8, int h = 8) {
  auto png = tiny_png(tone, w, h);
  std::filesystem::path path = dir / (id + ".png");
  core::write_file_bytes(path, png);
  core::ImageRef ref;
  ref.id = id;
  ref.location = path.string();
  ref.media_type = "image/png";
  ref.digest = core::sha256_hex(png);
  return ref;
}

// A well-formed problem with 12 distinct panels (+ optional test images).
inline core::BongardProblem make_problem(const std::filesystem::path& dir, const std::string& id,
                                         int tone_base, bool with_tests = false,
                                         core::DatasetKind dataset = core::DatasetKind::Synthetic) {
  core::BongardProblem bp;
  bp.id = id;
  bp.dataset = dataset;
  for (int i = 0; i < 6; ++i)
    bp.left.push_back(write_panel(dir, id + "-L" + std::to_string(i + 1), tone_base + i));
  for (int i = 0; i < 6; ++i)
    bp.right.push_back(write_panel(dir, id + "-R" + std::to_string(i + 1), tone_base + 100 + i));
  bp.concept_label.left_label = "left concept of " + id;
  bp.concept_label.right_label = "right concept of " + id;
  if (with_tests)
    bp.extra_tests = {write_panel(dir, id + "-TL", tone_base + 200),
                      write_panel(dir, id + "-TR", tone_base + 300)};
  return bp;
}

inline core::DatasetManifest make_manifest(const std::filesystem::path& dir, int problems,
                                           core::DatasetKind dataset = core::DatasetKind::Synthetic,
                                           bool with_tests = false) {
  core::DatasetManifest m;
  m.name = "fixture";
  for (int i = 1; i <= problems; ++i)
    m.problems.push_back(
        make_problem(dir, std::to_string(i), i * 1000, with_tests, dataset));
  return m;
}

}  // namespace testsupport
