#pragma once

#include <filesystem>
#include <vector>

#include "bongard/core/raster.hpp"
#include "bongard/core/types.hpp"

namespace bongard::core {

struct LayoutParams {
  int panel_w = 200;
  int panel_h = 200;
  int gutter = 8;
  int separator_w = 4;

  void validate() const {
    if (panel_w <= 0 || panel_h <= 0 || gutter < 0 || separator_w <= 0)
      throw ConfigError("layout parameters must be positive (gutter may be zero)");
  }

  int side_width() const { return 2 * panel_w + gutter; }
  int total_width() const { return 2 * side_width() + separator_w; }
  int total_height() const { return 3 * panel_h + 2 * gutter; }
};

// Renders the whole-matrix image: each side a 2x3 grid in row-major panel
// order, white background, black vertical separator between the sides.
// Pure function of (panel bytes, layout): equal inputs give equal bytes.
inline std::vector<std::uint8_t> compose_matrix_png(const BongardProblem& bp,
                                                    const LayoutParams& layout) {
  layout.validate();
  Raster canvas = Raster::filled(layout.total_width(), layout.total_height(), 255, 255, 255);
  for (int x = 0; x < layout.separator_w; ++x)
    for (int y = 0; y < canvas.height; ++y) {
      std::uint8_t* p = canvas.px(layout.side_width() + x, y);
      p[0] = p[1] = p[2] = 0;
    }
  for (Side side : {Side::Left, Side::Right}) {
    int x_base = side == Side::Left ? 0 : layout.side_width() + layout.separator_w;
    const auto& panels = bp.side(side);
    for (int i = 0; i < static_cast<int>(panels.size()); ++i) {
      Raster panel;
      try {
        panel = decode_image(load_image_bytes(panels[i]));
      } catch (const DecodeError& e) {
        throw DecodeError("panel " + panels[i].id + " of problem " + bp.id + ": " + e.what());
      }
      Raster cell = letterbox(panel, layout.panel_w, layout.panel_h);
      int col = i % 2, row = i / 2;
      blit(canvas, cell, x_base + col * (layout.panel_w + layout.gutter),
           row * (layout.panel_h + layout.gutter));
    }
  }
  return encode_png(canvas);
}

// Persists the composite under out_dir, named by content digest so repeated
// composition is idempotent on disk.
inline ImageRef compose_matrix_image(const BongardProblem& bp, const LayoutParams& layout,
                                     const std::filesystem::path& out_dir) {
  auto png = compose_matrix_png(bp, layout);
  ImageRef ref;
  ref.id = "matrix-" + bp.id;
  ref.digest = sha256_hex(png);
  ref.media_type = "image/png";
  std::filesystem::path path = out_dir / (ref.digest + ".png");
  if (!std::filesystem::exists(path)) write_file_bytes(path, png);
  ref.location = path.string();
  return ref;
}

}  // namespace bongard::core
