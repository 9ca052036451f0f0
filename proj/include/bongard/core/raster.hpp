#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "bongard/core/errors.hpp"

namespace bongard::core {

// In-memory RGB8 image. Decoders normalize everything to this; alpha is
// composited over white, matching the white canvas used for composites.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // 3 * width * height, row-major

  std::uint8_t* px(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* px(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  static Raster filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Raster out;
    out.width = w;
    out.height = h;
    out.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < out.rgb.size(); i += 3) {
      out.rgb[i] = r;
      out.rgb[i + 1] = g;
      out.rgb[i + 2] = b;
    }
    return out;
  }
};

namespace detail {

inline std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> zlib_inflate(std::span<const std::uint8_t> in,
                                              std::size_t size_hint) {
  std::vector<std::uint8_t> out;
  out.reserve(size_hint);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw DecodeError("zlib inflateInit failed");
  std::array<std::uint8_t, 1 << 15> chunk{};
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DecodeError("corrupt zlib stream in image data");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw DecodeError("truncated zlib stream in image data");
    }
  }
  inflateEnd(&zs);
  return out;
}

inline std::vector<std::uint8_t> zlib_deflate(std::span<const std::uint8_t> in) {
  z_stream zs{};
  // Parameters are pinned so identical pixels yield identical bytes.
  if (deflateInit2(&zs, 6, Z_DEFLATED, 15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error("zlib deflateInit failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error("zlib deflate failed");
  out.resize(out.size() - zs.avail_out);
  return out;
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace detail

inline bool looks_like_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

inline bool looks_like_ppm(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

// Decodes non-interlaced PNG with bit depth <= 8: grayscale, palette, RGB,
// and the alpha variants (alpha blended over white). 16-bit and Adam7 are
// rejected with DecodeError.
inline Raster decode_png(std::span<const std::uint8_t> bytes) {
  if (!looks_like_png(bytes)) throw DecodeError("not a PNG file");
  std::size_t pos = 8;
  int width = 0, height = 0, bit_depth = 0, color_type = 0;
  std::vector<std::uint8_t> idat;
  std::vector<std::array<std::uint8_t, 3>> palette;
  bool saw_ihdr = false, saw_iend = false;
  while (pos + 8 <= bytes.size() && !saw_iend) {
    std::uint32_t len = detail::be32(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) throw DecodeError("truncated PNG chunk");
    std::string type(reinterpret_cast<const char*>(bytes.data() + pos + 4), 4);
    const std::uint8_t* data = bytes.data() + pos + 8;
    if (type == "IHDR") {
      if (len != 13) throw DecodeError("bad IHDR length");
      width = static_cast<int>(detail::be32(data));
      height = static_cast<int>(detail::be32(data + 4));
      bit_depth = data[8];
      color_type = data[9];
      if (data[12] != 0) throw DecodeError("interlaced PNG not supported");
      if (bit_depth > 8) throw DecodeError("16-bit PNG not supported");
      if (width <= 0 || height <= 0) throw DecodeError("bad PNG dimensions");
      saw_ihdr = true;
    } else if (type == "PLTE") {
      for (std::uint32_t i = 0; i + 2 < len; i += 3)
        palette.push_back({data[i], data[i + 1], data[i + 2]});
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      saw_iend = true;
    }
    pos += 12 + len;
  }
  if (!saw_ihdr || idat.empty()) throw DecodeError("PNG missing IHDR or IDAT");

  int channels;
  switch (color_type) {
    case 0: channels = 1; break;  // gray
    case 2: channels = 3; break;  // rgb
    case 3: channels = 1; break;  // palette index
    case 4: channels = 2; break;  // gray + alpha
    case 6: channels = 4; break;  // rgba
    default: throw DecodeError("unsupported PNG color type");
  }
  if ((color_type == 2 || color_type >= 4) && bit_depth != 8)
    throw DecodeError("sub-byte depth only valid for gray/palette PNG");

  std::size_t bits_per_px = static_cast<std::size_t>(channels) * bit_depth;
  std::size_t row_bytes = (static_cast<std::size_t>(width) * bits_per_px + 7) / 8;
  std::size_t expect = (row_bytes + 1) * height;
  std::vector<std::uint8_t> raw = detail::zlib_inflate(idat, expect);
  if (raw.size() < expect) throw DecodeError("PNG pixel data too short");

  // Undo per-row filters in place.
  std::size_t bpp = std::max<std::size_t>(1, bits_per_px / 8);
  std::vector<std::uint8_t> prev(row_bytes, 0);
  std::vector<std::uint8_t> lines;
  lines.reserve(row_bytes * height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1);
    std::uint8_t filter = src[0];
    std::vector<std::uint8_t> cur(src + 1, src + 1 + row_bytes);
    for (std::size_t i = 0; i < row_bytes; ++i) {
      int a = i >= bpp ? cur[i - bpp] : 0;
      int b = prev[i];
      int c = i >= bpp ? prev[i - bpp] : 0;
      switch (filter) {
        case 0: break;
        case 1: cur[i] = static_cast<std::uint8_t>(cur[i] + a); break;
        case 2: cur[i] = static_cast<std::uint8_t>(cur[i] + b); break;
        case 3: cur[i] = static_cast<std::uint8_t>(cur[i] + (a + b) / 2); break;
        case 4: cur[i] = static_cast<std::uint8_t>(cur[i] + detail::paeth(a, b, c)); break;
        default: throw DecodeError("unknown PNG filter type");
      }
    }
    lines.insert(lines.end(), cur.begin(), cur.end());
    prev = std::move(cur);
  }

  Raster out;
  out.width = width;
  out.height = height;
  out.rgb.resize(static_cast<std::size_t>(width) * height * 3);
  auto sample_sub_byte = [&](const std::uint8_t* row, int x) -> int {
    int per_byte = 8 / bit_depth;
    std::uint8_t byte = row[x / per_byte];
    int shift = 8 - bit_depth * (x % per_byte + 1);
    return (byte >> shift) & ((1 << bit_depth) - 1);
  };
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = lines.data() + static_cast<std::size_t>(y) * row_bytes;
    for (int x = 0; x < width; ++x) {
      std::uint8_t* dst = out.px(x, y);
      if (color_type == 0) {
        int v = bit_depth == 8 ? row[x] : sample_sub_byte(row, x);
        int maxv = (1 << bit_depth) - 1;
        std::uint8_t g = static_cast<std::uint8_t>(v * 255 / maxv);
        dst[0] = dst[1] = dst[2] = g;
      } else if (color_type == 3) {
        int idx = bit_depth == 8 ? row[x] : sample_sub_byte(row, x);
        if (idx >= static_cast<int>(palette.size())) throw DecodeError("palette index out of range");
        dst[0] = palette[idx][0];
        dst[1] = palette[idx][1];
        dst[2] = palette[idx][2];
      } else if (color_type == 2) {
        std::memcpy(dst, row + 3 * x, 3);
      } else if (color_type == 4) {
        int g = row[2 * x], a = row[2 * x + 1];
        std::uint8_t v = static_cast<std::uint8_t>((g * a + 255 * (255 - a)) / 255);
        dst[0] = dst[1] = dst[2] = v;
      } else {  // rgba
        const std::uint8_t* s = row + 4 * x;
        int a = s[3];
        for (int c = 0; c < 3; ++c)
          dst[c] = static_cast<std::uint8_t>((s[c] * a + 255 * (255 - a)) / 255);
      }
    }
  }
  return out;
}

// Writes RGB8 / bit-depth-8 / filter-None PNG. Encoder settings are fixed,
// so equal rasters always serialize to equal bytes.
inline std::vector<std::uint8_t> encode_png(const Raster& img) {
  std::vector<std::uint8_t> filtered;
  filtered.reserve(static_cast<std::size_t>(img.height) * (img.width * 3 + 1));
  for (int y = 0; y < img.height; ++y) {
    filtered.push_back(0);
    filtered.insert(filtered.end(), img.px(0, y), img.px(0, y) + static_cast<std::size_t>(img.width) * 3);
  }
  std::vector<std::uint8_t> compressed = detail::zlib_deflate(filtered);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  auto chunk = [&out](const char* type, std::span<const std::uint8_t> data) {
    detail::put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
    detail::put_be32(out, crc);
  };
  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", compressed);
  chunk("IEND", {});
  return out;
}

inline Raster decode_ppm(std::span<const std::uint8_t> bytes) {
  if (!looks_like_ppm(bytes)) throw DecodeError("not a PPM/PGM file");
  bool gray = bytes[1] == '5';
  std::size_t pos = 2;
  auto next_int = [&]() -> int {
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    int v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw DecodeError("malformed PPM header");
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw DecodeError("PPM maxval must be 255");
  ++pos;  // single whitespace after maxval
  std::size_t need = static_cast<std::size_t>(w) * h * (gray ? 1 : 3);
  if (bytes.size() < pos + need) throw DecodeError("PPM pixel data too short");
  Raster out;
  out.width = w;
  out.height = h;
  out.rgb.resize(static_cast<std::size_t>(w) * h * 3);
  const std::uint8_t* src = bytes.data() + pos;
  if (gray) {
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i)
      out.rgb[3 * i] = out.rgb[3 * i + 1] = out.rgb[3 * i + 2] = src[i];
  } else {
    std::memcpy(out.rgb.data(), src, need);
  }
  return out;
}

inline std::vector<std::uint8_t> encode_ppm(const Raster& img) {
  std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

inline Raster decode_image(std::span<const std::uint8_t> bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes);
  if (looks_like_ppm(bytes)) return decode_ppm(bytes);
  throw DecodeError("unsupported image format (PNG and PPM/PGM are decodable)");
}

inline std::string sniff_media_type(std::span<const std::uint8_t> bytes) {
  if (looks_like_png(bytes)) return "image/png";
  if (looks_like_ppm(bytes)) return bytes[1] == '5' ? "image/x-portable-graymap" : "image/x-portable-pixmap";
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) return "image/jpeg";
  return "application/octet-stream";
}

// Aspect-preserving letterbox onto a white w x h canvas, nearest-neighbor.
// Integer arithmetic only, so results are identical everywhere.
inline Raster letterbox(const Raster& src, int w, int h) {
  if (src.width == w && src.height == h) return src;
  Raster out = Raster::filled(w, h, 255, 255, 255);
  // target size = largest fit preserving aspect ratio
  std::int64_t tw = static_cast<std::int64_t>(src.width) * h;
  std::int64_t th = static_cast<std::int64_t>(src.height) * w;
  int dw, dh;
  if (tw > th) {
    dw = w;
    dh = std::max<int>(1, static_cast<int>(static_cast<std::int64_t>(src.height) * w / src.width));
  } else {
    dh = h;
    dw = std::max<int>(1, static_cast<int>(static_cast<std::int64_t>(src.width) * h / src.height));
  }
  int x0 = (w - dw) / 2, y0 = (h - dh) / 2;
  for (int y = 0; y < dh; ++y) {
    int sy = static_cast<int>(static_cast<std::int64_t>(y) * src.height / dh);
    for (int x = 0; x < dw; ++x) {
      int sx = static_cast<int>(static_cast<std::int64_t>(x) * src.width / dw);
      std::memcpy(out.px(x0 + x, y0 + y), src.px(sx, sy), 3);
    }
  }
  return out;
}

inline void blit(Raster& dst, const Raster& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    if (y0 + y < 0 || y0 + y >= dst.height) continue;
    int x_lo = std::max(0, -x0);
    int x_hi = std::min(src.width, dst.width - x0);
    if (x_hi <= x_lo) continue;
    std::memcpy(dst.px(x0 + x_lo, y0 + y), src.px(x_lo, y), static_cast<std::size_t>(x_hi - x_lo) * 3);
  }
}

}  // namespace bongard::core
