#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "kdac/grid.hpp"
#include "kdac/sampling.hpp"

namespace kdac {

using Pixels16 = Grid<std::uint16_t>;

/// How real values map onto 16-bit gray levels.
struct PngMode {
  enum class Kind { magnitude, window } kind = Kind::magnitude;
  double lo = 0.0;
  double hi = 1.0;

  static PngMode magnitude() { return {}; }
  static PngMode window(double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("png window requires hi > lo");
    return {Kind::window, lo, hi};
  }
};

/// [0, max] -> [0, 65535] (magnitude) or clamp to [lo, hi] then linear (window).
inline Pixels16 to_pixels(const RealGrid& values, const PngMode& mode) {
  double lo = 0.0;
  double hi = 0.0;
  if (mode.kind == PngMode::Kind::magnitude) {
    for (double v : values) hi = std::max(hi, v);
  } else {
    lo = mode.lo;
    hi = mode.hi;
  }
  Pixels16 px(values.n(), 0);
  if (!(hi > lo)) return px;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double t = (std::clamp(values[k], lo, hi) - lo) / (hi - lo);
    px[k] = static_cast<std::uint16_t>(std::lround(t * 65535.0));
  }
  return px;
}

/// Writes a 16-bit grayscale PNG.
inline void write_png16(const std::filesystem::path& path, const Pixels16& px) {
  auto tmp = path;
  tmp += ".tmp";
  std::vector<png_byte> row(2 * px.n());
  std::FILE* fp = std::fopen(tmp.c_str(), "wb");
  if (fp == nullptr) throw IoError("cannot open " + tmp.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::filesystem::remove(tmp);
    throw IoError("libpng failed writing " + path.string());
  }
  const auto n = static_cast<png_uint_32>(px.n());
  png_init_io(png, fp);
  png_set_IHDR(png, info, n, n, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t i = 0; i < px.n(); ++i) {
    for (std::size_t j = 0; j < px.n(); ++j) {
      row[2 * j] = static_cast<png_byte>(px(i, j) >> 8);  // big-endian samples
      row[2 * j + 1] = static_cast<png_byte>(px(i, j) & 0xFF);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("close failed for " + tmp.string());
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string());
}

/// Reads back a square 16-bit grayscale PNG as written by write_png16.
inline Pixels16 read_png16(const std::filesystem::path& path) {
  Pixels16 px;
  std::vector<png_byte> row;
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (fp == nullptr) throw IoError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError("libpng failed reading " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const auto w = png_get_image_width(png, info);
  const auto h = png_get_image_height(png, info);
  if (w != h || png_get_bit_depth(png, info) != 16 || png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FormatError(path.string() + " is not a square 16-bit grayscale PNG");
  }
  px = Pixels16(w, 0);
  row.resize(2 * w);
  for (std::size_t i = 0; i < h; ++i) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t j = 0; j < w; ++j) px(i, j) = static_cast<std::uint16_t>((row[2 * j] << 8) | row[2 * j + 1]);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return px;
}

/// Image magnitude, or a windowed error map of the magnitude.
inline void export_png(const std::filesystem::path& path, const ComplexImage& img, const PngMode& mode = {}) {
  write_png16(path, to_pixels(magnitude(img), mode));
}

/// Image-domain real map (e.g. |recon - reference|).
inline void export_png(const std::filesystem::path& path, const RealGrid& map, const PngMode& mode = {}) {
  write_png16(path, to_pixels(map, mode));
}

/// Spectrum in centered order with log1p magnitude scaling.
inline void export_png(const std::filesystem::path& path, const Spectrum& spec, const PngMode& mode = {}) {
  RealGrid v = center_shift(magnitude(spec));
  for (auto& x : v) x = std::log1p(x);
  write_png16(path, to_pixels(v, mode));
}

/// Natural-order k-space map (KARE, KRRE, filter magnitude) shown centered.
inline void export_kspace_png(const std::filesystem::path& path, const RealGrid& map, const PngMode& mode = {}) {
  write_png16(path, to_pixels(center_shift(map), mode));
}

/// Black / white mask in centered order.
inline void export_png(const std::filesystem::path& path, const SamplingMask& mask) {
  RealGrid v(mask.n, 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = mask.bits[k] ? 1.0 : 0.0;
  write_png16(path, to_pixels(center_shift(v), PngMode::window(0.0, 1.0)));
}

}  // namespace kdac
