#pragma once

#include <array>
#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "kdac/grid.hpp"
#include "kdac/sampling.hpp"

namespace kdac {

// GridFile layout, all little-endian:
//   "KDC1" | kind:u8 | n:u32 | payload
// payload: n^2 (re, im) float32 pairs row-major for images and spectra,
//          n^2 bytes (0 / 1) for masks.
enum class GridKind : std::uint8_t { image = 0, spectrum = 1, mask = 2 };

struct GridFile {
  GridKind kind = GridKind::image;
  std::size_t n = 0;
  Grid<Complex> values;        ///< image / spectrum kinds
  Grid<std::uint8_t> bits;     ///< mask kind
};

inline constexpr std::array<char, 4> kGridMagic{'K', 'D', 'C', '1'};
inline constexpr std::size_t kGridHeaderBytes = 9;

namespace detail {

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFU));
}

inline std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return v;
}

inline void put_f32(std::vector<char>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

inline std::vector<char> encode(GridKind kind, std::size_t n) {
  if (n > 0xFFFFFFFFULL) throw DimensionError("grid too large for GridFile");
  std::vector<char> out(kGridMagic.begin(), kGridMagic.end());
  out.push_back(static_cast<char>(kind));
  put_u32(out, static_cast<std::uint32_t>(n));
  return out;
}

}  // namespace detail

/// Writes bytes to `path` via a temporary file and rename, so readers never observe
/// a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::vector<char>& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

inline std::vector<char> encode_grid(GridKind kind, const Grid<Complex>& g) {
  auto out = detail::encode(kind, g.n());
  out.reserve(out.size() + 8 * g.size());
  for (const auto& c : g) {
    detail::put_f32(out, c.real());
    detail::put_f32(out, c.imag());
  }
  return out;
}

inline std::vector<char> encode_mask(const Grid<std::uint8_t>& bits) {
  auto out = detail::encode(GridKind::mask, bits.n());
  for (auto b : bits) out.push_back(b != 0 ? 1 : 0);
  return out;
}

inline void write_grid(const std::filesystem::path& path, const ComplexImage& img) {
  write_file_atomic(path, encode_grid(GridKind::image, img));
}
inline void write_grid(const std::filesystem::path& path, const Spectrum& spec) {
  write_file_atomic(path, encode_grid(GridKind::spectrum, spec));
}
inline void write_grid(const std::filesystem::path& path, const SamplingMask& mask) {
  write_file_atomic(path, encode_mask(mask.bits));
}

inline GridFile decode_grid(const std::vector<char>& bytes) {
  if (bytes.size() < kGridHeaderBytes) throw FormatError("GridFile truncated: header incomplete");
  if (!std::equal(kGridMagic.begin(), kGridMagic.end(), bytes.begin())) throw FormatError("GridFile: bad magic");
  const auto kind_byte = static_cast<std::uint8_t>(bytes[4]);
  if (kind_byte > 2) throw FormatError("GridFile: unknown kind " + std::to_string(kind_byte));
  GridFile f;
  f.kind = static_cast<GridKind>(kind_byte);
  f.n = detail::get_u32(bytes.data() + 5);
  const std::size_t count = f.n * f.n;
  const std::size_t expected = kGridHeaderBytes + (f.kind == GridKind::mask ? count : 8 * count);
  if (bytes.size() < expected) throw FormatError("GridFile truncated: expected " + std::to_string(expected) + " bytes");
  if (bytes.size() > expected) throw FormatError("GridFile has trailing bytes");
  const char* p = bytes.data() + kGridHeaderBytes;
  if (f.kind == GridKind::mask) {
    f.bits = Grid<std::uint8_t>(f.n);
    for (std::size_t k = 0; k < count; ++k) {
      const auto b = static_cast<std::uint8_t>(p[k]);
      if (b > 1) throw FormatError("GridFile mask byte is not 0/1");
      f.bits[k] = b;
    }
  } else {
    f.values = Grid<Complex>(f.n);
    for (std::size_t k = 0; k < count; ++k) {
      f.values[k] = Complex{detail::get_f32(p + 8 * k), detail::get_f32(p + 8 * k + 4)};
    }
  }
  return f;
}

inline GridFile read_grid(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError("read failed for " + path.string());
  return decode_grid(bytes);
}

inline ComplexImage read_image(const std::filesystem::path& path) {
  auto f = read_grid(path);
  if (f.kind != GridKind::image) throw FormatError(path.string() + " does not hold a complex image");
  return ComplexImage(std::move(f.values));
}

inline SamplingMask read_mask(const std::filesystem::path& path) {
  auto f = read_grid(path);
  if (f.kind != GridKind::mask) throw FormatError(path.string() + " does not hold a mask");
  return mask_from_bits(std::move(f.bits));
}

}  // namespace kdac
