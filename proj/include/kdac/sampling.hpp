#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kdac/grid.hpp"
#include "kdac/random.hpp"

namespace kdac {

enum class MaskKind { cartesian, random2d, radial };

inline std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::cartesian: return "cartesian";
    case MaskKind::random2d: return "random2d";
    case MaskKind::radial: return "radial";
  }
  return "unknown";
}

inline std::optional<MaskKind> parse_mask_kind(std::string_view s) {
  if (s == "cartesian") return MaskKind::cartesian;
  if (s == "random2d" || s == "random") return MaskKind::random2d;
  if (s == "radial") return MaskKind::radial;
  return std::nullopt;
}

/// Binary k-space sampling pattern in natural DFT order.
struct SamplingMask {
  std::size_t n = 0;
  MaskKind kind = MaskKind::random2d;
  Grid<std::uint8_t> bits;
  double target_ratio = 1.0;
  double achieved_ratio = 1.0;
  std::uint64_t seed = 0;

  bool sampled(std::size_t k) const { return bits[k] != 0; }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  }
};

struct MaskOptions {
  /// Exponent of the variable-density profile (1 - r / r_max)^power.
  double density_power = 6.0;
  /// Fraction of phase-encode rows around DC that a Cartesian mask always keeps.
  double cartesian_core_fraction = 0.04;
};

namespace detail {

inline void finish_mask(SamplingMask& m) {
  m.achieved_ratio = static_cast<double>(m.count()) / static_cast<double>(m.n * m.n);
}

// Ranked draw: index order of ascending u_i / p_i with p_i = 0 ranked last; ties by index.
inline std::vector<std::size_t> ranked_order(const std::vector<double>& u, const std::vector<double>& p) {
  std::vector<double> score(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    score[k] = p[k] > 0.0 ? u[k] / p[k] : std::numeric_limits<double>::infinity();
  }
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
  return order;
}

inline Grid<std::uint8_t> cartesian_bits(std::size_t n, double ratio, std::uint64_t seed, const MaskOptions& opt) {
  SplitMix64 rng(seed);
  const double half = static_cast<double>(n) / 2.0;
  std::vector<double> u(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = rng.uniform();
    const double r = std::abs(static_cast<double>(signed_frequency(i, n)));
    p[i] = std::pow(std::max(0.0, 1.0 - r / half), opt.density_power);
  }
  const auto rows = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratio * static_cast<double>(n))));
  const auto core = std::min(rows, static_cast<std::size_t>(std::ceil(opt.cartesian_core_fraction * static_cast<double>(n))));

  // Core rows by ascending |frequency|, ties broken by index.
  std::vector<std::size_t> by_freq(n);
  std::iota(by_freq.begin(), by_freq.end(), std::size_t{0});
  std::stable_sort(by_freq.begin(), by_freq.end(), [n](std::size_t a, std::size_t b) {
    return std::abs(signed_frequency(a, n)) < std::abs(signed_frequency(b, n));
  });
  std::vector<bool> keep(n, false);
  for (std::size_t r = 0; r < core; ++r) keep[by_freq[r]] = true;

  std::size_t chosen = core;
  for (std::size_t row : ranked_order(u, p)) {
    if (chosen >= rows) break;
    if (!keep[row]) {
      keep[row] = true;
      ++chosen;
    }
  }
  Grid<std::uint8_t> bits(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = 0; j < n; ++j) bits(i, j) = 1;
  }
  return bits;
}

inline Grid<std::uint8_t> random2d_bits(std::size_t n, double ratio, std::uint64_t seed, const MaskOptions& opt) {
  SplitMix64 rng(seed);
  const std::size_t total = n * n;
  const double r_max = std::numbers::sqrt2 * static_cast<double>(n) / 2.0;
  std::vector<double> u(total), p(total);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fi = static_cast<double>(signed_frequency(i, n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto fj = static_cast<double>(signed_frequency(j, n));
      const std::size_t k = i * n + j;
      u[k] = rng.uniform();
      p[k] = std::pow(std::max(0.0, 1.0 - std::hypot(fi, fj) / r_max), opt.density_power);
    }
  }
  const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total))));
  Grid<std::uint8_t> bits(n, 0);
  bits[0] = 1;
  std::size_t chosen = 1;
  for (std::size_t k : ranked_order(u, p)) {
    if (chosen >= count) break;
    if (bits[k] == 0) {
      bits[k] = 1;
      ++chosen;
    }
  }
  return bits;
}

// Spokes through the grid center at angles pi k / spokes, drawn with a DDA along the
// major axis. Offsets are rounded half away from zero so each spoke is point-symmetric.
inline Grid<std::uint8_t> radial_bits_centered(std::size_t n, std::size_t spokes) {
  Grid<std::uint8_t> bits(n, 0);
  const auto c = static_cast<long>(n / 2);
  for (std::size_t k = 0; k < spokes; ++k) {
    const double theta = std::numbers::pi * static_cast<double>(k) / static_cast<double>(spokes);
    const double dx = std::cos(theta);
    const double dy = std::sin(theta);
    const bool along_cols = std::abs(dx) >= std::abs(dy);
    const double slope = along_cols ? dy / dx : dx / dy;
    for (long t = -c; t < c; ++t) {
      const long s = std::lround(static_cast<double>(t) * slope);
      const long row = c + (along_cols ? s : t);
      const long col = c + (along_cols ? t : s);
      if (row < 0 || col < 0 || row >= static_cast<long>(n) || col >= static_cast<long>(n)) continue;
      bits(static_cast<std::size_t>(row), static_cast<std::size_t>(col)) = 1;
    }
  }
  return bits;
}

inline double bit_ratio(const Grid<std::uint8_t>& bits) {
  return static_cast<double>(std::count(bits.begin(), bits.end(), std::uint8_t{1})) / static_cast<double>(bits.size());
}

inline Grid<std::uint8_t> radial_bits(std::size_t n, double ratio) {
  // Smallest spoke count reaching the target, then the closer of it and its predecessor.
  std::size_t lo = 1;
  std::size_t hi = 8 * n;
  if (bit_ratio(radial_bits_centered(n, hi)) < ratio) return center_shift(radial_bits_centered(n, hi));
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (bit_ratio(radial_bits_centered(n, mid)) >= ratio) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  auto best = radial_bits_centered(n, lo);
  if (lo > 1) {
    auto prev = radial_bits_centered(n, lo - 1);
    if (std::abs(bit_ratio(prev) - ratio) < std::abs(bit_ratio(best) - ratio)) best = std::move(prev);
  }
  return center_shift(best);
}

}  // namespace detail

/// Generates a deterministic undersampling mask. DC is always sampled; a ratio of
/// exactly 1 yields the full grid for every kind.
inline SamplingMask generate_mask(MaskKind kind, double target_ratio, std::size_t n, std::uint64_t seed,
                                  const MaskOptions& opt = {}) {
  if (!(target_ratio > 0.0 && target_ratio <= 1.0)) {
    throw ConfigError("ratio must lie in (0, 1], got " + std::to_string(target_ratio));
  }
  if (n < 4 || n % 2 != 0) throw DimensionError("mask side length must be even and >= 4");

  SamplingMask m;
  m.n = n;
  m.kind = kind;
  m.target_ratio = target_ratio;
  m.seed = seed;
  if (target_ratio == 1.0) {
    m.bits = Grid<std::uint8_t>(n, 1);
  } else {
    switch (kind) {
      case MaskKind::cartesian: m.bits = detail::cartesian_bits(n, target_ratio, seed, opt); break;
      case MaskKind::random2d: m.bits = detail::random2d_bits(n, target_ratio, seed, opt); break;
      case MaskKind::radial: m.bits = detail::radial_bits(n, target_ratio); break;
    }
    m.bits[0] = 1;
  }
  detail::finish_mask(m);
  return m;
}

/// Mask built from explicit bits (e.g. read from disk).
inline SamplingMask mask_from_bits(Grid<std::uint8_t> bits, MaskKind kind = MaskKind::random2d, std::uint64_t seed = 0) {
  SamplingMask m;
  m.n = bits.n();
  m.kind = kind;
  m.seed = seed;
  for (auto& b : bits) b = b != 0 ? 1 : 0;
  m.bits = std::move(bits);
  detail::finish_mask(m);
  m.target_ratio = m.achieved_ratio;
  return m;
}

/// Zero-filled undersampled k-space together with the mask that produced it.
struct Measurement {
  Spectrum spec;
  SamplingMask mask;
};

/// spec = mask (.) fft2(x).
inline Measurement undersample(const ComplexImage& x, const SamplingMask& mask) {
  if (x.n() != mask.n) throw DimensionError("undersample: image and mask sizes differ");
  Spectrum spec = fft2(x);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (!mask.sampled(k)) spec[k] = Complex{};
  }
  return {std::move(spec), mask};
}

/// Projects a full spectrum onto the mask support.
inline Spectrum restrict_to_mask(Spectrum spec, const SamplingMask& mask) {
  if (spec.n() != mask.n) throw DimensionError("restrict_to_mask: size mismatch");
  for (std::size_t k = 0; k < spec.size(); ++k) {
    if (!mask.sampled(k)) spec[k] = Complex{};
  }
  return spec;
}

/// Adjoint of the sampling operator applied to the measurement.
inline ComplexImage zero_fill(const Measurement& meas) { return ifft2(meas.spec); }

/// Adds i.i.d. N(0, sigma^2) noise to the real and imaginary parts of every sampled
/// coefficient. Draw order: row-major over sampled positions, real then imaginary.
inline Measurement add_noise(const Measurement& meas, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  Measurement out = meas;
  if (sigma == 0.0) return out;
  SplitMix64 rng(seed);
  for (std::size_t k = 0; k < out.spec.size(); ++k) {
    if (!out.mask.sampled(k)) continue;
    const double re = sigma * rng.normal();
    const double im = sigma * rng.normal();
    out.spec[k] += Complex{re, im};
  }
  return out;
}

}  // namespace kdac
