#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "kdac/grid.hpp"

namespace kdac {

/// Coefficients of a multilevel 2-D Haar transform in Mallat layout: the coarse
/// approximation occupies the top-left (n >> levels) square.
class HaarCoeffs : public Grid<Complex> {
 public:
  using Grid<Complex>::Grid;
  explicit HaarCoeffs(Grid<Complex> g) : Grid<Complex>(std::move(g)) {}
};

namespace detail {

inline void check_haar_levels(std::size_t n, int levels) {
  if (levels < 1) throw ConfigError("wavelet levels must be >= 1");
  if (levels >= 63 || n == 0 || n % (std::size_t{1} << levels) != 0) {
    throw DimensionError("side length " + std::to_string(n) + " is not divisible by 2^" + std::to_string(levels));
  }
}

// One analysis (forward) or synthesis step on the leading m entries of a strided line.
inline void haar_line(Complex* x, std::size_t m, std::size_t stride, bool forward, std::vector<Complex>& tmp) {
  constexpr double r = 1.0 / std::numbers::sqrt2;
  const std::size_t h = m / 2;
  tmp.resize(m);
  if (forward) {
    for (std::size_t k = 0; k < h; ++k) {
      const Complex a = x[(2 * k) * stride];
      const Complex b = x[(2 * k + 1) * stride];
      tmp[k] = (a + b) * r;
      tmp[h + k] = (a - b) * r;
    }
  } else {
    for (std::size_t k = 0; k < h; ++k) {
      const Complex a = x[k * stride];
      const Complex d = x[(h + k) * stride];
      tmp[2 * k] = (a + d) * r;
      tmp[2 * k + 1] = (a - d) * r;
    }
  }
  for (std::size_t k = 0; k < m; ++k) x[k * stride] = tmp[k];
}

}  // namespace detail

/// Orthonormal multilevel 2-D Haar analysis. Acts on real and imaginary parts alike.
inline HaarCoeffs haar_forward(const ComplexImage& img, int levels) {
  const std::size_t n = img.n();
  detail::check_haar_levels(n, levels);
  HaarCoeffs c{Grid<Complex>(img)};
  std::vector<Complex> tmp;
  for (int l = 0; l < levels; ++l) {
    const std::size_t m = n >> l;
    for (std::size_t i = 0; i < m; ++i) detail::haar_line(&c(i, 0), m, 1, true, tmp);
    for (std::size_t j = 0; j < m; ++j) detail::haar_line(&c(0, j), m, n, true, tmp);
  }
  return c;
}

/// Exact inverse of haar_forward.
inline ComplexImage haar_inverse(const HaarCoeffs& coeffs, int levels) {
  const std::size_t n = coeffs.n();
  detail::check_haar_levels(n, levels);
  ComplexImage x{Grid<Complex>(coeffs)};
  std::vector<Complex> tmp;
  for (int l = levels - 1; l >= 0; --l) {
    const std::size_t m = n >> l;
    for (std::size_t j = 0; j < m; ++j) detail::haar_line(&x(0, j), m, n, false, tmp);
    for (std::size_t i = 0; i < m; ++i) detail::haar_line(&x(i, 0), m, 1, false, tmp);
  }
  return x;
}

}  // namespace kdac
