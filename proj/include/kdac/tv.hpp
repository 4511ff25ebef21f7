#pragma once

#include <cmath>
#include <vector>

#include "kdac/grid.hpp"

namespace kdac {

namespace detail {

// Forward differences with Neumann boundary (zero past the last row / column).
inline void gradient(const RealGrid& u, RealGrid& gx, RealGrid& gy) {
  const std::size_t n = u.n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      gx(i, j) = i + 1 < n ? u(i + 1, j) - u(i, j) : 0.0;
      gy(i, j) = j + 1 < n ? u(i, j + 1) - u(i, j) : 0.0;
    }
  }
}

// Negative adjoint of gradient().
inline void divergence(const RealGrid& px, const RealGrid& py, RealGrid& d) {
  const std::size_t n = px.n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      if (i + 1 < n) v += px(i, j);
      if (i > 0) v -= px(i - 1, j);
      if (j + 1 < n) v += py(i, j);
      if (j > 0) v -= py(i, j - 1);
      d(i, j) = v;
    }
  }
}

}  // namespace detail

/// Isotropic total variation of a real grid.
inline double total_variation(const RealGrid& u) {
  RealGrid gx(u.n()), gy(u.n());
  detail::gradient(u, gx, gy);
  double tv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) tv += std::hypot(gx[k], gy[k]);
  return tv;
}

/// TV of the real part plus TV of the imaginary part.
inline double total_variation(const ComplexImage& x) {
  RealGrid re(x.n()), im(x.n());
  for (std::size_t k = 0; k < x.size(); ++k) {
    re[k] = x[k].real();
    im[k] = x[k].imag();
  }
  return total_variation(re) + total_variation(im);
}

/// argmin_u 0.5 ||u - f||^2 + weight TV(u), by Chambolle's dual fixed-point iteration.
inline RealGrid tv_prox(const RealGrid& f, double weight, int inner_iters) {
  if (weight <= 0.0 || inner_iters <= 0) return f;
  constexpr double tau = 0.25;
  const std::size_t n = f.n();
  RealGrid px(n, 0.0), py(n, 0.0), div(n, 0.0), g(n), gx(n), gy(n);
  const double inv_w = 1.0 / weight;
  for (int it = 0; it < inner_iters; ++it) {
    detail::divergence(px, py, div);
    for (std::size_t k = 0; k < f.size(); ++k) g[k] = div[k] - f[k] * inv_w;
    detail::gradient(g, gx, gy);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double mag = std::hypot(gx[k], gy[k]);
      const double den = 1.0 + tau * mag;
      px[k] = (px[k] + tau * gx[k]) / den;
      py[k] = (py[k] + tau * gy[k]) / den;
    }
  }
  detail::divergence(px, py, div);
  RealGrid u(n);
  for (std::size_t k = 0; k < f.size(); ++k) u[k] = f[k] - weight * div[k];
  return u;
}

/// Channel-wise TV prox of a complex image.
inline ComplexImage tv_prox(const ComplexImage& img, double weight, int inner_iters) {
  if (weight <= 0.0 || inner_iters <= 0) return img;
  const std::size_t n = img.n();
  RealGrid re(n), im(n);
  bool has_imag = false;
  for (std::size_t k = 0; k < img.size(); ++k) {
    re[k] = img[k].real();
    im[k] = img[k].imag();
    has_imag = has_imag || im[k] != 0.0;
  }
  const RealGrid ur = tv_prox(re, weight, inner_iters);
  const RealGrid ui = has_imag ? tv_prox(im, weight, inner_iters) : im;
  ComplexImage out(n);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = Complex{ur[k], ui[k]};
  return out;
}

}  // namespace kdac
