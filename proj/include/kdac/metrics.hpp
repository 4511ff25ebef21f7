#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "kdac/grid.hpp"

namespace kdac {

/// Root-mean-square error, relative to the peak, below which two images count as
/// identical. An FFT round trip leaves about 1e-16.
inline constexpr double kPsnrIdentityFloor = 1e-12;

/// PSNR in dB of magnitude images with the reference maximum as peak.
/// Magnitudes identical up to round-off give +infinity.
inline double psnr(const ComplexImage& reference, const ComplexImage& recon) {
  require_same_size(reference, recon, "psnr");
  double peak = 0.0;
  double sse = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    const double a = std::abs(reference[k]);
    const double d = a - std::abs(recon[k]);
    peak = std::max(peak, a);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(reference.size());
  if (mse <= (kPsnrIdentityFloor * peak) * (kPsnrIdentityFloor * peak)) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace detail {

// Valid-region separable filtering with a normalized 1-D kernel.
inline std::vector<double> filter_valid(const RealGrid& g, const std::vector<double>& w) {
  const std::size_t n = g.n();
  const std::size_t k = w.size();
  const std::size_t m = n - k + 1;
  std::vector<double> rows(n * m), out(m * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += w[t] * g(i, j + t);
      rows[i * m + j] = s;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += w[t] * rows[(i + t) * m + j];
      out[i * m + j] = s;
    }
  }
  return out;
}

}  // namespace detail

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean SSIM of magnitude images over the valid region of a Gaussian window.
/// The dynamic range is the reference maximum, so the index is not symmetric.
inline double ssim(const ComplexImage& reference, const ComplexImage& recon, const SsimOptions& opt = {}) {
  require_same_size(reference, recon, "ssim");
  const std::size_t n = reference.n();
  if (n < static_cast<std::size_t>(opt.window)) throw DimensionError("ssim: image side must be >= window size");

  RealGrid x = magnitude(reference), y = magnitude(recon);
  double range = *std::max_element(x.begin(), x.end());
  if (range == 0.0) range = 1.0;
  const double c1 = (opt.k1 * range) * (opt.k1 * range);
  const double c2 = (opt.k2 * range) * (opt.k2 * range);

  std::vector<double> w(static_cast<std::size_t>(opt.window));
  double wsum = 0.0;
  const int half = opt.window / 2;
  for (int t = 0; t < opt.window; ++t) {
    const double d = static_cast<double>(t - half);
    w[static_cast<std::size_t>(t)] = std::exp(-d * d / (2.0 * opt.sigma * opt.sigma));
    wsum += w[static_cast<std::size_t>(t)];
  }
  for (auto& v : w) v /= wsum;

  RealGrid xx(n), yy(n), xy(n);
  for (std::size_t k = 0; k < x.size(); ++k) {
    xx[k] = x[k] * x[k];
    yy[k] = y[k] * y[k];
    xy[k] = x[k] * y[k];
  }
  const auto mx = detail::filter_valid(x, w);
  const auto my = detail::filter_valid(y, w);
  const auto sxx = detail::filter_valid(xx, w);
  const auto syy = detail::filter_valid(yy, w);
  const auto sxy = detail::filter_valid(xy, w);

  double total = 0.0;
  for (std::size_t k = 0; k < mx.size(); ++k) {
    const double vx = sxx[k] - mx[k] * mx[k];
    const double vy = syy[k] - my[k] * my[k];
    const double cov = sxy[k] - mx[k] * my[k];
    const double num = (2.0 * mx[k] * my[k] + c1) * (2.0 * cov + c2);
    const double den = (mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

/// Laplacian-of-Gaussian kernel, size x size, with its mean removed so that it
/// annihilates constants exactly.
inline std::vector<double> log_kernel(int size = 15, double sigma = 1.5) {
  const int half = size / 2;
  const double s2 = sigma * sigma;
  std::vector<double> g(static_cast<std::size_t>(size * size)), h(g.size());
  double gsum = 0.0;
  for (int u = -half; u <= half; ++u) {
    for (int v = -half; v <= half; ++v) {
      const double v_ = std::exp(-static_cast<double>(u * u + v * v) / (2.0 * s2));
      g[static_cast<std::size_t>((u + half) * size + v + half)] = v_;
      gsum += v_;
    }
  }
  double hsum = 0.0;
  for (int u = -half; u <= half; ++u) {
    for (int v = -half; v <= half; ++v) {
      const auto idx = static_cast<std::size_t>((u + half) * size + v + half);
      h[idx] = g[idx] / gsum * (static_cast<double>(u * u + v * v) - 2.0 * s2) / (s2 * s2);
      hsum += h[idx];
    }
  }
  const double mean = hsum / static_cast<double>(h.size());
  for (auto& v : h) v -= mean;
  return h;
}

/// Circular convolution with a centered odd-sized square kernel.
inline RealGrid convolve_circular(const RealGrid& img, const std::vector<double>& kernel, int size) {
  const std::size_t n = img.n();
  const int half = size / 2;
  const auto ni = static_cast<long>(n);
  RealGrid out(n, 0.0);
  for (long i = 0; i < ni; ++i) {
    for (long j = 0; j < ni; ++j) {
      double s = 0.0;
      for (int u = -half; u <= half; ++u) {
        const auto r = static_cast<std::size_t>(((i - u) % ni + ni) % ni);
        for (int v = -half; v <= half; ++v) {
          const auto c = static_cast<std::size_t>(((j - v) % ni + ni) % ni);
          s += kernel[static_cast<std::size_t>((u + half) * size + v + half)] * img(r, c);
        }
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
    }
  }
  return out;
}

/// High-frequency error norm: ||LoG(|recon|) - LoG(|reference|)||_2, absolute.
inline double hfen(const ComplexImage& reference, const ComplexImage& recon, int size = 15, double sigma = 1.5) {
  require_same_size(reference, recon, "hfen");
  const auto kernel = log_kernel(size, sigma);
  const RealGrid a = convolve_circular(magnitude(reference), kernel, size);
  const RealGrid b = convolve_circular(magnitude(recon), kernel, size);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (b[k] - a[k]) * (b[k] - a[k]);
  return std::sqrt(s);
}

struct MetricTriple {
  double psnr = 0.0;
  double ssim = 0.0;
  double hfen = 0.0;
};

inline MetricTriple evaluate(const ComplexImage& reference, const ComplexImage& recon) {
  return {psnr(reference, recon), ssim(reference, recon), hfen(reference, recon)};
}

/// |Y_r - Y_f| per coefficient.
inline RealGrid kare_map(const Spectrum& full, const Spectrum& recon) {
  require_same_size(full, recon, "kare_map");
  RealGrid out(full.n());
  for (std::size_t k = 0; k < full.size(); ++k) out[k] = std::abs(recon[k] - full[k]);
  return out;
}

/// |Y_r - Y_f| / max(|Y_f|, eps) per coefficient, eps = 1e-12 max |Y_f|.
inline RealGrid krre_map(const Spectrum& full, const Spectrum& recon) {
  require_same_size(full, recon, "krre_map");
  const double peak = max_abs(full.values());
  if (peak == 0.0) throw NumericError("krre_map: reference spectrum is identically zero");
  const double eps = 1e-12 * peak;
  RealGrid out(full.n());
  for (std::size_t k = 0; k < full.size(); ++k) out[k] = std::abs(recon[k] - full[k]) / std::max(std::abs(full[k]), eps);
  return out;
}

/// Mean of a natural-order k-space map over radii strictly greater than min_radius.
inline double band_mean(const RealGrid& map, double min_radius) {
  const std::size_t n = map.n();
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto fi = static_cast<double>(signed_frequency(i, n));
    for (std::size_t j = 0; j < n; ++j) {
      const auto fj = static_cast<double>(signed_frequency(j, n));
      if (std::hypot(fi, fj) > min_radius) {
        s += map(i, j);
        ++count;
      }
    }
  }
  return count > 0 ? s / static_cast<double>(count) : 0.0;
}

}  // namespace kdac
