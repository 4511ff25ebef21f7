#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "kdac/filterbank.hpp"
#include "kdac/grid.hpp"
#include "kdac/random.hpp"
#include "kdac/sampling.hpp"

namespace kdac::test {

inline ComplexImage random_image(std::size_t n, std::uint64_t seed, bool complex_valued = true) {
  SplitMix64 rng(seed);
  ComplexImage x(n);
  for (auto& v : x) v = Complex{rng.uniform() - 0.5, complex_valued ? rng.uniform() - 0.5 : 0.0};
  return x;
}

inline RealGrid random_real(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  RealGrid x(n);
  for (auto& v : x) v = rng.uniform();
  return x;
}

inline ComplexImage constant_image(std::size_t n, Complex c) { return ComplexImage(n, c); }

// Direct O(n^4) unitary DFT.
inline Spectrum naive_dft(const ComplexImage& x) {
  const std::size_t n = x.n();
  const double two_pi = 2.0 * std::acos(-1.0);
  Spectrum out(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      std::complex<long double> acc{};
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
          const long double ang = -two_pi * static_cast<long double>((k * a + l * b) % n) / static_cast<long double>(n);
          acc += std::complex<long double>(x(a, b).real(), x(a, b).imag()) *
                 std::complex<long double>(std::cos(ang), std::sin(ang));
        }
      }
      out(k, l) = Complex{static_cast<double>(acc.real()), static_cast<double>(acc.imag())} / static_cast<double>(n);
    }
  }
  return out;
}

// Circular convolution with taps given as (row offset, col offset, weight):
// out(i, j) = sum w x(i - di, j - dj).
struct Tap {
  long di, dj;
  double w;
};

inline ComplexImage circular_convolve(const ComplexImage& x, const std::vector<Tap>& taps) {
  const auto n = static_cast<long>(x.n());
  ComplexImage out(x.n());
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < n; ++j) {
      Complex s{};
      for (const auto& t : taps) {
        const long r = ((i - t.di) % n + n) % n;
        const long c = ((j - t.dj) % n + n) % n;
        s += t.w * x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      }
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = s;
    }
  }
  return out;
}

inline ComplexImage filter_via_response(const ComplexImage& x, const Response& h) {
  return ifft2(apply_response(fft2(x), h));
}

// Spatial taps of the Gaussian 5x5 kernel built from the raw formula.
inline std::vector<Tap> gaussian_taps() {
  std::vector<Tap> taps;
  double sum = 0.0;
  for (long u = -2; u <= 2; ++u) {
    for (long v = -2; v <= 2; ++v) {
      const double w = std::exp(-static_cast<double>(u * u + v * v) / 2.0);
      taps.push_back({u, v, w});
      sum += w;
    }
  }
  for (auto& t : taps) t.w /= sum;
  return taps;
}

using Grid3 = std::array<long double, 9>;

// Independent prox oracle: accelerated projected gradient on the dual
//   min_q 0.5 ||f - w D^T q||^2  subject to |q_ij| <= 1,
// with D the forward difference (Neumann), in long double. u = f - w D^T q.
inline Grid3 tv_prox_oracle(const Grid3& f, long double w, int iters) {
  constexpr int n = 3;
  auto at = [](int i, int j) { return i * n + j; };
  auto D = [&](const Grid3& u, Grid3& gx, Grid3& gy) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        gx[at(i, j)] = i + 1 < n ? u[at(i + 1, j)] - u[at(i, j)] : 0.0L;
        gy[at(i, j)] = j + 1 < n ? u[at(i, j + 1)] - u[at(i, j)] : 0.0L;
      }
  };
  auto Dt = [&](const Grid3& qx, const Grid3& qy) {
    Grid3 out{};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i + 1 < n) {
          out[at(i + 1, j)] += qx[at(i, j)];
          out[at(i, j)] -= qx[at(i, j)];
        }
        if (j + 1 < n) {
          out[at(i, j + 1)] += qy[at(i, j)];
          out[at(i, j)] -= qy[at(i, j)];
        }
      }
    return out;
  };
  Grid3 qx{}, qy{}, px{}, py{}, zx{}, zy{};
  long double t = 1.0L;
  const long double step = 1.0L / (8.0L * w * w);
  for (int it = 0; it < iters; ++it) {
    const Grid3 dtz = Dt(zx, zy);
    Grid3 r{};
    for (int k = 0; k < 9; ++k) r[k] = f[k] - w * dtz[k];
    Grid3 gx{}, gy{};
    D(r, gx, gy);
    for (int k = 0; k < 9; ++k) {
      long double ax = zx[k] + step * w * gx[k];
      long double ay = zy[k] + step * w * gy[k];
      const long double m = std::sqrt(ax * ax + ay * ay);
      if (m > 1.0L) {
        ax /= m;
        ay /= m;
      }
      px[k] = qx[k];
      py[k] = qy[k];
      qx[k] = ax;
      qy[k] = ay;
    }
    const long double t1 = 0.5L * (1.0L + std::sqrt(1.0L + 4.0L * t * t));
    for (int k = 0; k < 9; ++k) {
      zx[k] = qx[k] + (t - 1.0L) / t1 * (qx[k] - px[k]);
      zy[k] = qy[k] + (t - 1.0L) / t1 * (qy[k] - py[k]);
    }
    t = t1;
  }
  const Grid3 dtq = Dt(qx, qy);
  Grid3 u{};
  for (int k = 0; k < 9; ++k) u[k] = f[k] - w * dtq[k];
  return u;
}

inline double rel_err(const Grid<Complex>& a, const Grid<Complex>& b) { return relative_error(a.values(), b.values()); }

inline SamplingMask full_mask(std::size_t n) { return generate_mask(MaskKind::random2d, 1.0, n, 0); }

}  // namespace kdac::test
