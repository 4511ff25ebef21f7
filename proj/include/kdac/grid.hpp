#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "kdac/error.hpp"

namespace kdac {

using Complex = std::complex<double>;

/// Square n x n grid stored row-major.
template <class T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}
  Grid(std::size_t n, std::vector<T> data) : n_(n), data_(std::move(data)) {
    if (data_.size() != n_ * n_) {
      throw DimensionError("grid data length " + std::to_string(data_.size()) +
                           " does not match n^2 = " + std::to_string(n_ * n_));
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

using RealGrid = Grid<double>;

/// Image-domain samples.
class ComplexImage : public Grid<Complex> {
 public:
  using Grid<Complex>::Grid;
  explicit ComplexImage(Grid<Complex> g) : Grid<Complex>(std::move(g)) {}
};

/// k-space samples in natural DFT order, DC at (0, 0).
class Spectrum : public Grid<Complex> {
 public:
  using Grid<Complex>::Grid;
  explicit Spectrum(Grid<Complex> g) : Grid<Complex>(std::move(g)) {}
};

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.n() != b.n() || a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a.n()) + " vs " +
                         std::to_string(b.n()) + ")");
  }
}

namespace detail {

// FFTW planning is not thread-safe; executing an existing plan on new arrays is.
// Plans are created once per (n, direction) under a lock and reused.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan plan(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* in = fftw_alloc_complex(n * n);
    auto* out = fftw_alloc_complex(n * n);
    fftw_plan p = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), in, out, sign, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (p == nullptr) throw NumericError("FFTW failed to create a plan");
    plans_.emplace(key, p);
    return p;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

 private:
  FftPlanCache() = default;
  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

struct FftwFree {
  void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline Grid<Complex> transform(const Grid<Complex>& src, int sign) {
  const std::size_t n = src.n();
  if (n < 4 || n % 2 != 0) {
    throw DimensionError("fft: side length must be even and >= 4, got " + std::to_string(n));
  }
  if (src.size() != n * n) throw DimensionError("fft: grid is not square");
  fftw_plan p = FftPlanCache::instance().plan(n, sign);
  FftwBuffer in(fftw_alloc_complex(n * n));
  FftwBuffer out(fftw_alloc_complex(n * n));
  std::copy(src.begin(), src.end(), reinterpret_cast<Complex*>(in.get()));
  fftw_execute_dft(p, in.get(), out.get());
  const double scale = 1.0 / static_cast<double>(n);
  Grid<Complex> dst(n);
  const auto* o = reinterpret_cast<const Complex*>(out.get());
  for (std::size_t k = 0; k < n * n; ++k) dst[k] = o[k] * scale;
  return dst;
}

}  // namespace detail

/// Unitary 2-D DFT (1/n overall scaling), natural order.
inline Spectrum fft2(const ComplexImage& img) { return Spectrum(detail::transform(img, FFTW_FORWARD)); }

/// Inverse of fft2.
inline ComplexImage ifft2(const Spectrum& spec) { return ComplexImage(detail::transform(spec, FFTW_BACKWARD)); }

/// Circular shift by (n/2, n/2). Moves DC to the grid center and back.
template <class G>
G center_shift(const G& g) {
  const std::size_t n = g.n();
  const std::size_t h = n / 2;
  G out(g);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out((i + h) % n, (j + h) % n) = g(i, j);
  }
  return out;
}

inline double max_abs(std::span<const Complex> v) {
  double m = 0.0;
  for (const auto& c : v) m = std::max(m, std::abs(c));
  return m;
}

inline double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return s;
}

inline double norm2(std::span<const Complex> v) { return std::sqrt(squared_norm(v)); }

/// ||a - b||_2 / ||b||_2, or ||a - b||_2 when b is zero.
inline double relative_error(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw DimensionError("relative_error: size mismatch");
  double num = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) num += std::norm(a[k] - b[k]);
  const double den = squared_norm(b);
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// Divides every sample by the largest magnitude. All-zero input is returned unchanged.
inline ComplexImage normalize_max(const ComplexImage& img) {
  const double m = max_abs(img.values());
  if (m == 0.0) return img;
  ComplexImage out(img);
  for (auto& c : out) c /= m;
  return out;
}

/// Signed frequency index of natural-order position k on an n-point axis.
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

inline RealGrid magnitude(const Grid<Complex>& g) {
  RealGrid out(g.n());
  for (std::size_t k = 0; k < g.size(); ++k) out[k] = std::abs(g[k]);
  return out;
}

}  // namespace kdac
