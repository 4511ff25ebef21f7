#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "kdac/grid.hpp"

namespace kdac {

/// Which part of k-space a response emphasizes; selects per-subspace solver defaults.
enum class Band { low, high, all };

inline const char* to_string(Band b) {
  switch (b) {
    case Band::low: return "low";
    case Band::high: return "high";
    case Band::all: return "all";
  }
  return "unknown";
}

/// Frequency response of one subspace filter, natural DFT order.
using Response = Grid<Complex>;

/// Ordered set of frequency responses. Every partition group sums to the all-ones
/// response, which makes decomposition over that group lossless.
struct FilterBank {
  std::size_t n = 0;
  std::string name;
  std::vector<Response> responses;
  std::vector<std::string> labels;
  std::vector<Band> bands;
  std::vector<std::vector<std::size_t>> partition_groups;

  std::size_t size() const noexcept { return responses.size(); }

  bool is_partition_group(std::vector<std::size_t> group) const {
    std::sort(group.begin(), group.end());
    for (auto g : partition_groups) {
      std::sort(g.begin(), g.end());
      if (g == group) return true;
    }
    return false;
  }
};

/// Trivial bank with a single all-ones response. DAC over it reduces to the base solver.
inline FilterBank build_identity(std::size_t n) {
  FilterBank bank;
  bank.n = n;
  bank.name = "none";
  bank.responses.emplace_back(n, Complex{1.0, 0.0});
  bank.labels = {"all"};
  bank.bands = {Band::all};
  bank.partition_groups = {{0}};
  return bank;
}

/// HoriVert bank: two-tap difference and average filters along columns (h1, h3,
/// vertical structures) and along rows (h2, h4, horizontal structures).
///
/// Taps sit at circular offsets {n-1, 0}, so h1 + h3 is the Kronecker delta and the
/// responses of each pair sum to one exactly:
///   H1(k) = 0.5 - 0.5 exp(+2 pi i k / n),  H3(k) = 0.5 + 0.5 exp(+2 pi i k / n).
/// Responses are stored in order [H1, H2, H3, H4].
inline FilterBank build_horivert(std::size_t n) {
  if (n < 4 || n % 2 != 0) throw DimensionError("horivert bank needs an even side length >= 4");
  std::vector<Complex> phase(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    phase[k] = Complex{std::cos(w), std::sin(w)};
  }
  Response h1(n), h2(n), h3(n), h4(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      h1(i, j) = 0.5 - 0.5 * phase[j];
      h3(i, j) = 0.5 + 0.5 * phase[j];
      h2(i, j) = 0.5 - 0.5 * phase[i];
      h4(i, j) = 0.5 + 0.5 * phase[i];
    }
  }
  FilterBank bank;
  bank.n = n;
  bank.name = "horivert";
  bank.responses = {std::move(h1), std::move(h2), std::move(h3), std::move(h4)};
  bank.labels = {"vert_high", "horiz_high", "vert_low", "horiz_low"};
  bank.bands = {Band::high, Band::high, Band::low, Band::low};
  bank.partition_groups = {{0, 2}, {1, 3}};
  return bank;
}

/// Normalized 5x5 Gaussian kernel, unit standard deviation, indexed [u + 2][v + 2].
inline std::array<std::array<double, 5>, 5> gaussian_kernel_5x5() {
  std::array<std::array<double, 5>, 5> g{};
  double sum = 0.0;
  for (int u = -2; u <= 2; ++u) {
    for (int v = -2; v <= 2; ++v) {
      g[u + 2][v + 2] = std::exp(-0.5 * static_cast<double>(u * u + v * v));
      sum += g[u + 2][v + 2];
    }
  }
  for (auto& row : g) {
    for (auto& x : row) x /= sum;
  }
  return g;
}

/// Gaussian complementary bank: [G_lp, G_hp] with G_hp = 1 - G_lp.
/// G_lp is the exact DFT of the kernel centered at the origin, hence real and even.
inline FilterBank build_gaussian(std::size_t n) {
  if (n < 6 || n % 2 != 0) throw DimensionError("gaussian bank needs an even side length >= 6");
  // The kernel is separable: g(u, v) = w(u) w(v) with w normalized on its own.
  std::array<double, 5> w{};
  double wsum = 0.0;
  for (int u = -2; u <= 2; ++u) wsum += w[u + 2] = std::exp(-0.5 * static_cast<double>(u * u));
  for (auto& x : w) x /= wsum;
  std::vector<Complex> axis(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (int u = -2; u <= 2; ++u) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(u) * static_cast<double>(k) / static_cast<double>(n);
      acc += w[u + 2] * Complex{std::cos(a), std::sin(a)};
    }
    axis[k] = acc;
  }
  Response lp(n), hp(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) lp(i, j) = axis[i] * axis[j];
  }
  // The kernel is even, so the imaginary part is rounding noise only.
  for (auto& c : lp) c = Complex{c.real(), 0.0};
  for (std::size_t k = 0; k < lp.size(); ++k) hp[k] = 1.0 - lp[k];

  FilterBank bank;
  bank.n = n;
  bank.name = "gaussian";
  bank.responses = {std::move(lp), std::move(hp)};
  bank.labels = {"gauss_low", "gauss_high"};
  bank.bands = {Band::low, Band::high};
  bank.partition_groups = {{0, 1}};
  return bank;
}

/// Element-wise product in k-space (circular convolution in image space).
inline Spectrum apply_response(const Spectrum& spec, const Response& response) {
  require_same_size(spec, response, "apply_response");
  Spectrum out(spec.n());
  for (std::size_t k = 0; k < spec.size(); ++k) {
    out[k] = spec[k] == Complex{} ? Complex{} : spec[k] * response[k];
  }
  return out;
}

/// Largest deviation from the all-ones response over every partition group.
inline double verify_completeness(const FilterBank& bank) {
  double worst = 0.0;
  for (const auto& group : bank.partition_groups) {
    for (std::size_t k = 0; k < bank.n * bank.n; ++k) {
      Complex sum{};
      for (auto idx : group) sum += bank.responses.at(idx)[k];
      worst = std::max(worst, std::abs(sum - 1.0));
    }
  }
  return worst;
}

}  // namespace kdac
