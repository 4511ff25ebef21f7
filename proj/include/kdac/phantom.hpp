#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

#include "kdac/grid.hpp"

namespace kdac {

// Phantom geometry, version 1. Coordinates are in 1/1024ths of the side length,
// x along columns and y along rows. Shapes are painted in table order.
namespace phantom_v1 {

struct Ellipse {
  int cx, cy, ax, ay;
  double value;
};
struct Rect {
  int x0, y0, x1, y1;
  double value;
};
struct Disk {
  int cx, cy;
  double delta;  ///< added to the underlying value, then clipped to [0, 1]
};

inline constexpr int kUnit = 1024;
inline constexpr Ellipse kBody{512, 512, 460, 490, 0.9};
inline constexpr std::array<Rect, 3> kNested{{
    {180, 170, 470, 440, 0.7},
    {230, 220, 420, 390, 0.5},
    {280, 270, 370, 340, 0.3},
}};
// Plateau carrying one-pixel stripes every kStripePeriod columns.
inline constexpr Rect kComb{560, 180, 840, 440, 0.5};
inline constexpr double kStripeValue = 0.55;
inline constexpr std::size_t kStripePeriod = 4;
// Radius is n / 64, i.e. 16 units.
inline constexpr int kDiskRadius = kUnit / 64;
inline constexpr std::array<Disk, 8> kDisks{{
    {300, 620, -0.02}, {420, 620, -0.04}, {540, 620, -0.08}, {660, 620, -0.16},
    {300, 760, +0.02}, {420, 760, +0.04}, {540, 760, +0.08}, {660, 760, +0.16},
}};

}  // namespace phantom_v1

/// Deterministic piecewise-constant test phantom with low-contrast, high-frequency
/// detail. Real-valued, within [0, 1]. Requires n >= 64.
inline ComplexImage make_phantom(std::size_t n) {
  using namespace phantom_v1;
  if (n < 64) throw DimensionError("phantom side length must be >= 64");
  using wide = __int128;
  // Pixel centers and shape coordinates share the integer scale 2 n kUnit.
  const wide s = 2 * static_cast<wide>(n);
  auto center = [](std::size_t k) { return static_cast<wide>(2 * k + 1) * kUnit; };
  auto inside_rect = [&](const Rect& r, wide x, wide y) {
    return x >= r.x0 * s && x < r.x1 * s && y >= r.y0 * s && y < r.y1 * s;
  };

  RealGrid v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const wide y = center(i);
    for (std::size_t j = 0; j < n; ++j) {
      const wide x = center(j);
      double value = 0.0;
      const wide dx = x - kBody.cx * s, dy = y - kBody.cy * s;
      const wide ax = kBody.ax * s, ay = kBody.ay * s;
      if (dx * dx * ay * ay + dy * dy * ax * ax <= ax * ax * ay * ay) value = kBody.value;
      for (const auto& r : kNested) {
        if (inside_rect(r, x, y)) value = r.value;
      }
      if (inside_rect(kComb, x, y)) value = j % kStripePeriod == 0 ? kStripeValue : kComb.value;
      for (const auto& d : kDisks) {
        const wide ex = x - d.cx * s, ey = y - d.cy * s, rr = kDiskRadius * s;
        if (ex * ex + ey * ey <= rr * rr) value = std::clamp(value + d.delta, 0.0, 1.0);
      }
      v(i, j) = value;
    }
  }
  ComplexImage img(n);
  for (std::size_t k = 0; k < img.size(); ++k) img[k] = Complex{v[k], 0.0};
  return img;
}

}  // namespace kdac
