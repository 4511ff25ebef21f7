#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kdac/grid.hpp"
#include "kdac/sampling.hpp"
#include "kdac/tv.hpp"
#include "kdac/wavelet.hpp"

namespace kdac {

/// Parameters of (mu / 2) ||F_u x - y||^2 + alpha TV(x) + beta ||Phi x||_1 and of the
/// iterations that minimize it.
struct SolverConfig {
  double mu = 2.0;
  double alpha = 0.002;
  double beta = 0.002;
  int outer_iters = 200;
  int tv_inner_iters = 10;
  int wavelet_levels = 4;
  /// Multiplies the full gradient mu F_u^H (F_u x - y). Unset means 1 / mu,
  /// the reciprocal Lipschitz constant under the unitary transform.
  std::optional<double> step;
  /// Relative-change stopping threshold; 0 runs all outer iterations.
  double tol = 1e-5;
  /// Weight of the TV branch when both proximal branches are averaged.
  double tv_share = 0.5;

  double effective_step() const { return step.value_or(1.0 / mu); }

  void validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ConfigError("solver.mu must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("solver.alpha must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("solver.beta must be >= 0");
    if (outer_iters < 1) throw ConfigError("solver.outer_iters must be >= 1");
    if (tv_inner_iters < 1) throw ConfigError("solver.tv_inner_iters must be >= 1");
    if (wavelet_levels < 1) throw ConfigError("solver.wavelet_levels must be >= 1");
    if (step && !(*step > 0.0 && *step <= 1.0)) throw ConfigError("solver.step must lie in (0, 1]");
    if (!(tol >= 0.0)) throw ConfigError("solver.tol must be >= 0");
    if (!(tv_share > 0.0 && tv_share < 1.0)) throw ConfigError("solver.tv_share must lie in (0, 1)");
  }
};

struct SolveTrace {
  std::vector<double> objective;  ///< objective[0] is the initializer, then one per iteration
  double final_rel_change = 0.0;
  int iterations = 0;
  int best_iteration = 0;
};

struct SolveResult {
  ComplexImage image;
  SolveTrace trace;
};

/// Any reconstruction routine: measurement + configuration -> image.
using Solver = std::function<SolveResult(const Measurement&, const SolverConfig&)>;

enum class SolverKind { zero_fill, fista_l1, fcsa };

inline std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::zero_fill: return "zero_fill";
    case SolverKind::fista_l1: return "fista_l1";
    case SolverKind::fcsa: return "fcsa";
  }
  return "unknown";
}

inline std::optional<SolverKind> parse_solver_kind(std::string_view s) {
  if (s == "zero_fill") return SolverKind::zero_fill;
  if (s == "fista_l1") return SolverKind::fista_l1;
  if (s == "fcsa") return SolverKind::fcsa;
  return std::nullopt;
}

/// v max(1 - tau / |v|, 0).
inline Complex soft_threshold(Complex v, double tau) {
  const double m = std::abs(v);
  if (m <= tau) return Complex{};
  return v * (1.0 - tau / m);
}

inline ComplexImage wavelet_prox(const ComplexImage& x, double tau, int levels) {
  if (tau <= 0.0) return x;
  HaarCoeffs c = haar_forward(x, levels);
  for (auto& v : c) v = soft_threshold(v, tau);
  return haar_inverse(c, levels);
}

inline double wavelet_l1(const ComplexImage& x, int levels) {
  double s = 0.0;
  for (const auto& v : haar_forward(x, levels)) s += std::abs(v);
  return s;
}

/// F_u x - y on the sampled support (zero elsewhere).
inline Spectrum data_residual(const ComplexImage& x, const Measurement& meas) {
  require_same_size(x, meas.spec, "data_residual");
  Spectrum r = fft2(x);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = meas.mask.sampled(k) ? r[k] - meas.spec[k] : Complex{};
  return r;
}

/// (mu / 2) ||F_u x - y||^2.
inline double data_fidelity(const ComplexImage& x, const Measurement& meas, double mu) {
  return 0.5 * mu * squared_norm(data_residual(x, meas).values());
}

/// Gradient of data_fidelity with respect to (Re x, Im x), packed as a complex image.
inline ComplexImage data_gradient(const ComplexImage& x, const Measurement& meas, double mu) {
  ComplexImage g = ifft2(data_residual(x, meas));
  for (auto& v : g) v *= mu;
  return g;
}

/// Full objective with whichever terms have positive weight.
inline double objective(const ComplexImage& x, const Measurement& meas, const SolverConfig& cfg) {
  double f = data_fidelity(x, meas, cfg.mu);
  if (cfg.alpha > 0.0) f += cfg.alpha * total_variation(x);
  if (cfg.beta > 0.0) f += cfg.beta * wavelet_l1(x, cfg.wavelet_levels);
  return f;
}

inline SolveResult zero_fill_solver(const Measurement& meas, const SolverConfig& = {}) {
  SolveResult r{zero_fill(meas), {}};
  return r;
}

namespace detail {

// Accelerated proximal gradient with composite splitting. Each active regularizer is
// handled by its own prox from the same gradient point, with its weight divided by
// its share; the branch outputs are averaged with those shares. A single active term
// makes this plain FISTA.
inline SolveResult composite_splitting(const Measurement& meas, const SolverConfig& cfg, bool use_tv) {
  cfg.validate();
  constexpr double divergence_limit = 1e12;
  const double step = cfg.effective_step();
  const bool tv_on = use_tv && cfg.alpha > 0.0;
  const bool wav_on = cfg.beta > 0.0;
  const double tv_share = tv_on && wav_on ? cfg.tv_share : 1.0;
  const double wav_share = tv_on && wav_on ? 1.0 - cfg.tv_share : 1.0;
  SolverConfig obj_cfg = cfg;
  if (!tv_on) obj_cfg.alpha = 0.0;

  ComplexImage x = zero_fill(meas);
  ComplexImage x_prev = x;
  ComplexImage z = x;
  ComplexImage best = x;
  double t = 1.0;

  SolveResult result;
  auto& trace = result.trace;
  double best_obj = objective(x, meas, obj_cfg);
  trace.objective.push_back(best_obj);

  for (int it = 1; it <= cfg.outer_iters; ++it) {
    ComplexImage xg = data_gradient(z, meas, cfg.mu);
    for (std::size_t k = 0; k < xg.size(); ++k) xg[k] = z[k] - step * xg[k];

    if (tv_on && wav_on) {
      const ComplexImage a = tv_prox(xg, step * cfg.alpha / tv_share, cfg.tv_inner_iters);
      const ComplexImage b = wavelet_prox(xg, step * cfg.beta / wav_share, cfg.wavelet_levels);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = tv_share * a[k] + wav_share * b[k];
    } else if (tv_on) {
      x = tv_prox(xg, step * cfg.alpha, cfg.tv_inner_iters);
    } else if (wav_on) {
      x = wavelet_prox(xg, step * cfg.beta, cfg.wavelet_levels);
    } else {
      x = std::move(xg);
    }

    const double obj = objective(x, meas, obj_cfg);
    if (!std::isfinite(obj) || obj > divergence_limit) {
      throw NumericError("solver diverged at iteration " + std::to_string(it) + " (objective " +
                         std::to_string(obj) + "); reduce the step size");
    }
    trace.objective.push_back(obj);
    trace.iterations = it;
    if (obj < best_obj) {
      best_obj = obj;
      best = x;
      trace.best_iteration = it;
    }

    const double prev_norm = norm2(x_prev.values());
    double diff = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) diff += std::norm(x[k] - x_prev[k]);
    diff = std::sqrt(diff);
    trace.final_rel_change = prev_norm > 0.0 ? diff / prev_norm : diff;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = x[k] + momentum * (x[k] - x_prev[k]);
    t = t_next;
    x_prev = x;

    if (trace.final_rel_change <= cfg.tol) break;
  }
  result.image = std::move(best);
  return result;
}

}  // namespace detail

/// FISTA on (mu / 2) ||F_u x - y||^2 + beta ||Phi x||_1, Phi = orthonormal Haar.
/// Returns the iterate with the lowest objective, the zero-filled start included.
inline SolveResult fista_l1(const Measurement& meas, const SolverConfig& cfg) {
  return detail::composite_splitting(meas, cfg, false);
}

/// FCSA: gradient step on the data term, TV and wavelet proxes from the same point,
/// averaged, with FISTA momentum.
inline SolveResult fcsa(const Measurement& meas, const SolverConfig& cfg) {
  return detail::composite_splitting(meas, cfg, true);
}

inline Solver make_solver(SolverKind kind) {
  switch (kind) {
    case SolverKind::zero_fill: return [](const Measurement& m, const SolverConfig& c) { return zero_fill_solver(m, c); };
    case SolverKind::fista_l1: return fista_l1;
    case SolverKind::fcsa: return fcsa;
  }
  throw ConfigError("unknown solver kind");
}

}  // namespace kdac
