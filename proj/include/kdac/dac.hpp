#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "kdac/filterbank.hpp"
#include "kdac/grid.hpp"
#include "kdac/sampling.hpp"
#include "kdac/solvers.hpp"

namespace kdac {

/// Solver defaults per band: high-frequency subspaces get stronger TV and weaker
/// wavelet shrinkage than low-frequency ones.
inline SolverConfig default_subspace_config(Band band) {
  SolverConfig cfg;
  cfg.mu = 2.0;
  if (band == Band::high) {
    cfg.alpha = 0.003;
    cfg.beta = 0.001;
  } else {
    cfg.alpha = 0.002;
    cfg.beta = 0.002;
  }
  return cfg;
}

inline std::vector<SolverConfig> default_configs(const FilterBank& bank) {
  std::vector<SolverConfig> cfgs;
  for (auto b : bank.bands) cfgs.push_back(default_subspace_config(b));
  return cfgs;
}

/// One filtered view of the measurement, to be reconstructed independently.
struct SubspaceProblem {
  std::string label;
  Response response;
  Measurement measurement;
  SolverConfig config;
};

/// Y_i = Y (.) H_i for every response of the bank; the mask is carried unchanged.
inline std::vector<SubspaceProblem> decompose(const Measurement& meas, const FilterBank& bank,
                                              std::vector<SolverConfig> configs = {}) {
  if (bank.n != meas.spec.n() || bank.n != meas.mask.n) throw DimensionError("decompose: bank and measurement sizes differ");
  if (configs.empty()) configs = default_configs(bank);
  if (configs.size() != bank.size()) {
    throw ConfigError("expected " + std::to_string(bank.size()) + " solver configs, got " + std::to_string(configs.size()));
  }
  std::vector<SubspaceProblem> problems;
  problems.reserve(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    problems.push_back({bank.labels.at(i), bank.responses[i], Measurement{apply_response(meas.spec, bank.responses[i]), meas.mask},
                        configs[i]});
  }
  return problems;
}

/// Worker count: KDAC_THREADS if set and positive, else the hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("KDAC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

namespace detail {

[[noreturn]] inline void rethrow_labeled(const std::string& label, std::exception_ptr ep) {
  const std::string prefix = "subspace '" + label + "': ";
  try {
    std::rethrow_exception(ep);
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace detail

/// Runs the solver on every problem. Results are indexed like the input regardless of
/// scheduling; with threads > 1 problems are solved concurrently.
inline std::vector<SolveResult> reconstruct_subspaces(const std::vector<SubspaceProblem>& problems, const Solver& solver,
                                                      unsigned threads = 1) {
  std::vector<SolveResult> results(problems.size());
  std::vector<std::exception_ptr> errors(problems.size());
  auto run = [&](std::size_t i) {
    try {
      results[i] = solver(problems[i].measurement, problems[i].config);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1U, threads), problems.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < problems.size(); ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < problems.size(); i = next++) run(i);
      });
    }
  }
  for (std::size_t i = 0; i < problems.size(); ++i) {
    if (errors[i]) detail::rethrow_labeled(problems[i].label, errors[i]);
  }
  return results;
}

/// Plain sum over one partition group. Summing across groups would double count.
inline ComplexImage integrate_sum(const std::vector<ComplexImage>& images, const FilterBank& bank,
                                  const std::vector<std::size_t>& group) {
  if (!bank.is_partition_group(group)) throw ConfigError("integrate_sum: indices do not form a partition group of the bank");
  if (images.size() != bank.size()) throw DimensionError("integrate_sum: one image per response expected");
  ComplexImage out(bank.n);
  for (auto idx : group) {
    require_same_size(out, images[idx], "integrate_sum");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += images[idx][k];
  }
  return out;
}

/// Fusion denominators below this are clamped.
inline constexpr double kFusionFloor = 1e-12;

namespace detail {

inline void check_weights(const std::vector<double>& weights, std::size_t count) {
  if (weights.size() != count) throw DimensionError("one fusion weight per subspace expected");
  bool any = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("fusion weights must be finite and >= 0");
    any = any || w > 0.0;
  }
  if (!any) throw ConfigError("at least one fusion weight must be positive");
}

inline bool is_all_ones(const Response& r) {
  return std::all_of(r.begin(), r.end(), [](const Complex& c) { return c == Complex{1.0, 0.0}; });
}

// Tikhonov fusion on precomputed subspace spectra.
inline ComplexImage fuse_spectra(const std::vector<Spectrum>& spectra, const std::vector<ComplexImage>& images,
                                 const FilterBank& bank, const std::vector<double>& weights) {
  check_weights(weights, bank.size());
  // A lone all-ones response fuses to its own image; skip the transform round trip.
  std::size_t positive = 0, last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) {
      ++positive;
      last = i;
    }
  }
  if (positive == 1 && is_all_ones(bank.responses[last])) return images[last];

  const std::size_t n = bank.n;
  Spectrum fused(n);
  for (std::size_t k = 0; k < n * n; ++k) {
    Complex num{};
    double den = 0.0;
    for (std::size_t i = 0; i < bank.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const Complex h = bank.responses[i][k];
      num += weights[i] * std::conj(h) * spectra[i][k];
      den += weights[i] * std::norm(h);
    }
    fused[k] = num / std::max(den, kFusionFloor);
  }
  return ifft2(fused);
}

}  // namespace detail

/// Closed-form minimizer of sum_i lambda_i ||x_i - H_i x||^2, solved element-wise in k-space.
inline ComplexImage integrate_tikhonov(const std::vector<ComplexImage>& images, const FilterBank& bank,
                                       const std::vector<double>& weights) {
  if (images.size() != bank.size()) throw DimensionError("integrate_tikhonov: one image per response expected");
  std::vector<Spectrum> spectra;
  spectra.reserve(images.size());
  for (const auto& img : images) {
    require_same_size(img, bank.responses.front(), "integrate_tikhonov");
    spectra.push_back(fft2(img));
  }
  return detail::fuse_spectra(spectra, images, bank, weights);
}

struct LambdaUpdate {
  std::vector<double> weights;
  std::vector<double> residuals;  ///< ||H_i x - x_i||^2
  bool converged = false;         ///< all residuals vanished; previous weights kept
};

/// Residual norms below this mark the fusion as exact.
inline constexpr double kResidualFloor = 1e-14;

namespace detail {

inline LambdaUpdate update_lambda_spectra(const Spectrum& xhat, const std::vector<Spectrum>& spectra, const FilterBank& bank,
                                          const std::vector<double>& previous) {
  LambdaUpdate u;
  u.residuals.resize(bank.size());
  double total = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    double r = 0.0;
    for (std::size_t k = 0; k < xhat.size(); ++k) r += std::norm(bank.responses[i][k] * xhat[k] - spectra[i][k]);
    u.residuals[i] = r;
    total += r * r;
  }
  total = std::sqrt(total);
  if (total < kResidualFloor) {
    u.weights = previous;
    u.converged = true;
    return u;
  }
  u.weights.resize(bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) u.weights[i] = u.residuals[i] / total;
  return u;
}

}  // namespace detail

/// lambda_i = ||H_i x - x_i||^2, normalized to unit L2 length. Residuals are taken in
/// k-space, which is equivalent under the unitary transform.
inline LambdaUpdate update_lambda(const ComplexImage& x, const std::vector<ComplexImage>& images, const FilterBank& bank,
                                  const std::vector<double>& previous = {}) {
  if (images.size() != bank.size()) throw DimensionError("update_lambda: one image per response expected");
  require_same_size(x, bank.responses.front(), "update_lambda");
  std::vector<Spectrum> spectra;
  for (const auto& img : images) spectra.push_back(fft2(img));
  std::vector<double> prev = previous;
  if (prev.empty()) prev.assign(bank.size(), 1.0 / std::sqrt(static_cast<double>(bank.size())));
  return detail::update_lambda_spectra(fft2(x), spectra, bank, prev);
}

struct LoopParams {
  int max_outer = 10;
  double tol = 1e-6;
};

struct ReconReport {
  ComplexImage image;
  std::vector<std::string> labels;
  std::vector<ComplexImage> subspace_images;
  std::vector<SolveTrace> traces;
  std::vector<std::vector<double>> lambda_history;  ///< initial weights, then one entry per outer iteration
  std::vector<double> rel_change_history;           ///< one entry per outer iteration
  std::vector<double> minimax_history;              ///< ||r(x)||_2 of each fused image
  int outer_iterations = 0;
  int selected_iteration = 0;  ///< 1-based outer iteration whose fused image is returned
  bool converged = false;
  double decompose_ms = 0.0;
  double solve_ms = 0.0;
  double fuse_ms = 0.0;
};

/// Divide and conquer: decompose, solve every subspace once, then alternate Tikhonov
/// fusion and the residual-driven weight update. The alternation can cycle, so the
/// returned image is the fused iterate with the smallest max over unit weights of
/// sum lambda_i r_i, i.e. the smallest ||r(x)||_2; the earliest one wins ties.
inline ReconReport dac_reconstruct(const Measurement& meas, const FilterBank& bank, const Solver& solver,
                                   std::vector<SolverConfig> configs = {}, LoopParams loop = {}, unsigned threads = 1) {
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  if (loop.max_outer < 1) throw ConfigError("loop.max_outer must be >= 1");
  if (!(loop.tol >= 0.0)) throw ConfigError("loop.tol must be >= 0");

  ReconReport rep;
  auto t0 = clock::now();
  const auto problems = decompose(meas, bank, std::move(configs));
  rep.decompose_ms = ms_since(t0);

  t0 = clock::now();
  auto results = reconstruct_subspaces(problems, solver, threads);
  rep.solve_ms = ms_since(t0);
  for (std::size_t i = 0; i < results.size(); ++i) {
    rep.labels.push_back(problems[i].label);
    rep.subspace_images.push_back(std::move(results[i].image));
    rep.traces.push_back(std::move(results[i].trace));
  }

  t0 = clock::now();
  std::vector<Spectrum> spectra;
  for (const auto& img : rep.subspace_images) spectra.push_back(fft2(img));
  std::vector<double> lambda(bank.size(), 1.0 / std::sqrt(static_cast<double>(bank.size())));
  rep.lambda_history.push_back(lambda);

  ComplexImage prev;
  ComplexImage best;
  double best_value = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= loop.max_outer; ++it) {
    ComplexImage x = detail::fuse_spectra(spectra, rep.subspace_images, bank, lambda);
    double rel = std::numeric_limits<double>::infinity();
    if (!prev.empty()) rel = relative_error(x.values(), prev.values());
    rep.rel_change_history.push_back(rel);
    rep.outer_iterations = it;

    const auto upd = detail::update_lambda_spectra(fft2(x), spectra, bank, lambda);
    double value = 0.0;
    for (double r : upd.residuals) value += r * r;
    value = std::sqrt(value);
    rep.minimax_history.push_back(value);
    if (value < best_value || best.empty()) {
      best_value = value;
      best = x;
      rep.selected_iteration = it;
    }
    lambda = upd.weights;
    rep.lambda_history.push_back(lambda);
    prev = std::move(x);
    if (upd.converged || rel <= loop.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.image = std::move(best);
  rep.fuse_ms = ms_since(t0);
  return rep;
}

}  // namespace kdac
