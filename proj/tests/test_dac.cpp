#include <gtest/gtest.h>

#include "kdac/dac.hpp"
#include "kdac/phantom.hpp"
#include "support.hpp"

using namespace kdac;
using kdac::test::random_image;
using kdac::test::rel_err;

namespace {

std::vector<ComplexImage> exact_subspaces(const ComplexImage& x, const FilterBank& bank) {
  std::vector<ComplexImage> out;
  for (const auto& h : bank.responses) out.push_back(ifft2(apply_response(fft2(x), h)));
  return out;
}

// Two all-ones responses, used to drive the weight update with chosen residuals.
FilterBank twin_identity(std::size_t n) {
  FilterBank bank = build_identity(n);
  bank.responses.push_back(bank.responses.front());
  bank.labels = {"a", "b"};
  bank.bands = {Band::all, Band::all};
  bank.partition_groups = {{0}, {1}};
  return bank;
}

Measurement sample(const ComplexImage& x, MaskKind kind, double ratio, std::uint64_t seed) {
  return undersample(x, generate_mask(kind, ratio, x.n(), seed));
}

}  // namespace

TEST(Decompose, GaussianPairSumsToMeasurement) {
  const auto meas = sample(random_image(64, 1), MaskKind::random2d, 0.3, 2);
  const auto probs = decompose(meas, build_gaussian(64));
  ASSERT_EQ(probs.size(), 2U);
  Spectrum sum(64);
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = probs[0].measurement.spec[k] + probs[1].measurement.spec[k];
  EXPECT_LE(rel_err(sum, meas.spec), 1e-12);
  EXPECT_EQ(probs[0].measurement.mask.bits, meas.mask.bits);
  EXPECT_EQ(probs[0].label, "gauss_low");
}

TEST(Decompose, HoriVertPairsSumToMeasurement) {
  const auto meas = sample(random_image(64, 3), MaskKind::cartesian, 0.3, 2);
  const auto p = decompose(meas, build_horivert(64));
  ASSERT_EQ(p.size(), 4U);
  for (auto [a, b] : {std::pair{0, 2}, std::pair{1, 3}}) {
    Spectrum sum(64);
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = p[a].measurement.spec[k] + p[b].measurement.spec[k];
    EXPECT_LE(rel_err(sum, meas.spec), 1e-12);
  }
  for (const auto& prob : p) {
    for (std::size_t k = 0; k < meas.spec.size(); ++k) {
      if (!meas.mask.sampled(k)) {
        ASSERT_EQ(prob.measurement.spec[k], Complex{});
      }
    }
  }
}

TEST(Decompose, IdentityBankKeepsInput) {
  const auto meas = sample(random_image(32, 4), MaskKind::radial, 0.3, 1);
  const auto p = decompose(meas, build_identity(32));
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p[0].measurement.spec, meas.spec);
}

TEST(Decompose, ConfigsAndSizesChecked) {
  const auto meas = sample(random_image(32, 4), MaskKind::radial, 0.3, 1);
  EXPECT_THROW(decompose(meas, build_horivert(16)), DimensionError);
  EXPECT_THROW(decompose(meas, build_horivert(32), {SolverConfig{}}), ConfigError);
  const auto p = decompose(meas, build_horivert(32));
  EXPECT_DOUBLE_EQ(p[0].config.alpha, 0.003);
  EXPECT_DOUBLE_EQ(p[0].config.beta, 0.001);
  EXPECT_DOUBLE_EQ(p[2].config.alpha, 0.002);
  EXPECT_DOUBLE_EQ(p[2].config.beta, 0.002);
}

TEST(ReconstructSubspaces, ZeroFillGaussianFullMaskIsLossless) {
  const auto x = random_image(64, 5);
  const auto bank = build_gaussian(64);
  const auto res = reconstruct_subspaces(decompose(undersample(x, test::full_mask(64)), bank), zero_fill_solver);
  std::vector<ComplexImage> imgs{res[0].image, res[1].image};
  EXPECT_LE(rel_err(integrate_sum(imgs, bank, {0, 1}), x), 1e-10);
}

TEST(ReconstructSubspaces, ConcurrencyDoesNotChangeResults) {
  const auto meas = sample(make_phantom(64), MaskKind::random2d, 0.3, 7);
  const auto probs = decompose(meas, build_horivert(64));
  std::vector<SubspaceProblem> small = probs;
  for (auto& p : small) p.config.outer_iters = 15;
  const auto serial = reconstruct_subspaces(small, fcsa, 1);
  const auto parallel = reconstruct_subspaces(small, fcsa, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) EXPECT_EQ(serial[i].image, parallel[i].image) << i;
}

TEST(ReconstructSubspaces, IdentityBankMatchesDirectSolve) {
  const auto meas = sample(make_phantom(64), MaskKind::radial, 0.3, 7);
  SolverConfig c;
  c.outer_iters = 25;
  const auto res = reconstruct_subspaces(decompose(meas, build_identity(64), {c}), fcsa);
  EXPECT_EQ(res[0].image, fcsa(meas, c).image);
}

TEST(ReconstructSubspaces, ErrorsCarrySubspaceLabel) {
  const auto meas = sample(random_image(16, 2), MaskKind::random2d, 0.5, 1);
  Solver failing = [](const Measurement&, const SolverConfig& c) -> SolveResult {
    if (c.alpha > 0.0025) throw NumericError("boom");
    return {};
  };
  try {
    reconstruct_subspaces(decompose(meas, build_horivert(16)), failing, 2);
    FAIL() << "expected an error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("vert_high"), std::string::npos) << e.what();
  }
}

TEST(IntegrateSum, RecoversImageFromExactSubspaces) {
  const auto x = random_image(64, 6);
  const auto g = build_gaussian(64);
  EXPECT_LE(rel_err(integrate_sum(exact_subspaces(x, g), g, {0, 1}), x), 1e-10);
  const auto hv = build_horivert(64);
  const auto parts = exact_subspaces(x, hv);
  EXPECT_LE(rel_err(integrate_sum(parts, hv, {0, 2}), x), 1e-10);
  EXPECT_LE(rel_err(integrate_sum(parts, hv, {1, 3}), x), 1e-10);
}

TEST(IntegrateSum, RejectsNonPartitionGroups) {
  const auto hv = build_horivert(16);
  const auto parts = exact_subspaces(random_image(16, 1), hv);
  EXPECT_THROW(integrate_sum(parts, hv, {0, 1, 2, 3}), ConfigError);
  EXPECT_THROW(integrate_sum(parts, hv, {0, 1}), ConfigError);
}

TEST(IntegrateTikhonov, RecoversImageForAnyPositiveWeights) {
  const auto x = random_image(64, 8);
  SplitMix64 rng(3);
  for (const auto& bank : {build_horivert(64), build_gaussian(64)}) {
    const auto parts = exact_subspaces(x, bank);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> w;
      for (std::size_t i = 0; i < bank.size(); ++i) w.push_back(0.05 + rng.uniform());
      EXPECT_LE(rel_err(integrate_tikhonov(parts, bank, w), x), 1e-10) << bank.name;
    }
  }
}

TEST(IntegrateTikhonov, IdentityFusionReturnsInput) {
  const auto x = random_image(16, 9);
  EXPECT_EQ(integrate_tikhonov({x}, build_identity(16), {1.0}), x);
}

TEST(IntegrateTikhonov, OneSidedGaussianWeightsDeconvolve) {
  const std::size_t n = 32;
  const auto bank = build_gaussian(n);
  const auto x_lp = random_image(n, 10);
  const auto x_hp = random_image(n, 11);
  const auto fused = integrate_tikhonov({x_lp, x_hp}, bank, {1.0, 0.0});
  // Reference: conj(G) X / max(|G|^2, floor), element by element.
  const auto X = fft2(x_lp);
  Spectrum expect(n);
  for (std::size_t k = 0; k < X.size(); ++k) {
    const Complex g = bank.responses[0][k];
    expect[k] = std::conj(g) * X[k] / std::max(std::norm(g), 1e-12);
  }
  EXPECT_LE(rel_err(fused, ifft2(expect)), 1e-12);
}

TEST(IntegrateTikhonov, RejectsBadWeights) {
  const auto bank = build_gaussian(16);
  const auto parts = exact_subspaces(random_image(16, 1), bank);
  EXPECT_THROW(integrate_tikhonov(parts, bank, {0.0, 0.0}), ConfigError);
  EXPECT_THROW(integrate_tikhonov(parts, bank, {-1.0, 1.0}), ConfigError);
  EXPECT_THROW(integrate_tikhonov(parts, bank, {1.0}), DimensionError);
}

TEST(UpdateLambda, ExactSubspacesFreezeWeights) {
  const auto x = random_image(32, 12);
  const auto bank = build_horivert(32);
  const std::vector<double> prev{0.1, 0.2, 0.3, 0.9};
  const auto u = update_lambda(x, exact_subspaces(x, bank), bank, prev);
  EXPECT_TRUE(u.converged);
  EXPECT_EQ(u.weights, prev);
}

TEST(UpdateLambda, NormalizesSquaredResiduals) {
  const std::size_t n = 8;
  const auto bank = twin_identity(n);
  ComplexImage a(n), b(n);
  a(0, 0) = std::sqrt(3.0);
  b(2, 5) = Complex{0.0, 2.0};
  const auto u = update_lambda(ComplexImage(n), {a, b}, bank);
  EXPECT_FALSE(u.converged);
  EXPECT_NEAR(u.residuals[0], 3.0, 1e-12);
  EXPECT_NEAR(u.residuals[1], 4.0, 1e-12);
  EXPECT_NEAR(u.weights[0], 0.6, 1e-12);
  EXPECT_NEAR(u.weights[1], 0.8, 1e-12);
}

TEST(UpdateLambda, AlwaysUnitNonNegative) {
  const auto bank = build_horivert(16);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::vector<ComplexImage> imgs;
    for (std::size_t i = 0; i < 4; ++i) imgs.push_back(random_image(16, seed * 10 + i));
    const auto u = update_lambda(random_image(16, seed), imgs, bank);
    double s = 0.0;
    for (double w : u.weights) {
      EXPECT_GE(w, 0.0);
      s += w * w;
    }
    EXPECT_NEAR(std::sqrt(s), 1.0, 1e-12);
  }
}

TEST(DacReconstruct, IdentityBankIsBaseSolverBitForBit) {
  const auto meas = sample(make_phantom(64), MaskKind::random2d, 0.3, 7);
  SolverConfig c;
  c.outer_iters = 30;
  const auto rep = dac_reconstruct(meas, build_identity(64), fcsa, {c});
  EXPECT_EQ(rep.image, fcsa(meas, c).image);
  EXPECT_EQ(rep.outer_iterations, 1);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.selected_iteration, 1);
}

TEST(DacReconstruct, FullMaskZeroFillGaussianIsLossless) {
  const auto x = random_image(64, 13);
  const auto rep = dac_reconstruct(undersample(x, test::full_mask(64)), build_gaussian(64), zero_fill_solver);
  EXPECT_LE(rel_err(rep.image, x), 1e-10);
}

TEST(DacReconstruct, HistoriesAreConsistent) {
  const auto meas = sample(make_phantom(64), MaskKind::cartesian, 0.4, 7);
  const auto bank = build_horivert(64);
  auto cfgs = default_configs(bank);
  for (auto& c : cfgs) c.outer_iters = 10;
  const auto rep = dac_reconstruct(meas, bank, fcsa, cfgs, LoopParams{4, 0.0});
  EXPECT_EQ(rep.outer_iterations, 4);
  EXPECT_EQ(rep.lambda_history.size(), 5U);
  EXPECT_EQ(rep.rel_change_history.size(), 4U);
  EXPECT_EQ(rep.minimax_history.size(), 4U);
  EXPECT_EQ(rep.subspace_images.size(), 4U);
  EXPECT_EQ(rep.traces.size(), 4U);
  for (double w : rep.lambda_history.front()) EXPECT_DOUBLE_EQ(w, 0.5);
  // The returned image is the fused iterate with the smallest minimax value.
  const auto best = std::min_element(rep.minimax_history.begin(), rep.minimax_history.end());
  EXPECT_EQ(rep.selected_iteration, 1 + static_cast<int>(best - rep.minimax_history.begin()));
  const auto u = update_lambda(rep.image, rep.subspace_images, bank);
  double v = 0.0;
  for (double r : u.residuals) v += r * r;
  EXPECT_NEAR(std::sqrt(v), *best, 1e-9 * *best);
}

TEST(DacReconstruct, FirstIterateIsUniformFusion) {
  const auto meas = sample(make_phantom(64), MaskKind::radial, 0.3, 7);
  const auto bank = build_gaussian(64);
  auto cfgs = default_configs(bank);
  for (auto& c : cfgs) c.outer_iters = 10;
  const auto rep = dac_reconstruct(meas, bank, fcsa, cfgs, LoopParams{1, 0.0});
  const double w = 1.0 / std::sqrt(2.0);
  EXPECT_EQ(rep.image, integrate_tikhonov(rep.subspace_images, bank, {w, w}));
}

TEST(DacReconstruct, RejectsBadLoopParams) {
  const auto meas = sample(random_image(16, 1), MaskKind::random2d, 0.5, 1);
  EXPECT_THROW(dac_reconstruct(meas, build_gaussian(16), zero_fill_solver, {}, LoopParams{0, 1e-6}), ConfigError);
  EXPECT_THROW(dac_reconstruct(meas, build_gaussian(16), zero_fill_solver, {}, LoopParams{3, -1.0}), ConfigError);
}

TEST(DacReconstruct, ThreadCountFromEnvironment) {
  ::setenv("KDAC_THREADS", "3", 1);
  EXPECT_EQ(default_thread_count(), 3U);
  ::setenv("KDAC_THREADS", "zero", 1);
  EXPECT_GE(default_thread_count(), 1U);
  ::unsetenv("KDAC_THREADS");
}
