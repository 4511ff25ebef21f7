#include <gtest/gtest.h>

#include "kdac/metrics.hpp"
#include "kdac/phantom.hpp"
#include "kdac/solvers.hpp"
#include "support.hpp"

using namespace kdac;
using kdac::test::random_image;
using kdac::test::rel_err;

namespace {

// 64x64 crop of the phantom that holds the low-contrast disks.
ComplexImage phantom_crop() {
  const auto p = make_phantom(256);
  ComplexImage crop(64);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) crop(i, j) = p(128 + i, 64 + j);
  return crop;
}

double full_kspace_residual(const ComplexImage& x, const Spectrum& full) {
  const auto s = fft2(x);
  double e = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) e += std::norm(s[k] - full[k]);
  return std::sqrt(e);
}

}  // namespace

TEST(SoftThreshold, AnalyticCases) {
  EXPECT_NEAR(std::abs(soft_threshold(0.5, 0.2) - Complex{0.3, 0.0}), 0.0, 1e-15);
  EXPECT_EQ(soft_threshold(0.1, 0.2), Complex{});
  EXPECT_NEAR(std::abs(soft_threshold(Complex{3.0, 4.0}, 2.5) - Complex{1.5, 2.0}), 0.0, 1e-15);
  EXPECT_EQ(soft_threshold(Complex{-2.0, 0.0}, 0.0), Complex(-2.0, 0.0));
}

TEST(SolverConfig, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.effective_step(), 0.5);
  c.mu = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.step = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.outer_iters = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DataTerm, GradientMatchesCentralDifferences) {
  const std::size_t n = 8;
  for (std::uint64_t seed : {1U, 2U, 3U}) {
    const auto m = generate_mask(MaskKind::random2d, 0.4, n, seed);
    const auto meas = undersample(random_image(n, seed + 10), m);
    const auto x = random_image(n, seed + 20);
    const double mu = 1.7;
    const auto g = data_gradient(x, meas, mu);
    const double h = 1e-6;
    double err = 0.0, ref = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (const Complex dir : {Complex{1.0, 0.0}, Complex{0.0, 1.0}}) {
        ComplexImage a(x), b(x);
        a[k] += h * dir;
        b[k] -= h * dir;
        const double fd = (data_fidelity(a, meas, mu) - data_fidelity(b, meas, mu)) / (2.0 * h);
        const double an = dir.real() != 0.0 ? g[k].real() : g[k].imag();
        err += (fd - an) * (fd - an);
        ref += an * an;
      }
    }
    EXPECT_LE(std::sqrt(err / ref), 1e-6) << "seed " << seed;
  }
}

TEST(ZeroFillSolver, FullMaskAndDcOnly) {
  const auto x = random_image(16, 4);
  EXPECT_LE(rel_err(zero_fill_solver(undersample(x, test::full_mask(16))).image, x), 1e-12);
  Grid<std::uint8_t> bits(16, 0);
  bits(0, 0) = 1;
  const auto c = test::constant_image(16, Complex{0.3, 0.1});
  EXPECT_LE(rel_err(zero_fill_solver(undersample(c, mask_from_bits(bits))).image, c), 1e-12);
}

TEST(ZeroFillSolver, RemeasuringIsIdempotent) {
  const auto m = generate_mask(MaskKind::cartesian, 0.3, 32, 2);
  const auto meas = undersample(random_image(32, 5), m);
  const auto again = undersample(zero_fill_solver(meas).image, m);
  EXPECT_LE(rel_err(again.spec, meas.spec), 1e-12);
}

TEST(FistaL1, SmoothCaseRecoversExactly) {
  const auto x = random_image(32, 6);
  SolverConfig c;
  c.alpha = 0.0;
  c.beta = 0.0;
  c.tol = 0.0;
  c.outer_iters = 20;
  EXPECT_LE(rel_err(fista_l1(undersample(x, test::full_mask(32)), c).image, x), 1e-8);
}

TEST(FistaL1, ReturnsIterateNoWorseThanZeroFill) {
  const auto m = generate_mask(MaskKind::random2d, 0.3, 64, 3);
  const auto meas = undersample(phantom_crop(), m);
  SolverConfig c;
  c.beta = 0.01;
  c.outer_iters = 30;
  const auto r = fista_l1(meas, c);
  SolverConfig obj = c;
  obj.alpha = 0.0;
  EXPECT_LE(objective(r.image, meas, obj), objective(zero_fill(meas), meas, obj));
  EXPECT_EQ(r.trace.objective.size(), static_cast<std::size_t>(r.trace.iterations) + 1);
}

// Pinned once: residual against the complete k-space relative to zero-filling.
TEST(FistaL1, PhantomCropRegression) {
  const auto crop = phantom_crop();
  const auto meas = undersample(crop, generate_mask(MaskKind::random2d, 0.5, 64, 7));
  SolverConfig c;
  c.mu = 2.0;
  c.beta = 1e-3;
  const auto r = fista_l1(meas, c);
  const auto full = fft2(crop);
  const double ratio = full_kspace_residual(r.image, full) / full_kspace_residual(zero_fill(meas), full);
  EXPECT_NEAR(ratio, 0.2036329544873213, 0.01 * 0.2036329544873213);
}

TEST(Fcsa, SmoothCaseRecoversExactly) {
  const auto x = random_image(32, 7);
  SolverConfig c;
  c.alpha = 0.0;
  c.beta = 0.0;
  EXPECT_LE(rel_err(fcsa(undersample(x, test::full_mask(32)), c).image, x), 1e-8);
}

TEST(Fcsa, WithoutTvMatchesFistaL1) {
  const auto meas = undersample(phantom_crop(), generate_mask(MaskKind::radial, 0.3, 64, 7));
  SolverConfig c;
  c.alpha = 0.0;
  c.beta = 0.002;
  c.outer_iters = 40;
  EXPECT_LE(rel_err(fcsa(meas, c).image, fista_l1(meas, c).image), 1e-6);
}

TEST(Fcsa, BestObjectiveNonIncreasingInIterations) {
  const auto meas = undersample(phantom_crop(), generate_mask(MaskKind::random2d, 0.25, 64, 9));
  double prev = std::numeric_limits<double>::infinity();
  for (int iters : {1, 5, 10, 20, 40}) {
    SolverConfig c;
    c.outer_iters = iters;
    c.tol = 0.0;
    const double obj = objective(fcsa(meas, c).image, meas, c);
    EXPECT_LE(obj, prev) << iters;
    prev = obj;
  }
}

TEST(Fcsa, DivergenceIsReported) {
  const auto meas = undersample(random_image(16, 2), generate_mask(MaskKind::random2d, 0.5, 16, 1));
  SolverConfig c;
  c.mu = 1e7;  // step 1 against a Lipschitz constant of 1e7
  c.step = 1.0;
  c.beta = 0.1;  // moves the iterate off the measured data so the gradient is nonzero
  c.alpha = 0.0;
  EXPECT_THROW(fcsa(meas, c), NumericError);
}

TEST(Fcsa, PhantomRadialBeatsZeroFill) {
  const auto p = make_phantom(256);
  const auto meas = undersample(p, generate_mask(MaskKind::radial, 0.30, 256, 7));
  const double s = ssim(p, fcsa(meas, SolverConfig{}).image);
  EXPECT_GT(s, ssim(p, zero_fill(meas)));
  EXPECT_NEAR(s, 0.99309182387501971, 0.01 * 0.99309182387501971);
}

TEST(TvProx, NonExpansive) {
  for (std::uint64_t seed : {1U, 2U, 3U, 4U}) {
    const auto a = random_image(16, seed);
    const auto b = random_image(16, seed + 50);
    const auto pa = tv_prox(a, 0.1, 10);
    const auto pb = tv_prox(b, 0.1, 10);
    double d = 0.0, dp = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      d += std::norm(a[k] - b[k]);
      dp += std::norm(pa[k] - pb[k]);
    }
    EXPECT_LE(std::sqrt(dp), std::sqrt(d) + 1e-8);
  }
}

TEST(Solvers, MakeSolverDispatch) {
  const auto meas = undersample(random_image(16, 3), generate_mask(MaskKind::random2d, 0.5, 16, 1));
  SolverConfig c;
  c.outer_iters = 3;
  EXPECT_EQ(make_solver(SolverKind::zero_fill)(meas, c).image, zero_fill(meas));
  EXPECT_EQ(make_solver(SolverKind::fcsa)(meas, c).image, fcsa(meas, c).image);
  EXPECT_EQ(make_solver(SolverKind::fista_l1)(meas, c).image, fista_l1(meas, c).image);
  EXPECT_EQ(parse_solver_kind("fcsa"), SolverKind::fcsa);
  EXPECT_FALSE(parse_solver_kind("admm").has_value());
}
