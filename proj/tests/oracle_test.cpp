#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace rpca;
using rpca::testing::points_with_moment;
using rpca::testing::random_psd;

namespace {

DenseMatrix reconstruct(const oracle::DenseSpectrum& s) {
  return oracle::spectral_function(s, [](double l) { return l; });
}

double fro_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return std::sqrt(s);
}

}  // namespace

TEST(DenseSpectrum, Diagonal) {
  const auto s = oracle::dense_spectrum(DenseMatrix::diagonal(Vector{1, 3, 2}));
  EXPECT_EQ(s.eigenvalues, (Vector{3, 2, 1}));
  EXPECT_NEAR(std::abs(s.vector(0)[1]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.vector(1)[2]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.vector(2)[0]), 1.0, 1e-15);
}

TEST(DenseSpectrum, RotatedDiagonal) {
  const double th = 0.3;
  DenseMatrix r(2, 2);
  r(0, 0) = std::cos(th);
  r(0, 1) = -std::sin(th);
  r(1, 0) = std::sin(th);
  r(1, 1) = std::cos(th);
  const auto a = r * DenseMatrix::diagonal(Vector{3, 1}) * transpose(r);
  const auto s = oracle::dense_spectrum(a);
  EXPECT_NEAR(s.eigenvalues[0], 3.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues[1], 1.0, 1e-12);
  const auto v = s.vector(0);
  EXPECT_NEAR(std::abs(dot(v, r.column(0))), 1.0, 1e-8);
}

TEST(DenseSpectrum, Identity) {
  for (double l : oracle::dense_spectrum(DenseMatrix::identity(7)).eigenvalues) EXPECT_DOUBLE_EQ(l, 1.0);
}

TEST(DenseSpectrum, RejectsAsymmetricAndOversized) {
  DenseMatrix a = DenseMatrix::identity(3);
  a(0, 2) = 1.0;
  EXPECT_THROW(oracle::dense_spectrum(a), InvalidArgument);
  EXPECT_THROW(oracle::dense_spectrum(DenseMatrix(257, 257)), InvalidArgument);
  EXPECT_THROW(oracle::dense_spectrum(DenseMatrix(2, 3)), InvalidArgument);
}

TEST(DenseSpectrum, ReconstructionAndConvergence) {
  Rng rng(1);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t d = 2 + rng() % 30;
    const auto a = random_psd(d, rng);
    const auto s = oracle::dense_spectrum(a);
    EXPECT_LE(fro_diff(reconstruct(s), a), 1e-8 * a.frobenius_norm());
    const auto diag = transpose(s.eigenvectors) * a * s.eigenvectors;
    EXPECT_LE(std::sqrt(oracle::off_diagonal_norm_sq(diag)), 1e-12 * a.frobenius_norm());
    const auto vtv = transpose(s.eigenvectors) * s.eigenvectors;
    EXPECT_LE(fro_diff(vtv, DenseMatrix::identity(d)), 1e-12 * static_cast<double>(d));
    for (std::size_t j = 1; j < d; ++j) EXPECT_GE(s.eigenvalues[j - 1], s.eigenvalues[j]);
  }
}

TEST(DenseSpectrum, AgreesWithPowerIteration) {
  Rng rng(2);
  const double gamma = 0.1;
  AlgoConfig cfg;
  cfg.eps = 0.005;
  cfg.gamma = gamma;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 3 + rng() % 20;
    const auto a = random_psd(d, rng);
    const int p = cfg.reference_power(d, 0.01);
    const double lam = oracle::top_eigenvalue(a);
    const double r = power_iteration(a, p, rng).rayleigh;
    EXPECT_GE(r, (1.0 - gamma) * lam);
    EXPECT_LE(r, lam * (1 + 1e-12));
  }
}

TEST(ApproxRatio, Examples) {
  const auto sigma = DenseMatrix::diagonal(Vector{10, 1});
  EXPECT_DOUBLE_EQ(oracle::metric_approx_ratio(Vector{1, 0}, sigma), 1.0);
  EXPECT_DOUBLE_EQ(oracle::metric_approx_ratio(Vector{0, 1}, sigma), 0.1);
  EXPECT_THROW(oracle::metric_approx_ratio(Vector{1, 1}, sigma), InvalidArgument);
  EXPECT_THROW(oracle::metric_approx_ratio(Vector{1, 0}, DenseMatrix(2, 2)), InvalidArgument);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = random_psd(6, rng);
    const auto u = normalized(gaussian_vector(6, rng));
    const double direct = dot(u, s.apply(u)) / oracle::top_eigenvalue(s);
    const double r = oracle::metric_approx_ratio(u, s);
    EXPECT_NEAR(r, direct, 1e-12);
    EXPECT_LE(r, 1.0 + 1e-9);
    EXPECT_GE(r, 0.0);
  }
}

TEST(StoppingCondition, HoldsWithoutCorruption) {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const auto b = random_psd(5, rng);
    const WeightedDataset ds(points_with_moment(b));
    const auto sigma = oracle::dense_second_moment(ds, true);
    EXPECT_TRUE(oracle::stopping_condition_truth(sigma, ds, 10, 1e-3).holds);
  }
}

TEST(StoppingCondition, FailsWhenOneAxisIsInflated) {
  const auto sigma = DenseMatrix::diagonal(Vector{1, 1, 0.5, 0.5});
  const auto inflated = DenseMatrix::diagonal(Vector{1, 1, 2.0, 0.5});
  const WeightedDataset ds(points_with_moment(inflated));
  EXPECT_FALSE(oracle::stopping_condition_truth(sigma, ds, 20, 1e-4).holds);
}

// Small potential forces the stopping condition (forward direction, dense check).
TEST(StoppingCondition, SmallPotentialImpliesCondition) {
  Rng rng(5);
  const double gamma = 0.002;
  const int p = 20;
  int checked = 0;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 5000 && checked < 200; ++attempt) {
    const std::size_t d = 3 + rng() % 8;
    auto sigma = random_psd(d, rng);
    const double top = oracle::top_eigenvalue(sigma);
    for (double& x : sigma.data) x /= top;
    // survivors: a slightly shrunk copy of Sigma plus a rank-one outlier term
    DenseMatrix b = sigma;
    for (double& x : b.data) x *= 1.0 - gamma;
    b.add_outer(0.3 * u01(rng), normalized(gaussian_vector(d, rng)));
    const WeightedDataset ds(points_with_moment(b));
    const double lhs = oracle::log_trace_power(b, 2 * p + 1);
    const double rhs = 2.0 * p * std::log(1.0 - 2.0 * gamma) - std::log(1.0 - 250.0 * gamma);
    if (lhs > rhs) continue;
    ++checked;
    EXPECT_TRUE(oracle::stopping_condition_truth(sigma, ds, p, gamma).holds);
  }
  EXPECT_EQ(checked, 200);
}

TEST(Potential, LogTracePower) {
  EXPECT_NEAR(std::exp(oracle::log_trace_power(DenseMatrix::diagonal(Vector{2, 1}), 3)), 9.0, 1e-12);
  EXPECT_TRUE(std::isinf(oracle::log_trace_power(DenseMatrix(2, 2), 3)));
}

TEST(StabilitySpotcheck, GaussianPasses) {
  const double eps = 0.05, gamma = 3.0 * eps * std::log(1.0 / eps);
  Rng rng(6);
  InlierSpec spec;
  spec.dim = 5;
  const auto pts = gen_inliers(spec, 20000, rng);
  EXPECT_LE(oracle::stability_spotcheck(pts, DenseMatrix::identity(5), eps, gamma, 20, rng), 1.0 + 1.5 * gamma);
}

TEST(StabilitySpotcheck, NoDeletionsMeasuresSamplingError) {
  Rng rng(7);
  InlierSpec spec;
  spec.dim = 4;
  const auto pts = gen_inliers(spec, 20000, rng);
  const double w = oracle::stability_spotcheck(pts, DenseMatrix::identity(4), 1e-6, 0.01, 10, rng);
  EXPECT_GE(w, 1.0);
  EXPECT_LE(w, 1.06);
}

TEST(DenseSecondMoment, NormalizedDividesBySurvivingMass) {
  WeightedDataset ds(rpca::testing::rows({{1, 0}, {0, 2}, {5, 5}}), FilterStack(10.0));
  const auto un = oracle::dense_second_moment(ds, false);
  const auto no = oracle::dense_second_moment(ds, true);
  EXPECT_NEAR(un(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(no(1, 1), 2.0, 1e-15);
  EXPECT_NEAR(no(0, 1), 0.0, 1e-15);
}
