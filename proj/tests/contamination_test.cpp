#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "test_support.hpp"

using namespace rpca;

namespace {

DenseMatrix empirical_second_moment(const PointSet& ps) { return oracle::dense_second_moment(ps); }

double op_norm_diff(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  const auto s = oracle::dense_spectrum(c);
  return std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
}

}  // namespace

TEST(Inliers, IdentityCovarianceConcentrates) {
  InlierSpec spec;
  spec.dim = 3;
  Rng rng(1);
  const auto pts = gen_inliers(spec, 100000, rng);
  EXPECT_LE(op_norm_diff(empirical_second_moment(pts), DenseMatrix::identity(3)), 0.05);
}

TEST(Inliers, SingleSampleIsLabeledInlier) {
  Rng rng(2);
  const auto pts = gen_inliers(InlierSpec::spiked_identity(4, 0, 1.0), 1, rng);
  EXPECT_EQ(pts.size(), 1u);
  EXPECT_EQ(pts.label(0), Label::Inlier);
  EXPECT_THROW(gen_inliers(InlierSpec::spiked_identity(4, 0, 1.0), 0, rng), InvalidArgument);
}

TEST(Inliers, SpikeVariance) {
  Rng rng(3);
  const auto pts = gen_inliers(InlierSpec::spiked_identity(10, 0, 9.0), 20000, rng);
  const double v = empirical_second_moment(pts)(0, 0);
  EXPECT_NEAR(v, 10.0, 0.5);
}

TEST(Inliers, BoundedFamilyMatchesCovarianceAndRadius) {
  auto spec = InlierSpec::spiked_identity(6, 2, 3.0, InlierFamily::BoundedSphereMix);
  spec.base_diag = {1, 2, 1, 0.5, 1, 1};
  const auto sigma = spec.covariance();
  const double top = oracle::top_eigenvalue(sigma);
  Rng rng(4);
  const auto pts = gen_inliers(spec, 100000, rng);
  EXPECT_LE(op_norm_diff(empirical_second_moment(pts), sigma), 0.05 * top);
  const double bound = spec.radius_r() * std::sqrt(6.0 * top);
  for (std::size_t i = 0; i < pts.size(); ++i) ASSERT_LE(norm(pts[i]), bound * (1 + 1e-12));
}

TEST(InlierSpec, RejectsBadSpecs) {
  InlierSpec s;
  EXPECT_THROW(s.validate(), InvalidArgument);
  s.dim = 2;
  s.base_diag = {1.0, -1.0};
  EXPECT_THROW(s.covariance(), InvalidArgument);
  s.base_diag.clear();
  s.spikes.push_back({Vector{0.0, 0.0}, 1.0});
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(StrongContaminate, RateZeroIsIdentity) {
  Rng rng(5);
  const auto spec = InlierSpec::spiked_identity(5, 0, 1.0);
  const auto clean = gen_inliers(spec, 100, rng);
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = 0.0;
  const auto out = strong_contaminate(clean, adv, spec.covariance(), rng);
  EXPECT_EQ(out.coords(), clean.coords());
  EXPECT_EQ(out.labels(), clean.labels());
}

TEST(StrongContaminate, ExactReplacementCount) {
  Rng rng(6);
  const auto spec = InlierSpec::spiked_identity(5, 0, 1.0);
  for (std::size_t n : {1u, 19u, 20u, 999u, 1000u}) {
    const auto clean = gen_inliers(spec, n, rng);
    for (auto kind : {AdversaryKind::OrthogonalSpike, AdversaryKind::MultiDirectionHide}) {
      AdversarySpec adv;
      adv.kind = kind;
      adv.rate = 0.05;
      const auto out = strong_contaminate(clean, adv, spec.covariance(), rng);
      std::size_t outliers = 0;
      for (std::size_t i = 0; i < n; ++i) outliers += out.label(i) == Label::Outlier;
      EXPECT_EQ(outliers, static_cast<std::size_t>(std::floor(0.05 * n)));
    }
  }
  AdversarySpec bad;
  bad.kind = AdversaryKind::OrthogonalSpike;
  bad.rate = 0.5;
  EXPECT_THROW(strong_contaminate(gen_inliers(spec, 10, rng), bad, spec.covariance(), rng), InvalidArgument);
}

TEST(StrongContaminate, OrthogonalSpikeFoolsNaivePca) {
  const std::size_t d = 50;
  const auto spec = InlierSpec::spiked_identity(d, 0, 9.0);
  const auto sigma = spec.covariance();
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = 0.05;
  Rng rng(7);
  const auto data = strong_contaminate(gen_inliers(spec, 20000, rng), adv, sigma, rng);
  const auto s = oracle::dense_spectrum(empirical_second_moment(data));
  const auto top = s.vector(0);
  EXPECT_LE(oracle::metric_approx_ratio(top, sigma), 0.3);
  EXPECT_GE(std::abs(top[1]), 0.99);  // smallest-variance axis ties broken by index: e2
}

TEST(StrongContaminate, MultiDirectionHideSpreadsEvenly) {
  const std::size_t d = 8;
  auto spec = InlierSpec::spiked_identity(d, 0, 4.0);
  spec.base_diag = {1, 1, 1, 1, 1, 0.5, 0.2, 0.3};
  AdversarySpec adv;
  adv.kind = AdversaryKind::MultiDirectionHide;
  adv.rate = 0.1;
  adv.hidden_dirs = 3;
  Rng rng(8);
  const auto data = strong_contaminate(gen_inliers(spec, 3000, rng), adv, spec.covariance(), rng);
  std::array<int, 8> hits{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.label(i) != Label::Outlier) continue;
    for (std::size_t j = 0; j < d; ++j)
      if (data[i][j] != 0.0) ++hits[j];
  }
  EXPECT_EQ(hits[6] + hits[7] + hits[5], 300);
  EXPECT_LE(std::abs(hits[6] - hits[7]), 2);
  EXPECT_LE(std::abs(hits[6] - hits[5]), 2);
}

TEST(StrongContaminate, SchattenBlindFlattensSecondMoment) {
  // true Sigma: projection of rank 32 in d = 40; corrupted second moment ~ (1 - eps) I
  const std::size_t d = 40, r = 32;
  InlierSpec spec;
  spec.dim = d;
  spec.base_diag.assign(d, 0.0);
  for (std::size_t i = 0; i < r; ++i) spec.base_diag[i] = 1.0;
  AdversarySpec adv;
  adv.kind = AdversaryKind::SchattenBlind;
  adv.rate = 0.05;
  Rng rng(9);
  const auto data = strong_contaminate(gen_inliers(spec, 40000, rng), adv, spec.covariance(), rng);
  const auto m = empirical_second_moment(data);
  const auto s = oracle::dense_spectrum(m);
  EXPECT_LE(s.eigenvalues.front(), 1.1);
  EXPECT_GE(s.eigenvalues.back(), 0.8);
  AdversarySpec full = adv;
  EXPECT_THROW(OutlierPlacer(full, DenseMatrix::identity(4)), InvalidArgument);
}

TEST(StrongContaminate, CallbackAdversarySeesCleanSet) {
  Rng rng(10);
  const auto spec = InlierSpec::spiked_identity(3, 0, 1.0);
  const auto clean = gen_inliers(spec, 100, rng);
  const auto out = strong_contaminate(
      clean, 0.1,
      [](const PointSet& c, std::span<const std::size_t> idx, std::vector<double>& rep, Rng&) {
        for (std::size_t k = 0; k < idx.size(); ++k)
          for (std::size_t j = 0; j < c.dim(); ++j) rep[k * c.dim() + j] = -3.0 * c[idx[k]][j];
      },
      rng);
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (out.label(i) != Label::Outlier) continue;
    ++flipped;
    EXPECT_DOUBLE_EQ(out[i][0], -3.0 * clean[i][0]);
  }
  EXPECT_EQ(flipped, 10u);
}

TEST(TvSource, OutlierFraction) {
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = 0.1;
  auto src = tv_contaminated_source(InlierSpec::spiked_identity(5, 0, 1.0), adv, 11);
  Vector x(5);
  int outliers = 0;
  for (int i = 0; i < 100000; ++i) {
    ASSERT_TRUE(src->next(x));
    outliers += src->last_label() == Label::Outlier;
  }
  EXPECT_GE(outliers, 9400);
  EXPECT_LE(outliers, 10600);
  EXPECT_EQ(src->origin(), SourceOrigin::Synthetic);
}

TEST(TvSource, MixtureSecondMoment) {
  const std::size_t d = 5;
  const auto spec = InlierSpec::spiked_identity(d, 0, 2.0);
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = 0.05;
  auto src = tv_contaminated_source(spec, adv, 12);
  const OutlierPlacer placer(adv, spec.covariance());
  DenseMatrix expect = spec.covariance();
  for (double& v : expect.data) v *= 1.0 - adv.rate;
  const double a = placer.amplitude();
  expect.add_outer(adv.rate * a * a, placer.targets().front());
  DenseMatrix emp(d, d);
  Vector x(d);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    src->next(x);
    emp.add_outer(1.0 / n, x);
  }
  EXPECT_LE(op_norm_diff(emp, expect), 0.05 * oracle::top_eigenvalue(expect));
}

TEST(TvSource, RateZeroIsInlierStream) {
  auto src = tv_contaminated_source(InlierSpec::spiked_identity(4, 0, 1.0), AdversarySpec{}, 13);
  Vector x(4);
  for (int i = 0; i < 1000; ++i) {
    src->next(x);
    EXPECT_EQ(src->last_label(), Label::Inlier);
  }
}
