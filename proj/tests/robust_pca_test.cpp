#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace rpca;
using rpca::testing::rows;

namespace {

PointSet spiked_contaminated(std::size_t d, std::size_t n, double eps, Rng& rng) {
  const auto spec = InlierSpec::spiked_identity(d, 0, 9.0);
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = eps;
  return strong_contaminate(gen_inliers(spec, n, rng), adv, spec.covariance(), rng);
}

}  // namespace

TEST(Potential, DiagonalCube) {
  WeightedDataset ds(rows({{2, 0}, {0, std::sqrt(2.0)}}));
  EXPECT_NEAR(potential_diagnostic(ds, 1), 9.0, 1e-9);
}

TEST(Potential, IdentityGivesDimension) {
  const std::size_t d = 6;
  std::vector<Vector> r;
  for (std::size_t i = 0; i < d; ++i) {
    Vector e = unit_vector(d, i);
    scale_in_place(e, std::sqrt(static_cast<double>(d)));
    r.push_back(e);
    scale_in_place(e, -1.0);
    r.push_back(e);
  }
  WeightedDataset ds(PointSet::from_rows(r));
  for (int p : {1, 3, 10}) EXPECT_NEAR(potential_diagnostic(ds, p), static_cast<double>(d), 1e-9);
}

TEST(Potential, RefusesLargeDimension) {
  Rng rng(1);
  WeightedDataset ds(rpca::testing::gaussian_points(100, 65, rng));
  EXPECT_THROW(potential_diagnostic(ds, 1), UnsupportedDiagnostic);
}

TEST(RobustPca, RejectsBadGamma) {
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 0.5;
  Rng rng(1);
  EXPECT_THROW(robust_pca(rows({{1, 0}}), cfg, rng), InvalidArgument);
}

TEST(RobustPca, SinglePoint) {
  AlgoConfig cfg;
  Rng rng(2);
  const auto res = robust_pca(rows({{1, 0, 0}}), cfg, rng);
  EXPECT_EQ(res.status, PcaStatus::Accepted);
  EXPECT_NEAR(std::abs(res.u[0]), 1.0, 1e-12);
}

TEST(RobustPca, CleanDataNoCorruption) {
  const std::size_t d = 20;
  const auto spec = InlierSpec::spiked_identity(d, 0, 9.0);
  AlgoConfig cfg;
  cfg.eps = 0.0;
  cfg.gamma = 0.05;
  int good = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto pts = gen_inliers(spec, 4000, rng);
    const auto res = robust_pca(pts, cfg, rng);
    good += res.status == PcaStatus::Accepted && oracle::metric_approx_ratio(res.u, spec.covariance()) * 10.0 >= 9.0;
  }
  EXPECT_GE(good, 19);
}

TEST(RobustPca, OrthogonalSpikeBeatsNaive) {
  const std::size_t d = 50;
  const auto sigma = InlierSpec::spiked_identity(d, 0, 9.0).covariance();
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 1.0;
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    const auto data = spiked_contaminated(d, 20000, 0.05, rng);
    const auto res = robust_pca(data, cfg, rng);
    EXPECT_GE(oracle::metric_approx_ratio(res.u, sigma), 0.85);
    EXPECT_LE(oracle::metric_approx_ratio(naive_pca(data, 100, rng), sigma), 0.3);
    EXPECT_GE(res.filters_created, 1);
  }
}

TEST(RobustPca, PotentialNeverIncreasesWithinAStage) {
  const std::size_t d = 16;
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 1.0;
  cfg.c_acc = 0.0;  // never accept, so every iteration filters
  cfg.t_end = 15;
  cfg.k_end = 2;
  cfg.record_potential = true;
  for (int seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const auto data = spiked_contaminated(d, 3000, 0.05, rng);
    std::vector<TraceEvent> events;
    robust_pca(data, cfg, rng, [&](const TraceEvent& e) { events.push_back(e); });
    ASSERT_FALSE(events.empty());
    for (std::size_t i = 1; i < events.size(); ++i) {
      if (events[i].k != events[i - 1].k) continue;
      EXPECT_LE(events[i].log_potential, events[i - 1].log_potential + 1e-12);
    }
  }
}

TEST(RobustPca, ScalingEquivariance) {
  const std::size_t d = 20;
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 1.0;
  Rng gen(9);
  const auto data = spiked_contaminated(d, 4000, 0.05, gen);
  const auto scaled = data.scaled(7.3);
  Rng a(1), b(1);
  const auto ra = robust_pca(data, cfg, a);
  const auto rb = robust_pca(scaled, cfg, b);
  EXPECT_EQ(ra.status, rb.status);
  EXPECT_EQ(ra.filters_created, rb.filters_created);
  EXPECT_LE(rpca::testing::rel_err(ra.u, rb.u), 1e-9);
  EXPECT_EQ(WeightedDataset(data, ra.final_stack).weights(), WeightedDataset(scaled, rb.final_stack).weights());
}

TEST(RobustPca, InlierMassRemovedIsSmall) {
  const std::size_t d = 20, n = 5000;
  const double eps = 0.05;
  AlgoConfig cfg;
  cfg.eps = eps;
  cfg.gamma = 1.0;
  int good = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const auto data = spiked_contaminated(d, n, eps, rng);
    const auto res = robust_pca(data, cfg, rng);
    const WeightedDataset fin(data, res.final_stack);
    std::size_t lost = 0;
    for (std::size_t i = 0; i < n; ++i) lost += data.label(i) == Label::Inlier && !fin.weight(i);
    good += static_cast<double>(lost) / n <= 6.0 * eps;
  }
  EXPECT_GE(good, 80);
}

TEST(RobustPca, FallbackWhenNeverAccepted) {
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 1.0;
  cfg.c_acc = 0.0;
  cfg.t_end = 2;
  cfg.k_end = 1;
  Rng rng(3);
  const auto data = spiked_contaminated(10, 500, 0.05, rng);
  const auto res = robust_pca(data, cfg, rng);
  EXPECT_NE(res.status, PcaStatus::Accepted);
  EXPECT_EQ(res.certificate_attempts, 2);
  if (res.status == PcaStatus::FallbackBest) {
    EXPECT_NEAR(norm(res.u), 1.0, 1e-12);
  }
}

TEST(RobustPca, BoostingKeepsBestAccepted) {
  AlgoConfig cfg;
  cfg.eps = 0.05;
  cfg.gamma = 1.0;
  cfg.boost_reps = 3;
  Rng rng(4);
  const auto data = spiked_contaminated(20, 4000, 0.05, rng);
  const auto res = robust_pca(data, cfg, rng);
  EXPECT_EQ(res.status, PcaStatus::Accepted);
  EXPECT_GE(oracle::metric_approx_ratio(res.u, InlierSpec::spiked_identity(20, 0, 9.0).covariance()), 0.85);
}

TEST(RobustPca, FilterStepSkipsWhenNothingAboveThreshold) {
  AlgoConfig cfg;
  cfg.eps = 0.0;
  cfg.gamma = 0.05;
  auto st = prepare_batch_state(WeightedDataset(rows({{1, 0}, {1, 0}})), cfg);
  Rng rng(5);
  const auto rep = batch_filter_step(st, 2, cfg, rng);
  EXPECT_TRUE(rep.skipped);
  EXPECT_EQ(st.filters_created, 0);
}
