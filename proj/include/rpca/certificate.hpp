#pragma once

#include <cmath>
#include <memory>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/estimators.hpp"
#include "rpca/linops.hpp"
#include "rpca/memory_meter.hpp"
#include "rpca/sample_source.hpp"

namespace rpca {

struct Candidate {
  Vector u;
  double rayleigh_emp = 0.0;       // u^T Sigma_{P_w} u
  double sigma_robust = 0.0;       // trimmed variance along u
  double reference_rayleigh = 0.0; // r_hat from power iteration
  bool accepted = false;
};

/// Both acceptance conditions. The variance test is
/// sigma_u >= exp(-c_acc gamma) * rayleigh, which matches 1 - c_acc gamma to
/// first order and stays meaningful for large gamma.
inline bool certificate_accepts(double sigma_robust, double rayleigh_emp, double reference, double gamma, double c_acc) {
  return sigma_robust >= std::exp(-c_acc * gamma) * rayleigh_emp && rayleigh_emp >= (1.0 - gamma) * reference;
}

/// u = normalized B^p z for Gaussian z, retrying on a vanishing iterate.
template <class Apply>
Vector random_power_direction(Apply&& apply, std::size_t d, int p, Rng& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vector u = gaussian_vector(d, rng);
    if (power_direction(apply, p, u)) return u;
  }
  throw DegenerateState("candidate direction vanished after 8 attempts");
}

/// Batch candidate from the current weights.
inline Candidate sample_top_eigenvector(const WeightedDataset& ds, const AlgoConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::size_t d = ds.dim();
  if (ds.survivor_count() == 0) throw DegenerateState("sample_top_eigenvector: no surviving points");
  const SecondMomentOp sigma_w(ds, Normalization::Normalized, cfg.threads);
  const int p_ref = cfg.reference_power(d, cfg.resolved_failure_prob(d));
  const int p_cert = cfg.certificate_power(d);

  Candidate c;
  c.reference_rayleigh = power_iteration(sigma_w, p_ref, rng).rayleigh;
  c.u = random_power_direction([&](std::span<const double> z) { return sigma_w.apply(z); }, d, p_cert, rng);
  c.rayleigh_emp = dot(c.u, sigma_w.apply(c.u));
  const auto f = projection_scores(ds, c.u);
  const auto q = weighted_quantile(ds, f, std::min(3.0 * cfg.eps, 0.999));
  c.sigma_robust = trimmed_mean(ds, f, q.value);
  c.accepted = certificate_accepts(c.sigma_robust, c.rayleigh_emp, c.reference_rayleigh, cfg.gamma, cfg.c_acc);
  return c;
}

/// Sizes used by the streaming estimators.
struct StreamPlan {
  std::size_t batch_size = 1;   // minibatch for power products and Rayleigh quotients
  MeanEstimatorPlan mean;       // median-of-means estimator
  int reference_reps = 1;       // boosting for the reference power iteration
  double fail_prob = 0.1;       // per-estimate failure probability
  double c_q = 200.0;
};

/// Streaming candidate: reference r_hat by boosted minibatch power iteration,
/// u from fresh minibatch powers, sigma_u from a streaming quantile and the
/// median-of-means estimator.
inline Candidate streaming_sample_top_eigenvector(SampleSource& src, const FilterStack& stack, const AlgoConfig& cfg,
                                                  const StreamPlan& plan, Rng& rng, MemoryMeter* meter = nullptr) {
  const std::size_t d = src.dim();
  const int p_ref = cfg.reference_power(d, cfg.resolved_failure_prob(d));
  const int p_cert = cfg.certificate_power(d);

  Candidate c;
  c.reference_rayleigh = approx_power_iteration(src, stack, p_ref, plan.reference_reps, plan.batch_size, rng, meter);
  auto hold = lease(meter, d);
  bool ok = false;
  for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
    c.u = gaussian_vector(d, rng);
    ok = streaming_power_direction(src, stack, p_cert, plan.batch_size, c.u, meter);
  }
  if (!ok) throw DegenerateState("streaming candidate vanished after 8 attempts");
  c.rayleigh_emp = dot(c.u, stream_second_moment_apply(src, stack, plan.batch_size, c.u, meter));

  const Vector u = c.u;
  const PointScore f = [&u](std::span<const double> x) { return score_projection(u, x); };
  const double q = filtered_tail_quantile(src, stack, f, 3.0 * cfg.eps, plan.fail_prob, plan.c_q, meter);
  c.sigma_robust = stream_mean_estimate(src, stack, f, q, plan.mean, meter).value;
  c.accepted = certificate_accepts(c.sigma_robust, c.rayleigh_emp, c.reference_rayleigh, cfg.gamma, cfg.c_acc);
  return c;
}

}  // namespace rpca
