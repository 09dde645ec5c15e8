#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>

#include "rpca/certificate.hpp"
#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/estimators.hpp"
#include "rpca/filter.hpp"
#include "rpca/linops.hpp"
#include "rpca/memory_meter.hpp"
#include "rpca/robust_pca.hpp"
#include "rpca/sample_source.hpp"

namespace rpca {

struct StreamStats {
  std::uint64_t samples_consumed = 0;
  std::size_t filters_stored = 0;
  std::size_t peak_resident_scalars = 0;
  std::size_t memory_budget = 0;
  double wall_time = 0.0;
  bool exhausted = false;
};

struct StreamResult {
  PcaResult result;
  StreamStats stats;
};

/// Default memory budget: 50 (200 d + (1/eps) ln(1/fail)) scalars.
inline std::size_t default_memory_budget(std::size_t d, double eps, double fail_prob) {
  const double e = std::max(eps, 1e-6);
  return static_cast<std::size_t>(50.0 * (static_cast<double>(d) * 200.0 + std::ceil(std::log(1.0 / fail_prob) / e)));
}

/// Minibatch size from the operator-closeness sample bound
/// c_batch d p^2 ln(d/eps) / delta^2, capped.
inline std::size_t default_batch_size(const AlgoConfig& cfg, std::size_t d, double r, int p) {
  if (cfg.batch_size > 0) return cfg.batch_size;
  const double dd = static_cast<double>(d);
  const double e = std::max(cfg.eps, 1e-6);
  const double delta = std::min(0.01 * std::sqrt(cfg.gamma / e) / (r * std::sqrt(dd)), 0.01 * cfg.gamma / std::sqrt(dd));
  const double n = std::ceil(cfg.c_batch * dd * p * p * std::log(std::max(dd / e, 2.0)) / (delta * delta));
  return static_cast<std::size_t>(std::clamp(n, 1.0, static_cast<double>(cfg.batch_size_cap)));
}

inline StreamPlan make_stream_plan(const AlgoConfig& cfg, std::size_t d, double r) {
  StreamPlan plan;
  plan.fail_prob = cfg.resolved_failure_prob(d);
  plan.batch_size = default_batch_size(cfg, d, r, cfg.base_power(d) << (cfg.resolved_k_end(d) - 1));
  plan.mean = mean_estimator_plan(cfg, d, r, plan.fail_prob);
  plan.reference_reps = plan.mean.reps;
  plan.c_q = cfg.c_q;
  return plan;
}

/// Single-pass robust PCA over a stream. r_radius bounds inlier norms by
/// r sqrt(d |Sigma|_op) except for an eps fraction. Stream exhaustion ends the
/// run with the best candidate seen (FALLBACK_BEST) or FAILED.
inline StreamResult streaming_robust_pca(SampleSource& source, const AlgoConfig& config, double r_radius, Rng& rng,
                                         const TraceSink& sink = {}) {
  AlgoConfig cfg = config;
  cfg.strict_gamma = true;
  cfg.validate();
  if (!(r_radius >= 1.0)) throw InvalidArgument("streaming_robust_pca: r_radius must be >= 1");
  // the streaming filter needs a finite prune radius, i.e. a positive tail
  if (!(cfg.eps > 0.0)) throw InvalidArgument("streaming_robust_pca: eps must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t d = source.dim();
  const StreamPlan plan = make_stream_plan(cfg, d, r_radius);
  const std::size_t budget = cfg.memory_budget > 0 ? cfg.memory_budget : default_memory_budget(d, cfg.eps, plan.fail_prob);

  CountingSource src(source, cfg.max_samples);
  MemoryMeter meter(budget);
  StreamResult out;
  PcaResult& res = out.result;
  FilterStack stack;
  auto stack_hold = meter.lease(stack.stored_scalars());
  std::optional<Candidate> best;
  auto best_hold = meter.lease(d);

  auto finish = [&](PcaStatus status) {
    res.status = status;
    if (best) {
      res.u = best->u;
      res.sigma_robust = best->sigma_robust;
    }
    res.final_stack = stack;
    res.samples_consumed = src.consumed();
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.stats.samples_consumed = src.consumed();
    out.stats.filters_stored = stack.size();
    out.stats.peak_resident_scalars = meter.peak();
    out.stats.memory_budget = budget;
    out.stats.wall_time = res.elapsed;
    return out;
  };

  try {
    const PointScore sq_norm = [](std::span<const double> x) { return squared_norm(x); };
    const double R2 = filtered_tail_quantile(src, stack, sq_norm, 2.0 * cfg.eps, plan.fail_prob, plan.c_q, &meter);
    stack = FilterStack(R2);
    const double q_op = filtered_tail_quantile(src, stack, sq_norm, 3.0 * cfg.eps, plan.fail_prob, plan.c_q, &meter);
    const double sigma_op = stream_mean_estimate(src, stack, sq_norm, q_op, plan.mean, &meter).value;
    if (!(sigma_op > 0.0)) throw DegenerateState("streaming_robust_pca: trimmed norm mean is zero");

    const int k_end = cfg.resolved_k_end(d), t_end = cfg.resolved_t_end(d);
    const int p_base = cfg.base_power(d);
    for (int k = 1; k <= k_end; ++k) {
      const int p_k = p_base << (k - 1);
      for (int t = 1; t <= t_end; ++t) {
        res.k = k;
        res.t = t;
        Candidate c = streaming_sample_top_eigenvector(src, stack, cfg, plan, rng, &meter);
        ++res.certificate_attempts;
        TraceEvent ev{k, t, p_k, c.accepted, c.sigma_robust, c.rayleigh_emp};
        if (!best || c.sigma_robust > best->sigma_robust || c.accepted) best = c;
        if (c.accepted) {
          if (sink) sink(ev);
          return finish(PcaStatus::Accepted);
        }

        Vector v = random_power_direction(
            [&](std::span<const double> z) { return stream_second_moment_apply(src, stack, plan.batch_size, z, &meter); },
            d, p_k, rng);
        auto v_hold = meter.lease(d);
        const PointScore f = [&v](std::span<const double> x) { return score_projection(v, x); };
        const double floor_L = 0.1 / static_cast<double>(d) * sigma_op;
        const double L = std::max(filtered_tail_quantile(src, stack, f, 3.0 * cfg.eps, plan.fail_prob, plan.c_q, &meter), floor_L);
        const double sigma_hat = stream_mean_estimate(src, stack, f, L, plan.mean, &meter).value;
        const double T_hat = std::max(2.35 * cfg.gamma * sigma_hat, std::numeric_limits<double>::min());
        const double delta = cfg.delta_slack >= 0.0
                                 ? cfg.delta_slack
                                 : 0.1 * cfg.gamma / (r_radius * r_radius * static_cast<double>(d)) * sigma_op;
        const auto fo = streaming_filter(src, stack, v, L, T_hat, delta, plan.mean, rng, &meter);
        if (fo.new_entry) {
          stack = stack.with_entry(*fo.new_entry);
          stack_hold.resize(stack.stored_scalars());
          ++res.filters_created;
        }
        ev.threshold_L = L;
        ev.sigma_hat = sigma_hat;
        ev.mean_score = fo.initial_mean_score;
        ev.filter_rounds = fo.rounds;
        if (sink) sink(ev);
      }
    }
  } catch (const StreamExhausted&) {
    out.stats.exhausted = true;
    return finish(best ? PcaStatus::FallbackBest : PcaStatus::Failed);
  }
  return finish(best ? PcaStatus::FallbackBest : PcaStatus::Failed);
}

/// Baseline: minibatch power iteration on unfiltered draws (Oja-style).
inline Vector streaming_naive_pca(SampleSource& source, std::size_t batch_size, int iters, Rng& rng) {
  const FilterStack none;
  return random_power_direction(
      [&](std::span<const double> z) { return stream_second_moment_apply(source, none, batch_size, z); }, source.dim(),
      iters, rng);
}

}  // namespace rpca
