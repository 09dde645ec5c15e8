#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "rpca/certificate.hpp"
#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/estimators.hpp"
#include "rpca/filter.hpp"
#include "rpca/linops.hpp"
#include "rpca/oracle.hpp"

namespace rpca {

enum class PcaStatus { Accepted, FallbackBest, Failed };

inline const char* to_string(PcaStatus s) {
  switch (s) {
    case PcaStatus::Accepted: return "ACCEPTED";
    case PcaStatus::FallbackBest: return "FALLBACK_BEST";
    default: return "FAILED";
  }
}

/// One record per (k, t) iteration.
struct TraceEvent {
  int k = 0;
  int t = 0;
  int p_k = 0;
  bool accepted = false;
  double sigma_u = 0.0;
  double rayleigh = 0.0;
  double threshold_L = 0.0;
  double sigma_hat = 0.0;
  double mean_score = 0.0;
  int filter_rounds = 0;
  std::size_t removed = 0;
  double log_potential = std::numeric_limits<double>::quiet_NaN();
};

using TraceSink = std::function<void(const TraceEvent&)>;

struct PcaResult {
  Vector u;
  double sigma_robust = 0.0;
  PcaStatus status = PcaStatus::Failed;
  int k = 0;
  int t = 0;
  int filters_created = 0;
  int certificate_attempts = 0;
  std::vector<double> potential_trace;  // log tr(B^{2p_k+1}), when recorded
  double elapsed = 0.0;
  std::uint64_t samples_consumed = 0;
  FilterStack final_stack;
};

/// tr(B^{2p+1}) of the materialized weighted second moment.
inline double log_potential(const WeightedDataset& ds, int p) {
  if (ds.dim() > 64) throw UnsupportedDiagnostic("potential_diagnostic: d > 64");
  return oracle::log_trace_power(oracle::dense_second_moment(ds, false), 2 * p + 1);
}

inline double potential_diagnostic(const WeightedDataset& ds, int p) { return std::exp(log_potential(ds, p)); }

inline double potential_diagnostic(const WeightedDataset& ds, const FilterStack& stack, int p) {
  return potential_diagnostic(ds.with_stack(stack), p);
}

/// Mutable state of the batch driver between filter steps.
struct BatchState {
  WeightedDataset ds;
  double sigma_op = 0.0;
  int filters_created = 0;
};

struct FilterStepReport {
  Vector v;
  double L = 0.0;
  double sigma_hat = 0.0;
  double T_hat = 0.0;
  bool skipped = false;
  FilterOutcome outcome;
};

/// Prologue: sigma_op bracket and the norm prune 10 sigma_op d / eps.
inline BatchState prepare_batch_state(const WeightedDataset& input, const AlgoConfig& cfg) {
  cfg.validate();
  const double sigma_op = opnorm_bracket(input, cfg.eps).value;
  if (!(sigma_op > 0.0)) throw DegenerateState("robust_pca: trimmed norm mean is zero");
  const double prune = cfg.eps > 0.0 ? 10.0 * sigma_op * static_cast<double>(input.dim()) / cfg.eps
                                     : std::numeric_limits<double>::infinity();
  const double r2 = std::min(prune, input.stack().prune_radius_sq());
  return {input.with_stack(input.stack().with_prune(r2)), sigma_op, 0};
}

/// Random direction v = B^{p_k} z, quantile, trimmed variance, filter.
inline FilterStepReport batch_filter_step(BatchState& st, int p_k, const AlgoConfig& cfg, Rng& rng) {
  const std::size_t d = st.ds.dim();
  if (st.ds.survivor_count() == 0) throw DegenerateState("filter step: no surviving points");
  FilterStepReport rep;
  const SecondMomentOp b(st.ds, Normalization::Unnormalized, cfg.threads);
  rep.v = random_power_direction([&](std::span<const double> z) { return b.apply(z); }, d, p_k, rng);
  const auto f = projection_scores(st.ds, rep.v);
  const double floor_L = 0.1 / static_cast<double>(d) * st.sigma_op * squared_norm(rep.v);
  rep.L = std::max(weighted_quantile(st.ds, f, std::min(3.0 * cfg.eps, 0.999)).value, floor_L);
  rep.sigma_hat = trimmed_mean(st.ds, f, rep.L);
  rep.T_hat = std::max(2.35 * cfg.gamma * rep.sigma_hat, std::numeric_limits<double>::min());

  bool any_positive = false;
  for (std::size_t i = 0; i < st.ds.size() && !any_positive; ++i) any_positive = st.ds.weight(i) && f[i] > rep.L;
  if (!any_positive) {
    rep.skipped = true;
    return rep;
  }
  rep.outcome = batch_filter(st.ds, rep.v, f, rep.L, rep.T_hat, 0.0, rng);
  if (rep.outcome.new_entry) {
    st.ds = st.ds.with_entry(*rep.outcome.new_entry);
    ++st.filters_created;
  }
  return rep;
}

namespace detail {

inline PcaResult robust_pca_once(const WeightedDataset& input, const AlgoConfig& cfg, Rng& rng, const TraceSink& sink) {
  const auto t0 = std::chrono::steady_clock::now();
  BatchState st = prepare_batch_state(input, cfg);
  const std::size_t d = input.dim();
  const int k_end = cfg.resolved_k_end(d), t_end = cfg.resolved_t_end(d);
  const int p_base = cfg.base_power(d);
  const bool track = cfg.record_potential && d <= 64;

  PcaResult res;
  std::optional<Candidate> best;
  auto finish = [&](PcaStatus status) {
    res.status = status;
    if (best) {
      res.u = best->u;
      res.sigma_robust = best->sigma_robust;
    }
    res.filters_created = st.filters_created;
    res.final_stack = st.ds.stack();
    res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  for (int k = 1; k <= k_end; ++k) {
    const int p_k = p_base << (k - 1);
    if (track) res.potential_trace.push_back(log_potential(st.ds, p_k));
    for (int t = 1; t <= t_end; ++t) {
      res.k = k;
      res.t = t;
      if (st.ds.survivor_count() == 0) return finish(best ? PcaStatus::FallbackBest : PcaStatus::Failed);
      Candidate c = sample_top_eigenvector(st.ds, cfg, rng);
      ++res.certificate_attempts;
      TraceEvent ev{k, t, p_k, c.accepted, c.sigma_robust, c.rayleigh_emp};
      if (!best || c.sigma_robust > best->sigma_robust || c.accepted) best = c;
      if (c.accepted) {
        if (sink) sink(ev);
        return finish(PcaStatus::Accepted);
      }
      const auto step = batch_filter_step(st, p_k, cfg, rng);
      ev.threshold_L = step.L;
      ev.sigma_hat = step.sigma_hat;
      ev.mean_score = step.outcome.initial_mean_score;
      ev.filter_rounds = step.outcome.rounds;
      ev.removed = step.outcome.removed_count;
      if (track) {
        ev.log_potential = log_potential(st.ds, p_k);
        res.potential_trace.push_back(ev.log_potential);
      }
      if (sink) sink(ev);
    }
  }
  return finish(best ? PcaStatus::FallbackBest : PcaStatus::Failed);
}

}  // namespace detail

/// Batch robust PCA over the uniform distribution on ds's points.
inline PcaResult robust_pca(const WeightedDataset& ds, const AlgoConfig& cfg, Rng& rng, const TraceSink& sink = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  PcaResult best = detail::robust_pca_once(ds, cfg, rng, sink);
  for (int rep = 1; rep < cfg.boost_reps; ++rep) {
    Rng fresh(rng());
    PcaResult r = detail::robust_pca_once(ds, cfg, fresh, sink);
    const bool better = (r.status == PcaStatus::Accepted && best.status != PcaStatus::Accepted) ||
                        (r.status == best.status && r.sigma_robust > best.sigma_robust);
    if (better) best = std::move(r);
  }
  best.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

inline PcaResult robust_pca(const PointSet& points, const AlgoConfig& cfg, Rng& rng, const TraceSink& sink = {}) {
  return robust_pca(WeightedDataset(points), cfg, rng, sink);
}

/// Baseline: power iteration on the uncorrected second moment.
inline Vector naive_pca(const PointSet& points, int p_iters, Rng& rng) {
  const SecondMomentOp op(WeightedDataset(points), Normalization::Unnormalized);
  return power_iteration(op, p_iters, rng).y;
}

}  // namespace rpca
