#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/estimators.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca {

struct FilterOutcome {
  std::optional<FilterEntry> new_entry;
  int rounds = 0;
  double initial_mean_score = 0.0;
  double final_mean_score = 0.0;
  double final_cap = 0.0;       // r at exit (R if no round ran)
  std::size_t removed_count = 0;  // batch only
};

/// Mean of w(x) tau(x) 1(tau(x) <= cap) under the current weights.
using MeanScoreEval = std::function<double(double cap)>;

/// Loop guard: 64 * ceil(log2(R / score_floor)), at least 64.
inline long filter_round_limit(double R, double score_floor) {
  if (!(score_floor > 0.0) || !(R > score_floor)) return 64;
  const double l = std::ceil(std::log2(R / score_floor));
  return 64L * std::max(1L, static_cast<long>(std::min(l, 1e6)));
}

/// Randomized threshold chain: while the mean score exceeds 2.5 (T_hat + delta),
/// shrink the cap to U(0,1) * cap. Emits FilterEntry(v, max(L, cap)) if any
/// round ran. Every point with f <= L has tau = 0 and is always kept.
inline FilterOutcome hard_thresholding_filter(std::span<const double> v, double L, const MeanScoreEval& mean_below,
                                              double T_hat, double R, double delta, double score_floor, Rng& rng) {
  if (!(T_hat > 0.0)) throw InvalidArgument("hard_thresholding_filter: T_hat must be positive");
  if (!(R >= 0.0) || !(delta >= 0.0) || !(L >= 0.0)) throw InvalidArgument("hard_thresholding_filter: bad R/delta/L");
  const double stop = 2.5 * (T_hat + delta);
  const long limit = filter_round_limit(R, score_floor);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  FilterOutcome out;
  double cap = R;
  double mean = mean_below(cap);
  out.initial_mean_score = mean;
  while (mean > stop) {
    if (out.rounds >= limit) throw InternalError("hard_thresholding_filter: round limit exceeded");
    cap *= unif(rng);
    mean = mean_below(cap);
    ++out.rounds;
  }
  out.final_mean_score = mean;
  out.final_cap = cap;
  if (out.rounds > 0) {
    const double thr = std::max({L, cap, std::numeric_limits<double>::min()});
    out.new_entry.emplace(Vector(v.begin(), v.end()), thr);
  }
  return out;
}

/// Exact batch evaluation. `f` holds (v^T x)^2 for every point of ds.
inline FilterOutcome batch_filter(const WeightedDataset& ds, std::span<const double> v, std::span<const double> f,
                                  double L, double T_hat, double delta, Rng& rng) {
  require_same_dim(ds.size(), f.size(), "batch_filter");
  std::vector<double> tau;
  tau.reserve(ds.survivor_count());
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.weight(i) && f[i] > L) tau.push_back(f[i]);
  std::sort(tau.begin(), tau.end());
  std::vector<double> prefix(tau.size() + 1, 0.0);
  for (std::size_t i = 0; i < tau.size(); ++i) prefix[i + 1] = prefix[i] + tau[i];
  const double n = static_cast<double>(ds.size());
  auto mean_below = [&](double cap) {
    const auto k = static_cast<std::size_t>(std::upper_bound(tau.begin(), tau.end(), cap) - tau.begin());
    return prefix[k] / n;
  };
  const double R = tau.empty() ? 0.0 : tau.back();
  const double floor_score = tau.empty() ? 0.0 : tau.front();
  FilterOutcome out = hard_thresholding_filter(v, L, mean_below, T_hat, R, delta, floor_score, rng);
  if (out.new_entry) {
    const double thr = out.new_entry->threshold_sq;
    out.removed_count = static_cast<std::size_t>(tau.end() - std::upper_bound(tau.begin(), tau.end(), thr));
  }
  return out;
}

/// Streaming evaluation through the median-of-means estimator; R is the
/// analytic bound prune_radius_sq * |v|^2.
inline FilterOutcome streaming_filter(SampleSource& src, const FilterStack& stack, std::span<const double> v, double L,
                                      double T_hat, double delta, const MeanEstimatorPlan& plan, Rng& rng,
                                      MemoryMeter* meter = nullptr) {
  require_same_dim(src.dim(), v.size(), "streaming_filter");
  Vector dir(v.begin(), v.end());
  const double R = stack.prune_radius_sq() * squared_norm(dir);
  if (!std::isfinite(R)) throw InvalidArgument("streaming_filter: prune radius must be finite");
  auto hold = lease(meter, dir.size());
  auto mean_below = [&](double cap) {
    const PointScore tau = [&dir, L](std::span<const double> x) {
      const double s = score_projection(dir, x);
      return s > L ? s : 0.0;
    };
    return stream_mean_estimate(src, stack, tau, cap, plan, meter).value;
  };
  return hard_thresholding_filter(dir, L, mean_below, T_hat, R, delta, std::max(L, std::numeric_limits<double>::min()),
                                  rng);
}

}  // namespace rpca
