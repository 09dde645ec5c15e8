#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/linops.hpp"
#include "rpca/memory_meter.hpp"
#include "rpca/sample_source.hpp"

namespace rpca {

struct QuantileThreshold {
  double value = 0.0;
  double target_tail = 0.0;
  double attained_tail = 0.0;
};

enum class ScalarKind { TrimmedVariance, OpnormBracket, StreamMean };

struct RobustScalar {
  double value = 0.0;
  ScalarKind kind = ScalarKind::TrimmedVariance;
};

inline double score_projection(std::span<const double> v, std::span<const double> x) {
  require_same_dim(v.size(), x.size(), "score_projection");
  const double s = dot(v, x);
  return s * s;
}

/// |M x|^2.
inline double score_g(const MatrixPowerEstimate& est, std::span<const double> x) {
  return squared_norm(est.apply(x));
}

/// (v^T x)^2 for every point; zero-weight points included (callers mask).
inline std::vector<double> projection_scores(const WeightedDataset& ds, std::span<const double> v) {
  require_same_dim(v.size(), ds.dim(), "projection_scores");
  std::vector<double> s(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double t = dot(v, ds[i]);
    s[i] = t * t;
  }
  return s;
}

inline std::vector<double> norm_scores(const WeightedDataset& ds) {
  std::vector<double> s(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) s[i] = squared_norm(ds[i]);
  return s;
}

namespace detail {
inline void check_tail(double tail, const char* where) {
  if (!(tail >= 0.0 && tail < 1.0)) throw InvalidArgument(std::string(where) + ": tail must lie in [0, 1)");
}
}  // namespace detail

/// Top-tail quantile of a multiset: L is an actual value and the fraction
/// strictly above L is at most `tail`. Reorders `values`.
inline QuantileThreshold quantile_of(std::vector<double>& values, double tail) {
  detail::check_tail(tail, "quantile");
  const std::size_t m = values.size();
  if (m == 0) throw DegenerateState("quantile of an empty set");
  std::size_t k = static_cast<std::size_t>(std::floor(tail * static_cast<double>(m) * (1.0 + 1e-12)));
  k = std::min(k, m - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end(), std::greater<>());
  const double L = values[k];
  std::size_t above = 0;
  for (double s : values) above += s > L ? 1 : 0;
  return {L, tail, static_cast<double>(above) / static_cast<double>(m)};
}

/// Quantile of the survivors' scores under the uniform weights of ds.
inline QuantileThreshold weighted_quantile(const WeightedDataset& ds, std::span<const double> scores, double tail) {
  require_same_dim(ds.size(), scores.size(), "weighted_quantile");
  detail::check_tail(tail, "weighted_quantile");
  if (ds.survivor_count() == 0) throw DegenerateState("weighted_quantile: no surviving points");
  std::vector<double> alive;
  alive.reserve(ds.survivor_count());
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.weight(i)) alive.push_back(scores[i]);
  return quantile_of(alive, tail);
}

/// Draws m = ceil(c_q / tail * ln(1/fail)) scores and returns the
/// ceil(m * tail)-th largest. The buffer is released on return.
inline std::size_t streaming_quantile_size(double tail, double fail_prob, double c_q) {
  if (!(tail > 0.0 && tail < 1.0)) throw InvalidArgument("streaming_quantile: tail must lie in (0, 1)");
  if (!(fail_prob > 0.0 && fail_prob < 1.0)) throw InvalidArgument("streaming_quantile: fail_prob must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(c_q / tail * std::log(1.0 / fail_prob)));
}

inline QuantileThreshold streaming_quantile(const ScoreSource& source, double tail, double fail_prob, double c_q = 200.0,
                                            MemoryMeter* meter = nullptr) {
  const std::size_t m = std::max<std::size_t>(1, streaming_quantile_size(tail, fail_prob, c_q));
  auto hold = lease(meter, m);
  std::vector<double> buf;
  buf.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    auto s = source();
    if (!s) throw StreamExhausted("streaming_quantile: score source exhausted", i);
    buf.push_back(*s);
  }
  const std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(static_cast<double>(m) * tail)), 1, m);
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(j - 1), buf.end(), std::greater<>());
  const double L = buf[j - 1];
  std::size_t above = 0;
  for (double s : buf) above += s > L ? 1 : 0;
  return {L, tail, static_cast<double>(above) / static_cast<double>(m)};
}

/// (1/n) sum over survivors of s * 1(s <= L).
inline double trimmed_mean(const WeightedDataset& ds, std::span<const double> scores, double L) {
  if (ds.size() == 0) throw InvalidArgument("trimmed_mean: empty dataset");
  double acc = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.weight(i) && scores[i] <= L) acc += scores[i];
  return acc / static_cast<double>(ds.size());
}

/// E_P[w (v^T x)^2 1((v^T x)^2 <= L)].
inline RobustScalar trimmed_variance(const WeightedDataset& ds, std::span<const double> v, const QuantileThreshold& L) {
  const auto s = projection_scores(ds, v);
  return {trimmed_mean(ds, s, L.value), ScalarKind::TrimmedVariance};
}

inline RobustScalar trimmed_variance(const WeightedDataset& ds, std::span<const double> scores, double L) {
  require_same_dim(ds.size(), scores.size(), "trimmed_variance");
  return {trimmed_mean(ds, scores, L), ScalarKind::TrimmedVariance};
}

/// Trimmed mean of |x|^2 at tail 3 eps: a bracket on the operator norm,
/// between roughly |Sigma|_op and d |Sigma|_op.
inline RobustScalar opnorm_bracket(const WeightedDataset& ds, double eps) {
  if (ds.size() == 0) throw InvalidArgument("opnorm_bracket: empty dataset");
  auto s = norm_scores(ds);
  const auto q = weighted_quantile(ds, s, std::min(3.0 * eps, 0.999));
  return {trimmed_mean(ds, s, q.value), ScalarKind::OpnormBracket};
}

/// Sample size and boosting repetitions for the streaming mean estimator.
struct MeanEstimatorPlan {
  std::size_t batch = 1;
  int reps = 1;
};

/// batch = ceil(c_m r^4 d^2 / gamma^2) (capped), reps = ceil(log2(1/fail)).
inline MeanEstimatorPlan mean_estimator_plan(const AlgoConfig& cfg, std::size_t d, double r, double fail_prob) {
  MeanEstimatorPlan p;
  if (cfg.mean_batch > 0) {
    p.batch = cfg.mean_batch;
  } else {
    const double dd = static_cast<double>(d);
    const double b = std::ceil(cfg.c_m * std::pow(r, 4) * dd * dd / (cfg.gamma * cfg.gamma));
    p.batch = static_cast<std::size_t>(std::clamp(b, 1.0, static_cast<double>(cfg.mean_batch_cap)));
  }
  if (cfg.stream_reps > 0) {
    p.reps = cfg.stream_reps;
  } else {
    const double f = std::clamp(fail_prob, 1e-300, 0.5);
    p.reps = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / f))));
  }
  return p;
}

using PointScore = std::function<double(std::span<const double>)>;

/// Median over plan.reps of sample means of w(x) * s(x) * 1(s(x) <= cap),
/// each over plan.batch raw draws. Zero-weight draws contribute 0.
inline RobustScalar stream_mean_estimate(SampleSource& src, const FilterStack& stack, const PointScore& score,
                                         double cap, const MeanEstimatorPlan& plan, MemoryMeter* meter = nullptr) {
  if (plan.batch == 0 || plan.reps < 1) throw InvalidArgument("stream_mean_estimate: empty plan");
  Vector x(src.dim());
  std::vector<double> means(static_cast<std::size_t>(plan.reps));
  auto hold = lease(meter, x.size() + means.size());
  for (int r = 0; r < plan.reps; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plan.batch; ++i) {
      draw_or_throw(src, x);
      if (!stack.passes(x)) continue;
      const double s = score(x);
      if (s <= cap) acc += s;
    }
    means[static_cast<std::size_t>(r)] = acc / static_cast<double>(plan.batch);
  }
  const std::size_t mid = means.size() / 2;
  std::nth_element(means.begin(), means.begin() + static_cast<std::ptrdiff_t>(mid), means.end());
  double med = means[mid];
  if (means.size() % 2 == 0) {
    const double lo = *std::max_element(means.begin(), means.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lo);
  }
  return {med, ScalarKind::StreamMean};
}

inline RobustScalar stream_mean_estimate(SampleSource& src, const FilterStack& stack, std::span<const double> v,
                                         double cap, const MeanEstimatorPlan& plan, MemoryMeter* meter = nullptr) {
  require_same_dim(src.dim(), v.size(), "stream_mean_estimate");
  Vector dir(v.begin(), v.end());
  return stream_mean_estimate(
      src, stack, [&dir](std::span<const double> x) { return score_projection(dir, x); }, cap, plan, meter);
}

/// Adapts a sample source into a score source that reports s(x) for accepted
/// draws and skips rejected ones (bounded by max_tries consecutive rejects).
inline ScoreSource filtered_scores(SampleSource& src, const FilterStack& stack, PointScore score,
                                   std::shared_ptr<Vector> workspace, std::size_t max_rejects = 1000000) {
  return [&src, &stack, score = std::move(score), workspace, max_rejects]() -> std::optional<double> {
    for (std::size_t tries = 0; tries < max_rejects; ++tries) {
      draw_or_throw(src, *workspace);
      if (stack.passes(*workspace)) return score(*workspace);
    }
    throw DegenerateState("score stream: every draw rejected");
  };
}

/// Streaming quantile of s(x) over draws passing `stack`; tail 0 gives +inf.
inline double filtered_tail_quantile(SampleSource& src, const FilterStack& stack, const PointScore& s, double tail,
                                     double fail_prob, double c_q, MemoryMeter* meter = nullptr) {
  if (tail <= 0.0) return std::numeric_limits<double>::infinity();
  auto ws = std::make_shared<Vector>(src.dim());
  auto hold = lease(meter, src.dim());
  return streaming_quantile(filtered_scores(src, stack, s, ws), std::min(tail, 0.999), fail_prob, c_q, meter).value;
}

}  // namespace rpca
