#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <thread>
#include <variant>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/memory_meter.hpp"
#include "rpca/sample_source.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca {

enum class Normalization { Unnormalized, Normalized };

/// z -> (1/n) sum w(x) x (x^T z), optionally divided by the surviving mass.
/// Never materializes the d x d matrix.
class SecondMomentOp {
 public:
  explicit SecondMomentOp(WeightedDataset ds, Normalization norm = Normalization::Unnormalized, unsigned threads = 1)
      : ds_(std::move(ds)), norm_(norm), threads_(std::max(1u, threads)) {
    if (ds_.size() == 0) throw InvalidArgument("SecondMomentOp: empty dataset");
  }

  std::size_t dim() const noexcept { return ds_.dim(); }
  const WeightedDataset& dataset() const noexcept { return ds_; }
  Normalization normalization() const noexcept { return norm_; }

  Vector apply(std::span<const double> z) const {
    require_same_dim(dim(), z.size(), "SecondMomentOp::apply");
    double denom = static_cast<double>(ds_.size());
    if (norm_ == Normalization::Normalized) {
      if (ds_.survivor_count() == 0) throw DegenerateState("SecondMomentOp: zero surviving mass");
      denom = static_cast<double>(ds_.survivor_count());
    }
    Vector out = threads_ > 1 ? accumulate_parallel(z) : accumulate(z, 0, ds_.size());
    scale_in_place(out, 1.0 / denom);
    return out;
  }

 private:
  Vector accumulate(std::span<const double> z, std::size_t lo, std::size_t hi) const {
    Vector out(dim(), 0.0);
    const auto& w = ds_.weights();
    for (std::size_t i = lo; i < hi; ++i) {
      if (!w[i]) continue;
      auto x = ds_[i];
      axpy(dot(x, z), x, out);
    }
    return out;
  }

  // Chunked partial sums, combined in chunk order.
  Vector accumulate_parallel(std::span<const double> z) const {
    const std::size_t n = ds_.size();
    const std::size_t chunks = std::min<std::size_t>(threads_, n);
    std::vector<Vector> partial(chunks);
    std::vector<std::thread> pool;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = n * c / chunks, hi = n * (c + 1) / chunks;
      pool.emplace_back([&, c, lo, hi] { partial[c] = accumulate(z, lo, hi); });
    }
    for (auto& t : pool) t.join();
    Vector out(dim(), 0.0);
    for (const auto& p : partial) axpy(1.0, p, out);
    return out;
  }

  WeightedDataset ds_;
  Normalization norm_;
  unsigned threads_;
};

inline Vector apply_second_moment(const SecondMomentOp& op, std::span<const double> z) { return op.apply(z); }

/// M = factor_p ... factor_1, either p copies of one batch operator or a
/// list of dense minibatch factors.
class MatrixPowerEstimate {
 public:
  MatrixPowerEstimate(SecondMomentOp op, int p) : repr_(Batch{std::move(op), p}) {
    if (p < 0) throw InvalidArgument("MatrixPowerEstimate: negative power");
  }
  explicit MatrixPowerEstimate(std::vector<DenseMatrix> factors, std::size_t dim) : repr_(Factors{std::move(factors), dim}) {}

  int power() const {
    if (auto b = std::get_if<Batch>(&repr_)) return b->p;
    return static_cast<int>(std::get<Factors>(repr_).factors.size());
  }

  std::size_t dim() const {
    if (auto b = std::get_if<Batch>(&repr_)) return b->op.dim();
    return std::get<Factors>(repr_).dim;
  }

  const std::vector<DenseMatrix>* dense_factors() const {
    if (auto f = std::get_if<Factors>(&repr_)) return &f->factors;
    return nullptr;
  }

  Vector apply(std::span<const double> z) const {
    require_same_dim(dim(), z.size(), "matrix_power_apply");
    Vector v(z.begin(), z.end());
    if (auto b = std::get_if<Batch>(&repr_)) {
      for (int k = 0; k < b->p; ++k) v = b->op.apply(v);
    } else {
      for (const auto& f : std::get<Factors>(repr_).factors) v = f.apply(v);
    }
    return v;
  }

 private:
  struct Batch {
    SecondMomentOp op;
    int p;
  };
  struct Factors {
    std::vector<DenseMatrix> factors;
    std::size_t dim;
  };
  std::variant<Batch, Factors> repr_;
};

inline Vector matrix_power_apply(const MatrixPowerEstimate& est, std::span<const double> z) { return est.apply(z); }

/// Direction of A^p z, renormalizing after every product so large powers
/// cannot overflow. Returns false if the iterate vanishes.
template <class Apply>
bool power_direction(Apply&& apply, int p, Vector& z) {
  if (!normalize_in_place(z)) return false;
  for (int k = 0; k < p; ++k) {
    z = apply(z);
    if (!normalize_in_place(z)) return false;
  }
  return true;
}

struct PowerResult {
  Vector y;
  double rayleigh = 0.0;
};

/// y = normalized A^p g for Gaussian g; rayleigh = y^T A y. Retries on a
/// vanishing iterate up to 8 times.
template <class Apply>
PowerResult power_iteration_with(Apply&& apply, std::size_t d, int p_iters, Rng& rng) {
  if (p_iters < 1) throw InvalidArgument("power_iteration: p_iters must be >= 1");
  for (int attempt = 0; attempt < 8; ++attempt) {
    Vector y = gaussian_vector(d, rng);
    if (!power_direction(apply, p_iters, y)) continue;
    const double r = dot(y, apply(y));
    return {std::move(y), r};
  }
  throw DegenerateState("power_iteration: iterate vanished after 8 attempts");
}

inline PowerResult power_iteration(const SecondMomentOp& op, int p_iters, Rng& rng) {
  return power_iteration_with([&](std::span<const double> v) { return op.apply(v); }, op.dim(), p_iters, rng);
}

inline PowerResult power_iteration(const DenseMatrix& a, int p_iters, Rng& rng) {
  return power_iteration_with([&](std::span<const double> v) { return a.apply(v); }, a.rows, p_iters, rng);
}

/// Fraction of `batch_size` fresh draws that pass the stack.
inline double estimate_survival(SampleSource& src, const FilterStack& stack, std::size_t batch_size,
                                MemoryMeter* meter = nullptr) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  Vector x(src.dim());
  auto hold = lease(meter, x.size());
  std::size_t pass = 0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    draw_or_throw(src, x);
    pass += stack.passes(x) ? 1 : 0;
  }
  return static_cast<double>(pass) / static_cast<double>(batch_size);
}

/// One streamed application of the empirical second moment of the accepted
/// draws in a batch: returns (1/accepted) sum x (x^T z). Consumes exactly
/// batch_size samples; O(d) memory.
inline Vector stream_second_moment_apply(SampleSource& src, const FilterStack& stack, std::size_t batch_size,
                                         std::span<const double> z, MemoryMeter* meter = nullptr) {
  if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  const std::size_t d = src.dim();
  require_same_dim(d, z.size(), "stream_second_moment_apply");
  Vector x(d), out(d, 0.0);
  auto hold = lease(meter, 2 * d);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < batch_size; ++i) {
    draw_or_throw(src, x);
    if (!stack.passes(x)) continue;
    ++accepted;
    axpy(dot(x, z), x, out);
  }
  if (accepted == 0) throw DegenerateState("minibatch rejected every sample");
  scale_in_place(out, 1.0 / static_cast<double>(accepted));
  return out;
}

/// Dense minibatch factors W_hat * Sigma_hat_l, l = 1..p. Draws one batch for
/// W_hat then p batches, each exactly batch_size raw samples.
inline MatrixPowerEstimate build_minibatch_power(SampleSource& src, const FilterStack& stack, int p,
                                                 std::size_t batch_size) {
  if (p < 0) throw InvalidArgument("build_minibatch_power: negative power");
  if (batch_size == 0) throw InvalidArgument("build_minibatch_power: batch_size must be >= 1");
  const std::size_t d = src.dim();
  const double w_hat = estimate_survival(src, stack, batch_size);
  if (w_hat == 0.0) throw DegenerateState("build_minibatch_power: survival estimate is zero");
  std::vector<DenseMatrix> factors;
  Vector x(d);
  for (int l = 0; l < p; ++l) {
    DenseMatrix f(d, d);
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < batch_size; ++i) {
      draw_or_throw(src, x);
      if (!stack.passes(x)) continue;
      ++accepted;
      f.add_outer(1.0, x);
    }
    if (accepted == 0) throw DegenerateState("build_minibatch_power: minibatch rejected every sample");
    for (double& v : f.data) v *= w_hat / static_cast<double>(accepted);
    factors.push_back(std::move(f));
  }
  return MatrixPowerEstimate(std::move(factors), d);
}

/// Direction of M_hat z where M_hat is a product of p fresh minibatch
/// second moments, applied on the fly. Positive scalars (the survival factor)
/// do not change the direction and are skipped.
inline bool streaming_power_direction(SampleSource& src, const FilterStack& stack, int p, std::size_t batch_size,
                                      Vector& z, MemoryMeter* meter = nullptr) {
  if (!normalize_in_place(z)) return false;
  for (int l = 0; l < p; ++l) {
    z = stream_second_moment_apply(src, stack, batch_size, z, meter);
    if (!normalize_in_place(z)) return false;
  }
  return true;
}

/// Max over reps of y^T Sigma_hat y / |y|^2, y from fresh minibatch powers and
/// Sigma_hat a fresh normalized minibatch second moment.
inline double approx_power_iteration(SampleSource& src, const FilterStack& stack, int p, int reps,
                                     std::size_t batch_size, Rng& rng, MemoryMeter* meter = nullptr) {
  if (reps < 1) throw InvalidArgument("approx_power_iteration: reps must be >= 1");
  const std::size_t d = src.dim();
  double best = 0.0;
  for (int r = 0; r < reps; ++r) {
    Vector y = gaussian_vector(d, rng);
    auto hold = lease(meter, d);
    bool ok = false;
    for (int attempt = 0; attempt < 8 && !ok; ++attempt) {
      if (attempt > 0) y = gaussian_vector(d, rng);
      ok = streaming_power_direction(src, stack, p, batch_size, y, meter);
    }
    if (!ok) throw DegenerateState("approx_power_iteration: iterate vanished after 8 attempts");
    const Vector sy = stream_second_moment_apply(src, stack, batch_size, y, meter);
    best = std::max(best, dot(y, sy));
  }
  return best;
}

}  // namespace rpca
