#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rpca/errors.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca {

/// Ground-truth tag carried by generated data. Never read by the algorithms.
enum class Label : std::uint8_t { Unknown, Inlier, Outlier };

inline const char* to_string(Label l) {
  switch (l) {
    case Label::Inlier: return "inlier";
    case Label::Outlier: return "outlier";
    default: return "unknown";
  }
}

/// Immutable, contiguous n x d sample storage with optional labels.
class PointSet {
 public:
  PointSet(std::size_t dim, std::vector<double> coords, std::vector<Label> labels = {})
      : dim_(dim), coords_(std::move(coords)), labels_(std::move(labels)) {
    if (dim_ == 0) throw InvalidArgument("PointSet: dimension must be positive");
    if (coords_.size() % dim_ != 0) throw InvalidArgument("PointSet: coordinate count is not a multiple of dim");
    if (!all_finite(coords_)) throw InvalidArgument("PointSet: non-finite coordinate");
    if (!labels_.empty() && labels_.size() != size())
      throw InvalidArgument("PointSet: label count does not match point count");
  }

  static PointSet from_rows(const std::vector<Vector>& rows, std::vector<Label> labels = {}) {
    if (rows.empty()) throw InvalidArgument("PointSet::from_rows: no rows");
    const std::size_t d = rows.front().size();
    std::vector<double> coords;
    coords.reserve(rows.size() * d);
    for (const auto& r : rows) {
      require_same_dim(d, r.size(), "PointSet::from_rows");
      coords.insert(coords.end(), r.begin(), r.end());
    }
    return PointSet(d, std::move(coords), std::move(labels));
  }

  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }

  bool has_labels() const noexcept { return !labels_.empty(); }
  Label label(std::size_t i) const { return labels_.empty() ? Label::Unknown : labels_[i]; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  const std::vector<double>& coords() const noexcept { return coords_; }

  /// Copy with every coordinate multiplied by c.
  PointSet scaled(double c) const {
    std::vector<double> out(coords_);
    for (double& x : out) x *= c;
    return PointSet(dim_, std::move(out), labels_);
  }

 private:
  std::size_t dim_;
  std::vector<double> coords_;
  std::vector<Label> labels_;
};

/// One compacted hard-thresholding filter: keep x iff (v^T x)^2 <= threshold_sq.
struct FilterEntry {
  Vector direction;
  double threshold_sq;

  FilterEntry(Vector dir, double thr) : direction(std::move(dir)), threshold_sq(thr) {
    if (!(threshold_sq > 0.0)) throw InvalidArgument("FilterEntry: threshold must be positive");
    if (!all_finite(direction)) throw InvalidArgument("FilterEntry: non-finite direction");
  }

  bool passes(std::span<const double> x) const noexcept {
    const double s = dot(direction, x);
    return s * s <= threshold_sq;
  }
};

/// Norm prune plus an ordered list of filters; the complete description of
/// the current binary weights. Value type: appending yields a new revision.
class FilterStack {
 public:
  FilterStack() = default;
  explicit FilterStack(double prune_radius_sq) : prune_radius_sq_(prune_radius_sq) {
    if (!(prune_radius_sq_ >= 0.0)) throw InvalidArgument("FilterStack: prune radius must be nonnegative");
  }

  double prune_radius_sq() const noexcept { return prune_radius_sq_; }
  const std::vector<FilterEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  FilterStack with_entry(FilterEntry e) const {
    if (!entries_.empty()) require_same_dim(entries_.front().direction.size(), e.direction.size(), "FilterStack");
    FilterStack next = *this;
    next.entries_.push_back(std::move(e));
    return next;
  }

  FilterStack with_prune(double prune_radius_sq) const {
    FilterStack next = *this;
    next.prune_radius_sq_ = prune_radius_sq;
    if (!(prune_radius_sq >= 0.0)) throw InvalidArgument("FilterStack: prune radius must be nonnegative");
    return next;
  }

  /// Unchecked weight evaluation for hot loops.
  bool passes(std::span<const double> x) const noexcept {
    if (!(squared_norm(x) <= prune_radius_sq_)) return false;
    for (const auto& e : entries_)
      if (!e.passes(x)) return false;
    return true;
  }

  /// Real numbers needed to store this stack.
  std::size_t stored_scalars() const noexcept {
    std::size_t n = 1;
    for (const auto& e : entries_) n += e.direction.size() + 1;
    return n;
  }

 private:
  double prune_radius_sq_ = std::numeric_limits<double>::infinity();
  std::vector<FilterEntry> entries_;
};

/// w(x) in {0,1} as defined by the stack.
inline int evaluate_weight(const FilterStack& stack, std::span<const double> x) {
  for (const auto& e : stack.entries()) require_same_dim(e.direction.size(), x.size(), "evaluate_weight");
  return stack.passes(x) ? 1 : 0;
}

/// A point set together with a filter stack and the cached weights it induces.
/// Copies share the points and the weight mask.
class WeightedDataset {
 public:
  explicit WeightedDataset(std::shared_ptr<const PointSet> points, FilterStack stack = {})
      : points_(std::move(points)), stack_(std::move(stack)) {
    if (!points_) throw InvalidArgument("WeightedDataset: null point set");
    for (const auto& e : stack_.entries()) require_same_dim(e.direction.size(), points_->dim(), "WeightedDataset");
    auto mask = std::make_shared<std::vector<std::uint8_t>>(points_->size());
    std::size_t alive = 0;
    for (std::size_t i = 0; i < points_->size(); ++i) {
      (*mask)[i] = stack_.passes((*points_)[i]) ? 1 : 0;
      alive += (*mask)[i];
    }
    mask_ = std::move(mask);
    survivors_ = alive;
  }

  explicit WeightedDataset(PointSet points, FilterStack stack = {})
      : WeightedDataset(std::make_shared<const PointSet>(std::move(points)), std::move(stack)) {}

  /// New revision with one more filter; only current survivors are re-tested.
  WeightedDataset with_entry(FilterEntry e) const {
    require_same_dim(e.direction.size(), dim(), "WeightedDataset::with_entry");
    WeightedDataset next(*this, stack_.with_entry(e));
    auto mask = std::make_shared<std::vector<std::uint8_t>>(*mask_);
    std::size_t alive = 0;
    const FilterEntry& added = next.stack_.entries().back();
    for (std::size_t i = 0; i < size(); ++i) {
      if ((*mask)[i] && !added.passes((*points_)[i])) (*mask)[i] = 0;
      alive += (*mask)[i];
    }
    next.mask_ = std::move(mask);
    next.survivors_ = alive;
    return next;
  }

  WeightedDataset with_stack(FilterStack stack) const { return WeightedDataset(points_, std::move(stack)); }

  const PointSet& points() const noexcept { return *points_; }
  std::shared_ptr<const PointSet> shared_points() const noexcept { return points_; }
  const FilterStack& stack() const noexcept { return stack_; }
  std::size_t size() const noexcept { return points_->size(); }
  std::size_t dim() const noexcept { return points_->dim(); }
  std::span<const double> operator[](std::size_t i) const { return (*points_)[i]; }
  int weight(std::size_t i) const { return (*mask_)[i]; }
  const std::vector<std::uint8_t>& weights() const noexcept { return *mask_; }
  std::size_t survivor_count() const noexcept { return survivors_; }

 private:
  WeightedDataset(const WeightedDataset& base, FilterStack stack)
      : points_(base.points_), stack_(std::move(stack)), mask_(base.mask_), survivors_(base.survivors_) {}

  std::shared_ptr<const PointSet> points_;
  FilterStack stack_;
  std::shared_ptr<const std::vector<std::uint8_t>> mask_;
  std::size_t survivors_ = 0;
};

/// E_P[w(X)] for the uniform distribution over the points.
inline double surviving_mass(const WeightedDataset& ds) {
  if (ds.size() == 0) throw InvalidArgument("surviving_mass: empty dataset");
  return static_cast<double>(ds.survivor_count()) / static_cast<double>(ds.size());
}

/// Algorithm parameters. Zero in a count field means "derive from the schedule".
struct AlgoConfig {
  double eps = 0.05;
  double gamma = 1.0;
  double gamma_max = 1.0;
  double c_outer = 30.0;  // t_end = c_outer * ln^2(d/eps) / gamma
  double c_inner = 3.0;   // base power = c_inner * ln d
  int t_end = 0;
  int k_end = 0;
  int t_end_cap = 10000;
  double delta_slack = -1.0;  // streaming filter slack; negative = derive per iteration
  std::uint64_t seed = 0;
  int boost_reps = 1;
  double cert_failure_prob = 0.0;  // 0 = 1 / (k_end * t_end)

  // certificate
  double c_acc = 2.0;
  double c_pi = 4.0;
  double c_cert = 4.0;

  // streaming estimators
  double c_q = 200.0;
  double c_m = 1.0;
  double c_batch = 1.0;
  std::size_t batch_size = 0;       // 0 = derived from the operator-closeness bound
  std::size_t mean_batch = 0;       // 0 = derived from r^4 d^2 / gamma^2
  std::size_t mean_batch_cap = 1000000;
  std::size_t batch_size_cap = 1000000;
  int stream_reps = 0;              // boosting reps for stream estimators; 0 = ceil(log2(1/fail))
  std::uint64_t max_samples = 0;    // 0 = unlimited
  std::size_t memory_budget = 0;    // 0 = 50 * (d * 200 + (1/eps) * ln(1/fail))
  bool strict_gamma = false;        // streaming requires 20 eps < gamma

  // diagnostics / execution
  bool record_potential = false;
  unsigned threads = 1;

  /// Throws InvalidArgument on a config that violates the stability setting.
  void validate() const {
    const std::string cons = std::string("20*eps ") + (strict_gamma ? "<" : "<=") + " gamma <= gamma_max";
    const std::string vals = " (eps=" + std::to_string(eps) + ", gamma=" + std::to_string(gamma) +
                             ", gamma_max=" + std::to_string(gamma_max) + ")";
    if (!(eps >= 0.0 && eps < 0.5)) throw InvalidArgument("eps must lie in [0, 1/2) with " + cons + vals);
    const double floor = 20.0 * eps;
    const bool low_ok = strict_gamma ? gamma > floor * (1.0 + 1e-12) : gamma >= floor * (1.0 - 1e-12);
    if (!(gamma > 0.0) || !low_ok || !(gamma <= gamma_max))
      throw InvalidArgument("constraint " + cons + " violated" + vals);
    if (boost_reps < 1) throw InvalidArgument("boost_reps must be >= 1");
    if (t_end < 0 || k_end < 0) throw InvalidArgument("t_end/k_end must be nonnegative");
    if (!(cert_failure_prob >= 0.0 && cert_failure_prob < 1.0)) throw InvalidArgument("cert_failure_prob must lie in [0,1)");
    if (c_inner <= 0.0 || c_outer <= 0.0 || c_pi <= 0.0 || c_cert <= 0.0 || c_acc < 0.0)
      throw InvalidArgument("schedule constants must be positive");
  }

  static double log_dim(std::size_t d) { return std::log(std::max<double>(static_cast<double>(d), 2.0)); }

  /// p = ceil(c_inner * ln d), at least 1.
  int base_power(std::size_t d) const {
    return std::max(1, static_cast<int>(std::ceil(c_inner * log_dim(d))));
  }

  int resolved_t_end(std::size_t d) const {
    if (t_end > 0) return t_end;
    if (eps <= 0.0) return t_end_cap;
    const double l = std::log(std::max(static_cast<double>(d) / eps, 2.0));
    const double t = std::ceil(c_outer * l * l / gamma);
    return static_cast<int>(std::clamp(t, 1.0, static_cast<double>(t_end_cap)));
  }

  int resolved_k_end(std::size_t d) const {
    if (k_end > 0) return k_end;
    const double ratio = std::log(std::max(static_cast<double>(d) / gamma, 2.0)) / (gamma * log_dim(d));
    return std::max(1, static_cast<int>(std::ceil(std::log2(std::max(1.0, ratio)))) + 1);
  }

  double resolved_failure_prob(std::size_t d) const {
    if (cert_failure_prob > 0.0) return cert_failure_prob;
    return 1.0 / (static_cast<double>(resolved_k_end(d)) * static_cast<double>(resolved_t_end(d)));
  }

  /// Certificate power: ceil((c_cert / gamma) * ln(d / gamma)).
  int certificate_power(std::size_t d) const {
    const double l = std::log(std::max(static_cast<double>(d) / gamma, 2.0));
    return std::max(1, static_cast<int>(std::ceil(c_cert / gamma * l)));
  }

  /// Reference power iteration length: ceil((c_pi / gamma) * ln(d / (gamma * fail))).
  int reference_power(std::size_t d, double fail_prob) const {
    const double l = std::log(std::max(static_cast<double>(d) / (gamma * fail_prob), 2.0));
    return std::max(1, static_cast<int>(std::ceil(c_pi / gamma * l)));
  }

  /// Default gamma for a given eps: max(20 eps, eps ln(1/eps)).
  static double default_gamma(double eps) {
    if (eps <= 0.0) return 0.05;
    return std::max(20.0 * eps, eps * std::log(1.0 / eps));
  }
};

}  // namespace rpca
