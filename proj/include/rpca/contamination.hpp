#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/oracle.hpp"
#include "rpca/sample_source.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca {

enum class InlierFamily { Gaussian, BoundedSphereMix };

struct Spike {
  Vector direction;  // normalized on use
  double variance = 0.0;
};

/// Covariance diag(base_diag) + sum variance * u u^T with u = direction / |direction|.
struct InlierSpec {
  InlierFamily family = InlierFamily::Gaussian;
  std::size_t dim = 0;
  Vector base_diag;  // empty = all ones
  std::vector<Spike> spikes;

  void validate() const {
    if (dim == 0) throw InvalidArgument("InlierSpec: dim must be positive");
    if (!base_diag.empty() && base_diag.size() != dim) throw InvalidArgument("InlierSpec: base_diag has wrong length");
    for (double b : base_diag)
      if (!(b >= 0.0) || !std::isfinite(b)) throw InvalidArgument("InlierSpec: base_diag must be finite and >= 0");
    for (const auto& s : spikes) {
      if (s.direction.size() != dim) throw InvalidArgument("InlierSpec: spike direction has wrong length");
      if (!(s.variance >= 0.0) || !std::isfinite(s.variance)) throw InvalidArgument("InlierSpec: spike variance must be >= 0");
      if (!(norm(s.direction) > 0.0)) throw InvalidArgument("InlierSpec: zero spike direction");
    }
  }

  double base(std::size_t i) const { return base_diag.empty() ? 1.0 : base_diag[i]; }

  DenseMatrix covariance() const {
    validate();
    DenseMatrix s(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) s(i, i) = base(i);
    for (const auto& sp : spikes) s.add_outer(sp.variance, normalized(sp.direction));
    return s;
  }

  /// r with |X| <= r sqrt(d |Sigma|_op) almost surely (bounded family only).
  double radius_r() const {
    const double latent = static_cast<double>(dim + spikes.size());
    return std::sqrt(1.5 * latent / static_cast<double>(dim));
  }

  static InlierSpec spiked_identity(std::size_t d, std::size_t axis, double extra,
                                    InlierFamily fam = InlierFamily::Gaussian) {
    InlierSpec s;
    s.family = fam;
    s.dim = d;
    s.spikes.push_back({unit_vector(d, axis), extra});
    return s;
  }
};

/// x = D^{1/2} y_0 + sum sqrt(var_k) y_k u_k with a (d + s)-dimensional
/// isotropic latent y: standard Gaussian, or a uniform point on a sphere of
/// radius sqrt(m/2) or sqrt(3m/2) with equal probability (m = d + s).
class InlierSampler {
 public:
  explicit InlierSampler(InlierSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    sqrt_base_.resize(spec_.dim);
    for (std::size_t i = 0; i < spec_.dim; ++i) sqrt_base_[i] = std::sqrt(spec_.base(i));
    for (const auto& s : spec_.spikes) {
      dirs_.push_back(normalized(s.direction));
      sqrt_var_.push_back(std::sqrt(s.variance));
    }
    latent_.resize(spec_.dim + dirs_.size());
  }

  std::size_t dim() const noexcept { return spec_.dim; }
  const InlierSpec& spec() const noexcept { return spec_; }

  void draw(std::span<double> out, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& y : latent_) y = normal(rng);
    if (spec_.family == InlierFamily::BoundedSphereMix) {
      const double m = static_cast<double>(latent_.size());
      const double radius = std::bernoulli_distribution(0.5)(rng) ? std::sqrt(m / 2.0) : std::sqrt(1.5 * m);
      const double n = norm(latent_);
      if (n > 0.0) scale_in_place(latent_, radius / n);
    }
    const std::size_t d = spec_.dim;
    for (std::size_t i = 0; i < d; ++i) out[i] = sqrt_base_[i] * latent_[i];
    for (std::size_t k = 0; k < dirs_.size(); ++k) axpy(sqrt_var_[k] * latent_[d + k], dirs_[k], out);
  }

 private:
  InlierSpec spec_;
  Vector sqrt_base_;
  std::vector<Vector> dirs_;
  Vector sqrt_var_;
  Vector latent_;
};

inline PointSet gen_inliers(const InlierSpec& spec, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgument("gen_inliers: n must be >= 1");
  InlierSampler s(spec);
  std::vector<double> coords(n * spec.dim);
  for (std::size_t i = 0; i < n; ++i) s.draw(std::span<double>(coords.data() + i * spec.dim, spec.dim), rng);
  return PointSet(spec.dim, std::move(coords), std::vector<Label>(n, Label::Inlier));
}

enum class AdversaryKind { None, OrthogonalSpike, MultiDirectionHide, SchattenBlind };

struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::None;
  double rate = 0.0;
  int spike_axis = -1;           // -1: smallest diagonal variance of Sigma
  double magnitude = 2.0;        // orthogonal spike multiplier m
  int hidden_dirs = 2;           // multi-direction hide
  double hide_multiplier = 1.5;  // added variance per hidden axis, in units of |Sigma|_op

  void validate() const {
    if (!(rate >= 0.0 && rate < 0.5)) throw InvalidArgument("AdversarySpec: rate must lie in [0, 1/2)");
    if (!(magnitude > 0.0) || !(hide_multiplier > 0.0) || hidden_dirs < 1)
      throw InvalidArgument("AdversarySpec: magnitude, hide_multiplier and hidden_dirs must be positive");
  }
};

/// Places outlier points for a fixed true covariance.
class OutlierPlacer {
 public:
  OutlierPlacer(const AdversarySpec& adv, const DenseMatrix& sigma) : adv_(adv), d_(sigma.rows) {
    adv_.validate();
    if (adv_.kind == AdversaryKind::None || adv_.rate == 0.0) return;
    const auto spec = oracle::dense_spectrum(sigma);
    const double top = spec.eigenvalues.front();
    if (!(top > 0.0)) throw InvalidArgument("OutlierPlacer: zero covariance");
    std::vector<std::size_t> by_var(d_);
    std::iota(by_var.begin(), by_var.end(), 0);
    std::stable_sort(by_var.begin(), by_var.end(), [&](std::size_t a, std::size_t b) { return sigma(a, a) < sigma(b, b); });

    switch (adv_.kind) {
      case AdversaryKind::OrthogonalSpike: {
        const std::size_t j = adv_.spike_axis >= 0 ? static_cast<std::size_t>(adv_.spike_axis) : by_var.front();
        if (j >= d_) throw InvalidArgument("OutlierPlacer: spike axis out of range");
        targets_.push_back(unit_vector(d_, j));
        amplitude_ = adv_.magnitude * std::sqrt(top / adv_.rate);
        break;
      }
      case AdversaryKind::MultiDirectionHide: {
        const std::size_t h = std::min<std::size_t>(static_cast<std::size_t>(adv_.hidden_dirs), d_);
        for (std::size_t k = 0; k < h; ++k) targets_.push_back(unit_vector(d_, by_var[k]));
        amplitude_ = std::sqrt(adv_.hide_multiplier * top * static_cast<double>(h) / adv_.rate);
        break;
      }
      case AdversaryKind::SchattenBlind: {
        for (std::size_t k = 0; k < d_; ++k)
          if (spec.eigenvalues[k] <= 1e-9 * top) targets_.push_back(spec.vector(k));
        if (targets_.empty()) throw InvalidArgument("SCHATTEN_BLIND requires a rank-deficient covariance");
        // Second moment along each null direction matches the inlier level (1 - eps) top.
        amplitude_ = std::sqrt((1.0 - adv_.rate) * top * static_cast<double>(targets_.size()) / adv_.rate);
        break;
      }
      default: break;
    }
  }

  bool active() const noexcept { return !targets_.empty(); }

  /// The i-th outlier: target (i / 2) mod |targets| with sign alternating in i.
  void place(std::size_t i, std::span<double> out) const {
    const auto& t = targets_[(i / 2) % targets_.size()];
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    for (std::size_t c = 0; c < d_; ++c) out[c] = sign * amplitude_ * t[c];
  }

  double amplitude() const noexcept { return amplitude_; }
  const std::vector<Vector>& targets() const noexcept { return targets_; }

 private:
  AdversarySpec adv_;
  std::size_t d_;
  std::vector<Vector> targets_;
  double amplitude_ = 0.0;
};

/// Custom adversary: receives the clean set and the chosen indices and
/// writes replacement coordinates (row-major, |idx| x d).
using AdversaryCallback =
    std::function<void(const PointSet& clean, std::span<const std::size_t> idx, std::vector<double>& out, Rng& rng)>;

inline std::vector<std::size_t> choose_replaced(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 0.5)) throw InvalidArgument("strong_contaminate: rate must lie in [0, 1/2)");
  const auto m = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> idx;
  idx.reserve(m);
  std::sample(all.begin(), all.end(), std::back_inserter(idx), m, rng);
  return idx;
}

inline PointSet strong_contaminate(const PointSet& clean, std::span<const std::size_t> idx,
                                   const std::vector<double>& replacement) {
  const std::size_t d = clean.dim();
  if (replacement.size() != idx.size() * d) throw InvalidArgument("strong_contaminate: replacement size mismatch");
  std::vector<double> coords = clean.coords();
  std::vector<Label> labels = clean.has_labels() ? clean.labels() : std::vector<Label>(clean.size(), Label::Inlier);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(replacement.begin() + static_cast<std::ptrdiff_t>(k * d), d,
                coords.begin() + static_cast<std::ptrdiff_t>(idx[k] * d));
    labels[idx[k]] = Label::Outlier;
  }
  return PointSet(d, std::move(coords), std::move(labels));
}

/// Replaces exactly floor(rate n) uniformly chosen points.
inline PointSet strong_contaminate(const PointSet& clean, const AdversarySpec& adv, const DenseMatrix& sigma, Rng& rng) {
  adv.validate();
  require_same_dim(sigma.rows, clean.dim(), "strong_contaminate");
  if (adv.kind == AdversaryKind::None || adv.rate == 0.0) return clean;
  const auto idx = choose_replaced(clean.size(), adv.rate, rng);
  const OutlierPlacer placer(adv, sigma);
  std::vector<double> rep(idx.size() * clean.dim());
  for (std::size_t k = 0; k < idx.size(); ++k)
    placer.place(k, std::span<double>(rep.data() + k * clean.dim(), clean.dim()));
  return strong_contaminate(clean, idx, rep);
}

inline PointSet strong_contaminate(const PointSet& clean, double rate, const AdversaryCallback& adversary, Rng& rng) {
  const auto idx = choose_replaced(clean.size(), rate, rng);
  std::vector<double> rep(idx.size() * clean.dim());
  adversary(clean, idx, rep, rng);
  return strong_contaminate(clean, idx, rep);
}

/// Each draw is an outlier with probability adv.rate, an inlier otherwise.
inline std::unique_ptr<SampleSource> tv_contaminated_source(const InlierSpec& inlier, const AdversarySpec& adv,
                                                            std::uint64_t seed) {
  adv.validate();
  auto sampler = std::make_shared<InlierSampler>(inlier);
  auto placer = std::make_shared<OutlierPlacer>(adv, inlier.covariance());
  auto rng = std::make_shared<Rng>(seed);
  const double rate = placer->active() ? adv.rate : 0.0;
  return std::make_unique<GeneratorSource>(inlier.dim, [=](std::span<double> out) {
    if (rate > 0.0 && std::bernoulli_distribution(rate)(*rng)) {
      placer->place(std::uniform_int_distribution<std::size_t>(0, 2 * placer->targets().size() - 1)(*rng), out);
      return Label::Outlier;
    }
    sampler->draw(out, *rng);
    return Label::Inlier;
  });
}

}  // namespace rpca
