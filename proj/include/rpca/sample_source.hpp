#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca {

enum class SourceOrigin { Synthetic, FileReplay, External };

/// Single-consumer stream of samples. next() writes one sample into `out`
/// and returns false once the stream is exhausted.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t dim() const = 0;
  virtual bool next(std::span<double> out) = 0;
  virtual Label last_label() const { return Label::Unknown; }
  virtual SourceOrigin origin() const { return SourceOrigin::External; }
};

/// Stream of scalar scores; nullopt means exhausted.
using ScoreSource = std::function<std::optional<double>()>;

/// Delivers the points of a PointSet once, in order.
class ReplaySource final : public SampleSource {
 public:
  explicit ReplaySource(std::shared_ptr<const PointSet> points, SourceOrigin origin = SourceOrigin::External)
      : points_(std::move(points)), origin_(origin) {
    if (!points_) throw InvalidArgument("ReplaySource: null point set");
  }

  std::size_t dim() const override { return points_->dim(); }
  bool next(std::span<double> out) override {
    if (pos_ >= points_->size()) return false;
    auto x = (*points_)[pos_];
    std::copy(x.begin(), x.end(), out.begin());
    last_ = points_->label(pos_);
    ++pos_;
    return true;
  }
  Label last_label() const override { return last_; }
  SourceOrigin origin() const override { return origin_; }
  std::size_t position() const { return pos_; }

 private:
  std::shared_ptr<const PointSet> points_;
  SourceOrigin origin_;
  std::size_t pos_ = 0;
  Label last_ = Label::Unknown;
};

/// I.i.d. uniform draws (with replacement) from a finite population. Unbounded.
class PopulationSampler final : public SampleSource {
 public:
  PopulationSampler(std::shared_ptr<const PointSet> points, std::uint64_t seed)
      : points_(std::move(points)), rng_(seed) {
    if (!points_ || points_->empty()) throw InvalidArgument("PopulationSampler: empty population");
  }

  std::size_t dim() const override { return points_->dim(); }
  bool next(std::span<double> out) override {
    std::uniform_int_distribution<std::size_t> pick(0, points_->size() - 1);
    const std::size_t i = pick(rng_);
    auto x = (*points_)[i];
    std::copy(x.begin(), x.end(), out.begin());
    last_ = points_->label(i);
    return true;
  }
  Label last_label() const override { return last_; }
  SourceOrigin origin() const override { return SourceOrigin::Synthetic; }

 private:
  std::shared_ptr<const PointSet> points_;
  Rng rng_;
  Label last_ = Label::Unknown;
};

/// Draws from a callback. Used for synthetic distributions.
class GeneratorSource final : public SampleSource {
 public:
  using Draw = std::function<Label(std::span<double>)>;
  GeneratorSource(std::size_t dim, Draw draw) : dim_(dim), draw_(std::move(draw)) {
    if (dim_ == 0) throw InvalidArgument("GeneratorSource: dimension must be positive");
  }
  std::size_t dim() const override { return dim_; }
  bool next(std::span<double> out) override {
    last_ = draw_(out);
    return true;
  }
  Label last_label() const override { return last_; }
  SourceOrigin origin() const override { return SourceOrigin::Synthetic; }

 private:
  std::size_t dim_;
  Draw draw_;
  Label last_ = Label::Unknown;
};

/// Wraps a source, counts deliveries and enforces an optional budget.
/// Exhaustion (of the budget or the inner source) raises StreamExhausted.
class CountingSource final : public SampleSource {
 public:
  explicit CountingSource(SampleSource& inner, std::uint64_t budget = 0) : inner_(inner), budget_(budget) {}

  std::size_t dim() const override { return inner_.dim(); }
  bool next(std::span<double> out) override {
    if (budget_ != 0 && consumed_ >= budget_) throw StreamExhausted("sample budget exhausted", consumed_);
    if (!inner_.next(out)) throw StreamExhausted("source exhausted", consumed_);
    ++consumed_;
    if (inner_.last_label() == Label::Outlier) ++outliers_;
    return true;
  }
  Label last_label() const override { return inner_.last_label(); }
  SourceOrigin origin() const override { return inner_.origin(); }

  std::uint64_t consumed() const noexcept { return consumed_; }
  std::uint64_t outliers_seen() const noexcept { return outliers_; }
  std::uint64_t budget() const noexcept { return budget_; }

 private:
  SampleSource& inner_;
  std::uint64_t budget_;
  std::uint64_t consumed_ = 0;
  std::uint64_t outliers_ = 0;
};

/// Pull one sample or throw.
inline void draw_or_throw(SampleSource& src, std::span<double> out, std::uint64_t consumed_hint = 0) {
  if (!src.next(out)) throw StreamExhausted("source exhausted", consumed_hint);
}

}  // namespace rpca
