#pragma once

#include <cmath>
#include <vector>

#include "rpca/rpca.hpp"

namespace rpca::testing {

inline PointSet rows(std::initializer_list<std::initializer_list<double>> r) {
  std::vector<Vector> v;
  for (auto& row : r) v.emplace_back(row);
  return PointSet::from_rows(v);
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline PointSet gaussian_points(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> c(n * d);
  std::normal_distribution<double> g;
  for (double& x : c) x = g(rng);
  return PointSet(d, std::move(c));
}

inline DenseMatrix random_psd(std::size_t d, Rng& rng) {
  DenseMatrix a(d, d);
  std::normal_distribution<double> g;
  for (double& x : a.data) x = g(rng);
  return a * transpose(a);
}

// 2d points +-sqrt(d) b_i with b_i the columns of B^{1/2}; their
// (unnormalized) second moment is exactly B.
inline PointSet points_with_moment(const DenseMatrix& b) {
  const std::size_t d = b.rows;
  const auto root = oracle::spectral_function(oracle::dense_spectrum(b), [](double l) { return std::sqrt(std::max(l, 0.0)); });
  std::vector<Vector> r;
  for (std::size_t i = 0; i < d; ++i) {
    Vector c = root.column(i);
    scale_in_place(c, std::sqrt(static_cast<double>(d)));
    r.push_back(c);
    scale_in_place(c, -1.0);
    r.push_back(c);
  }
  return PointSet::from_rows(r);
}

// Cycles through a fixed list of points forever.
class CycleSource final : public SampleSource {
 public:
  explicit CycleSource(std::vector<Vector> pts) : pts_(std::move(pts)) {}
  std::size_t dim() const override { return pts_.front().size(); }
  bool next(std::span<double> out) override {
    const auto& p = pts_[i_++ % pts_.size()];
    std::copy(p.begin(), p.end(), out.begin());
    return true;
  }

 private:
  std::vector<Vector> pts_;
  std::size_t i_ = 0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s /= static_cast<double>(v.size() - 1);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

}  // namespace rpca::testing
