#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rpca/core_types.hpp"
#include "rpca/errors.hpp"
#include "rpca/vector_ops.hpp"

namespace rpca::oracle {

struct DenseSpectrum {
  Vector eigenvalues;        // descending
  DenseMatrix eigenvectors;  // column j pairs with eigenvalues[j]

  Vector vector(std::size_t j) const { return eigenvectors.column(j); }
};

inline double off_diagonal_norm_sq(const DenseMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return s;
}

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix.
inline DenseSpectrum dense_spectrum(const DenseMatrix& m) {
  if (m.rows != m.cols) throw InvalidArgument("dense_spectrum: matrix is not square");
  const std::size_t n = m.rows;
  if (n == 0 || n > 256) throw InvalidArgument("dense_spectrum: dimension must be in [1, 256]");
  if (!all_finite(m.data)) throw InvalidArgument("dense_spectrum: non-finite entry");
  const double fro = m.frobenius_norm();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-10 * std::max(1.0, fro))
        throw InvalidArgument("dense_spectrum: matrix is not symmetric");

  DenseMatrix a = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
  DenseMatrix v = DenseMatrix::identity(n);

  const double target = 1e-30 * fro * fro;
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal_norm_sq(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  DenseSpectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, order[j]);
  }
  return out;
}

/// V f(Lambda) V^T.
template <class F>
DenseMatrix spectral_function(const DenseSpectrum& s, F f) {
  const std::size_t n = s.eigenvalues.size();
  DenseMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(s.eigenvalues[k]);
    if (fk == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = s.eigenvectors(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += vi * s.eigenvectors(j, k);
    }
  }
  return out;
}

inline double top_eigenvalue(const DenseMatrix& m) { return dense_spectrum(m).eigenvalues.front(); }

/// Materialized (1/n) sum w x x^T, optionally divided by the surviving mass.
inline DenseMatrix dense_second_moment(const WeightedDataset& ds, bool normalized = false) {
  const std::size_t d = ds.dim();
  DenseMatrix b(d, d);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds.weight(i)) b.add_outer(1.0, ds[i]);
  const double denom = normalized ? static_cast<double>(ds.survivor_count()) : static_cast<double>(ds.size());
  if (denom == 0.0) throw DegenerateState("dense_second_moment: no surviving points");
  for (double& x : b.data) x /= denom;
  return b;
}

inline DenseMatrix dense_second_moment(const PointSet& ps) { return dense_second_moment(WeightedDataset(ps)); }

/// B^p z through the eigendecomposition of B.
inline Vector dense_power_apply(const DenseMatrix& b, int p, std::span<const double> z) {
  const auto s = dense_spectrum(b);
  const auto m = spectral_function(s, [p](double l) { return std::pow(std::max(l, 0.0), p); });
  return m.apply(z);
}

/// u^T Sigma u / lambda_1(Sigma).
inline double metric_approx_ratio(std::span<const double> u, const DenseMatrix& sigma) {
  require_same_dim(sigma.rows, u.size(), "metric_approx_ratio");
  const double nu = norm(u);
  if (std::abs(nu - 1.0) > 1e-9) throw InvalidArgument("metric_approx_ratio: u must be a unit vector");
  const double top = top_eigenvalue(sigma);
  if (!(top > 0.0)) throw InvalidArgument("metric_approx_ratio: zero covariance");
  return sigma.quadratic_form(u) / top;
}

struct StoppingCondition {
  double lhs = 0.0;  // <Sigma, M^2>
  double rhs = 0.0;  // (1 - 250 gamma) <Sigma_{P_w}, M^2>
  bool holds = false;
};

/// Both sides use M = B^p rescaled by lambda_1(B)^p so large p cannot overflow;
/// the comparison is scale free.
inline StoppingCondition stopping_condition_truth(const DenseMatrix& sigma, const WeightedDataset& ds, int p,
                                                  double gamma) {
  if (ds.dim() > 64) throw UnsupportedDiagnostic("stopping_condition_truth: d > 64");
  require_same_dim(sigma.rows, ds.dim(), "stopping_condition_truth");
  const DenseMatrix b = dense_second_moment(ds, false);
  const auto s = dense_spectrum(b);
  const double top = s.eigenvalues.front();
  if (!(top > 0.0)) throw DegenerateState("stopping_condition_truth: zero second moment");
  const DenseMatrix m2 = spectral_function(s, [&](double l) { return std::pow(std::max(l, 0.0) / top, 2.0 * p); });
  const DenseMatrix sigma_w = dense_second_moment(ds, true);
  StoppingCondition out;
  out.lhs = frobenius_inner(sigma, m2);
  out.rhs = (1.0 - 250.0 * gamma) * frobenius_inner(sigma_w, m2);
  out.holds = out.lhs >= out.rhs;
  return out;
}

/// log tr(B^q), computed as log sum (l_i/l_1)^q + q log l_1.
inline double log_trace_power(const DenseMatrix& b, int q) {
  const auto s = dense_spectrum(b);
  const double top = s.eigenvalues.front();
  if (!(top > 0.0)) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (double l : s.eigenvalues) acc += std::pow(std::max(l, 0.0) / top, q);
  return std::log(acc) + q * std::log(top);
}

/// Falsification harness for stability: deletes the floor(eps n) points with
/// the largest |projection| along probe directions and reports the worst
/// multiplicative deviation max(rho, 1/rho) of the reweighted second moment
/// from Sigma along those directions. Passing it does not certify stability.
inline double stability_spotcheck(const PointSet& samples, const DenseMatrix& sigma, double eps, double gamma,
                                  int trials, Rng& rng) {
  (void)gamma;
  const std::size_t n = samples.size(), d = samples.dim();
  require_same_dim(sigma.rows, d, "stability_spotcheck");
  const std::size_t drop = static_cast<std::size_t>(std::floor(eps * static_cast<double>(n)));
  if (drop >= n) throw InvalidArgument("stability_spotcheck: eps removes every point");

  std::vector<Vector> probes;
  const auto emp = dense_spectrum(dense_second_moment(samples));
  const auto tru = dense_spectrum(sigma);
  for (std::size_t j = 0; j < d; ++j) {
    probes.push_back(emp.vector(j));
    probes.push_back(tru.vector(j));
  }
  for (int t = 0; t < trials; ++t) probes.push_back(normalized(gaussian_vector(d, rng)));

  // Full second moment once; each deletion only subtracts its dropped points.
  DenseMatrix total(d, d);
  for (std::size_t i = 0; i < n; ++i) total.add_outer(1.0, samples[i]);

  double worst = 1.0;
  std::vector<std::pair<double, std::size_t>> proj(n);
  for (const auto& v : probes) {
    for (std::size_t i = 0; i < n; ++i) proj[i] = {std::abs(dot(v, samples[i])), i};
    std::nth_element(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(drop), proj.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    DenseMatrix kept = total;
    for (std::size_t k = 0; k < drop; ++k) kept.add_outer(-1.0, samples[proj[k].second]);
    for (double& x : kept.data) x /= static_cast<double>(n - drop);
    for (const auto& u : probes) {
      const double truth = sigma.quadratic_form(u);
      if (!(truth > 1e-12)) continue;
      const double rho = kept.quadratic_form(u) / truth;
      worst = std::max(worst, std::max(rho, 1.0 / rho));
    }
  }
  return worst;
}

}  // namespace rpca::oracle
