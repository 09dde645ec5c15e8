#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rpca/errors.hpp"

namespace rpca {

using Vector = std::vector<double>;
using Rng = std::mt19937_64;

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw InvalidArgument(std::string(where) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline void scale_in_place(std::span<double> a, double c) {
  for (double& x : a) x *= c;
}

// out += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += c * x[i];
}

/// Scales `a` to unit length. Returns false (and leaves `a` untouched) when
/// the norm is zero or not finite.
inline bool normalize_in_place(std::span<double> a) {
  const double n = norm(a);
  if (!(n > 0.0) || !std::isfinite(n)) return false;
  scale_in_place(a, 1.0 / n);
  return true;
}

inline Vector normalized(Vector a) {
  if (!normalize_in_place(a)) throw DegenerateState("cannot normalize a zero vector");
  return a;
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Vector gaussian_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector g(d);
  for (double& x : g) x = normal(rng);
  return g;
}

inline Vector unit_vector(std::size_t d, std::size_t axis) {
  Vector e(d, 0.0);
  e.at(axis) = 1.0;
  return e;
}

/// Small dense row-major matrix. Only used by oracles, generators and the
/// dense minibatch factors; the algorithms themselves stay matrix-free.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> diag) {
    DenseMatrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  Vector column(std::size_t j) const {
    Vector c(rows);
    for (std::size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Vector apply(std::span<const double> z) const {
    require_same_dim(cols, z.size(), "DenseMatrix::apply");
    Vector out(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) out[i] = dot(row(i), z);
    return out;
  }

  double quadratic_form(std::span<const double> z) const { return dot(z, apply(z)); }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const { return norm(data); }

  void add_outer(double c, std::span<const double> x) {
    for (std::size_t i = 0; i < rows; ++i) {
      const double ci = c * x[i];
      for (std::size_t j = 0; j < cols; ++j) (*this)(i, j) += ci * x[j];
    }
  }
};

inline DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_dim(a.cols, b.rows, "DenseMatrix product");
  DenseMatrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

/// Frobenius inner product <A, B> = tr(A^T B).
inline double frobenius_inner(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_dim(a.data.size(), b.data.size(), "frobenius_inner");
  return dot(a.data, b.data);
}

}  // namespace rpca
