#pragma once

// Quasi-inversion for the monoid x * y = x + y - x y.
//
// Inside the unit ball the quasi-inverse is the negated Neumann series
//     QI(x) = -(x + x^2 + x^3 + ...),
// truncated once the geometric tail ||x||^{N+1} / (1 - ||x||) drops below
// series_tol. For matrix-valued maps the quasi-inverse is taken pointwise.

#include "diffw/weights.hpp"

#include <variant>

namespace diffw {

class NotQuasiInvertibleBySeries : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct QuasiInverseOptions {
  double series_tol = 1e-12;
  double residual_tol = 1e-10;
  int max_matrix_dim = 8;
};

/// Square-matrix-valued map on a sampled domain.
struct MatrixField {
  SmoothMap map;
  SampleDomain domain;
};

using AlgebraElement = std::variant<double, Mat, MatrixField>;

namespace detail {

inline int neumann_terms(double norm, double tol) {
  int n = 0;
  double tail = norm / (1.0 - norm);  // ||x||^{N+1}/(1-||x||) with N = 0
  while (tail >= tol) {
    ++n;
    tail *= norm;
  }
  return n;
}

}  // namespace detail

inline double algebra_norm(double x) { return std::abs(x); }
inline double algebra_norm(const Mat& x) { return spectral_norm(x); }
/// Sup over the grid of the spectral norm of the matrix values.
inline double algebra_norm(const MatrixField& x) {
  double s = 0.0;
  for (const auto& p : x.domain.grid()) s = std::max(s, spectral_norm(x.map.matrix_value(p)));
  return s;
}
inline double algebra_norm(const AlgebraElement& x) {
  return std::visit([](const auto& v) { return algebra_norm(v); }, x);
}

inline double quasi_invert(double x, const QuasiInverseOptions& opt = {}) {
  const double nx = std::abs(x);
  if (!(nx < 1.0)) throw NotQuasiInvertibleBySeries("quasi_invert: |x| >= 1, Neumann series not applicable");
  const int terms = detail::neumann_terms(nx, opt.series_tol);
  double power = x, s = 0.0;
  for (int i = 1; i <= terms; ++i) {
    s += power;
    power *= x;
  }
  return -s;
}

inline Mat quasi_invert(const Mat& x, const QuasiInverseOptions& opt = {}) {
  if (x.rows() != x.cols()) throw DimensionMismatch("quasi_invert: matrix must be square");
  if (x.rows() > opt.max_matrix_dim) throw DimensionMismatch("quasi_invert: matrix dimension above cap");
  const double nx = spectral_norm(x);
  if (!(nx < 1.0)) throw NotQuasiInvertibleBySeries("quasi_invert: ||x|| >= 1, Neumann series not applicable");
  const int terms = detail::neumann_terms(nx, opt.series_tol);
  Mat power = x;
  Mat s = Mat::Zero(x.rows(), x.cols());
  for (int i = 1; i <= terms; ++i) {
    s += power;
    power = power * x;
  }
  return -s;
}

/// Pointwise quasi-inverse of a matrix-valued map. Fails if the sampled sup
/// norm is not below 1.
inline MatrixField quasi_invert(const MatrixField& x, const QuasiInverseOptions& opt = {}) {
  if (x.map.rows() != x.map.cols()) throw DimensionMismatch("quasi_invert: map values must be square");
  if (!(algebra_norm(x) < 1.0))
    throw NotQuasiInvertibleBySeries("quasi_invert: sup norm >= 1, Neumann series not applicable");
  const SmoothMap m = x.map;
  const int n = m.rows();
  SmoothMap y = fd_wrapped_matrix(
      [m, n, opt](const Vec& p) { return flatten_row_major(quasi_invert(Mat(m.matrix_value(p)), opt)); }, m.dim_in(),
      n, n);
  return MatrixField{y, x.domain};
}

inline AlgebraElement quasi_invert(const AlgebraElement& x, const QuasiInverseOptions& opt = {}) {
  return std::visit([&](const auto& v) -> AlgebraElement { return quasi_invert(v, opt); }, x);
}

/// max(||x + y - x y||, ||y + x - y x||).
inline double check_quasi_identity(double x, double y) {
  return std::max(std::abs(x + y - x * y), std::abs(y + x - y * x));
}
inline double check_quasi_identity(const Mat& x, const Mat& y) {
  return std::max(spectral_norm(x + y - x * y), spectral_norm(y + x - y * x));
}
inline double check_quasi_identity(const MatrixField& x, const MatrixField& y) {
  double worst = 0.0;
  for (const auto& p : x.domain.grid()) {
    const Mat a = x.map.matrix_value(p), b = y.map.matrix_value(p);
    worst = std::max(worst, check_quasi_identity(a, b));
  }
  return worst;
}
inline double check_quasi_identity(const AlgebraElement& x, const AlgebraElement& y) {
  if (x.index() != y.index()) throw DimensionMismatch("check_quasi_identity: incompatible variants");
  return std::visit(
      [&](const auto& a) -> double {
        using T = std::decay_t<decltype(a)>;
        return check_quasi_identity(a, std::get<T>(y));
      },
      x);
}

}  // namespace diffw
