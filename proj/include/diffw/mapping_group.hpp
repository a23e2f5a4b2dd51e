#pragma once

// Weighted mapping groups C_W(U, G) for matrix groups G, in the chart
// gamma = exp o xi with xi : U -> Lie(G). Multiplication and inversion are
// pointwise; products are logged back with the principal logarithm.

#include "diffw/regularity.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace diffw {

class ChartOverflow : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class GroupKind { general_linear, special_orthogonal_3, unipotent_upper };

class MatrixGroup {
 public:
  static MatrixGroup general_linear(int n) { return MatrixGroup(GroupKind::general_linear, n); }
  static MatrixGroup so3() { return MatrixGroup(GroupKind::special_orthogonal_3, 3); }
  static MatrixGroup unipotent(int n) { return MatrixGroup(GroupKind::unipotent_upper, n); }

  GroupKind kind() const { return kind_; }
  int n() const { return n_; }
  std::string name() const {
    switch (kind_) {
      case GroupKind::general_linear: return "GL(" + std::to_string(n_) + ")";
      case GroupKind::special_orthogonal_3: return "SO(3)";
      case GroupKind::unipotent_upper: return "U(" + std::to_string(n_) + ")";
    }
    return "?";
  }

  /// Elements handed out as chart points stay within this distance of I.
  double chart_radius() const { return 0.5; }
  /// The principal logarithm is used only where ||g - I|| < 1.
  double log_radius() const { return 1.0; }

  Mat exp(const Mat& xi) const { return xi.exp(); }

  Mat log(const Mat& g) const {
    const double dist = spectral_norm(g - Mat::Identity(n_, n_));
    if (!(dist < log_radius()))
      throw ChartOverflow("log: ||g - I|| = " + std::to_string(dist) + " outside the logarithm's radius");
    Mat l = g.log();
    if (kind_ == GroupKind::special_orthogonal_3) l = 0.5 * (l - l.transpose());
    if (kind_ == GroupKind::unipotent_upper) l = l.triangularView<Eigen::StrictlyUpper>();
    return l;
  }

  /// Membership of xi in the Lie algebra up to `tol`.
  bool in_algebra(const Mat& xi, double tol = 1e-12) const {
    if (xi.rows() != n_ || xi.cols() != n_) return false;
    switch (kind_) {
      case GroupKind::general_linear: return true;
      case GroupKind::special_orthogonal_3: return (xi + xi.transpose()).cwiseAbs().maxCoeff() <= tol;
      case GroupKind::unipotent_upper: {
        Mat lower = xi.triangularView<Eigen::Lower>();
        return lower.cwiseAbs().maxCoeff() <= tol;
      }
    }
    return false;
  }

 private:
  MatrixGroup(GroupKind k, int n) : kind_(k), n_(n) {
    if (n < 1 || n > 4) throw std::invalid_argument("MatrixGroup: n must be between 1 and 4");
  }
  GroupKind kind_;
  int n_;
};

/// Skew matrix of w in R^3.
inline Mat hat3(const Vec& w) {
  Mat k(3, 3);
  k << 0, -w(2), w(1), w(2), 0, -w(0), -w(1), w(0), 0;
  return k;
}

class MappingElement {
 public:
  MappingElement(MatrixGroup group, SmoothMap xi, WeightFamily family, int order, SampleDomain domain)
      : group_(std::move(group)), xi_(std::move(xi)), family_(std::move(family)), order_(order), domain_(std::move(domain)) {
    if (xi_.rows() != group_.n() || xi_.cols() != group_.n())
      throw DimensionMismatch("MappingElement: xi must take n x n matrix values");
    if (domain_.dimension != xi_.dim_in()) throw DimensionMismatch("MappingElement: domain dimension mismatch");
    if (order_ < 0 || order_ > 2) throw UnsupportedOrder("MappingElement: order must be <= 2");
  }

  static MappingElement identity(const MatrixGroup& g, int dim, WeightFamily family, int order, SampleDomain domain) {
    const int n = g.n();
    return MappingElement(g, reshaped(zero_map(dim, n * n), n, n), std::move(family), order, std::move(domain));
  }

  const MatrixGroup& group() const { return group_; }
  const SmoothMap& xi() const { return xi_; }
  const WeightFamily& family() const { return family_; }
  int order() const { return order_; }
  const SampleDomain& domain() const { return domain_; }
  int dim() const { return xi_.dim_in(); }

  Mat coordinate(const Vec& x) const { return xi_.matrix_value(x); }
  /// gamma(x) = exp(xi(x))
  Mat value(const Vec& x) const { return group_.exp(coordinate(x)); }

  /// max over the grid of ||exp(xi(x)) - I||.
  double sup_distance() const {
    double s = 0.0;
    const Mat id = Mat::Identity(group_.n(), group_.n());
    for (const auto& x : domain_.grid()) s = std::max(s, spectral_norm(value(x) - id));
    return s;
  }

  MappingElement with_xi(SmoothMap xi) const { return MappingElement(group_, std::move(xi), family_, order_, domain_); }

 private:
  MatrixGroup group_;
  SmoothMap xi_;
  WeightFamily family_;
  int order_;
  SampleDomain domain_;
};

namespace detail {

inline SmoothMap pointwise_log_map(const MatrixGroup& g, std::function<Mat(const Vec&)> group_value, int dim) {
  const int n = g.n();
  return fd_wrapped_matrix([g, f = std::move(group_value)](const Vec& x) { return flatten_row_major(g.log(f(x))); },
                           dim, n, n);
}

inline void check_log_radius(const MatrixGroup& g, const SampleDomain& dom, const std::function<Mat(const Vec&)>& f) {
  const Mat id = Mat::Identity(g.n(), g.n());
  for (const auto& x : dom.grid()) {
    const double d = spectral_norm(f(x) - id);
    if (!(d < g.log_radius()))
      throw ChartOverflow("product leaves the logarithm's radius (||g - I|| = " + std::to_string(d) + ")");
  }
}

}  // namespace detail

/// xi(x) = log(exp(xi_a(x)) exp(xi_b(x))).
inline MappingElement multiply(const MappingElement& a, const MappingElement& b) {
  if (a.group().kind() != b.group().kind() || a.group().n() != b.group().n() || a.dim() != b.dim())
    throw DimensionMismatch("multiply: incompatible mapping elements");
  const auto& g = a.group();
  std::function<Mat(const Vec&)> prod = [a, b](const Vec& x) { return Mat(a.value(x) * b.value(x)); };
  detail::check_log_radius(g, a.domain(), prod);
  return a.with_xi(detail::pointwise_log_map(g, prod, a.dim()));
}

/// exp(xi)^{-1} = exp(-xi)
inline MappingElement invert(const MappingElement& a) { return a.with_xi(scaled(-1.0, a.xi())); }

/// ex_G o v. In the exponential chart the coordinate is v itself.
inline MappingElement group_exponential(const MatrixGroup& g, const SmoothMap& v, const WeightFamily& family, int order,
                                        const SampleDomain& dom) {
  MappingElement e(g, v, family, order, dom);
  const double d = e.sup_distance();
  if (!(d < g.chart_radius()))
    throw ChartOverflow("group_exponential: ||exp(v) - I|| = " + std::to_string(d) + " leaves the chart radius");
  return e;
}

/// eta(x, t_i), i = 0..M, for eta' = eta Gamma(t)(x), eta(0) = I.
inline std::vector<Mat> mapping_trajectory(const TimeField& field, int steps, const Vec& x) {
  const int n = field.rows();
  if (field.cols() != n) throw DimensionMismatch("mapping_trajectory: field must take square matrix values");
  const double h = 1.0 / steps;
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(Mat::Identity(n, n));
  auto f = [&](double t, const Mat& eta) -> Mat { return eta * unflatten_row_major(field.value(t, x), n, n); };
  for (int i = 0; i < steps; ++i) out.push_back(rk4_step(f, i * h, out.back(), h));
  return out;
}

/// Left evolution of a Lie(G)-valued time field, computed pointwise with RK4
/// and logged into chart coordinates.
inline MappingElement evolve_mapping(const MatrixGroup& g, const TimeField& field, int steps, const WeightFamily& family,
                                     int order, const SampleDomain& dom) {
  if (field.rows() != g.n() || field.cols() != g.n()) throw DimensionMismatch("evolve_mapping: field shape mismatch");
  if (steps < 1) throw StepCountTooSmall("evolve_mapping: need at least one step");
  std::function<Mat(const Vec&)> end = [field, steps](const Vec& x) { return mapping_trajectory(field, steps, x).back(); };
  detail::check_log_radius(g, dom, end);
  return MappingElement(g, detail::pointwise_log_map(g, end, field.dim_in()), family, order, dom);
}

/// xi in C_W (finite seminorms up to order k) or, with `decaying`, in the
/// subspace whose seminorms vanish at infinity.
inline bool is_member(const SmoothMap& xi, const WeightFamily& family, int k, bool decaying, const SampleDomain& dom) {
  if (decaying) return is_decaying(xi, family, k, dom).decaying;
  for (const auto& f : family.members())
    for (int l = 0; l <= k; ++l)
      if (!std::isfinite(seminorm(xi, f, l, dom))) return false;
  return true;
}

inline bool is_member(const MappingElement& a, bool decaying) {
  return is_member(a.xi(), a.family(), a.order(), decaying, a.domain());
}

}  // namespace diffw
