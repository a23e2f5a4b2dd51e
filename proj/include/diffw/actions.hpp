#pragma once

// Actions on Diff_W and related checks: GL(n) conjugation, the Schwartz
// estimate for that action, the sine counterexample for bounded weights,
// multiplier domination, and the semidirect product C_W(U, G) x| Diff_W
// with action omega(phi, gamma) = gamma o (phi + id)^{-1}.

#include "diffw/mapping_group.hpp"

#include <random>

namespace diffw {

class LinearAction {
 public:
  explicit LinearAction(Mat t) : t_(std::move(t)) {
    if (t_.rows() != t_.cols()) throw DimensionMismatch("LinearAction: T must be square");
    Eigen::FullPivLU<Mat> lu(t_);
    if (!lu.isInvertible()) throw std::invalid_argument("LinearAction: T is singular");
    inv_ = lu.inverse();
    const double res = spectral_norm(t_ * inv_ - Mat::Identity(t_.rows(), t_.cols()));
    if (!(res < 1e-12)) throw std::invalid_argument("LinearAction: T is too ill-conditioned to invert reliably");
    norm_ = spectral_norm(t_);
    inv_norm_ = spectral_norm(inv_);
  }

  static LinearAction identity(int n) { return LinearAction(Mat::Identity(n, n)); }

  const Mat& matrix() const { return t_; }
  const Mat& inverse() const { return inv_; }
  double norm() const { return norm_; }
  double inverse_norm() const { return inv_norm_; }
  int dim() const { return static_cast<int>(t_.rows()); }

 private:
  Mat t_, inv_;
  double norm_ = 0.0, inv_norm_ = 0.0;
};

/// x -> T phi(T^{-1} x), the chart coordinate of T o (phi + id) o T^{-1}.
inline ChartDiffeo gl_conjugate(const LinearAction& t, const ChartDiffeo& phi) {
  if (t.dim() != phi.dim()) throw DimensionMismatch("gl_conjugate: dimension mismatch");
  return phi.with_phi(compose(linear(t.matrix()), compose(phi.phi(), linear(t.inverse()))));
}

struct SchwartzBoundOptions {
  double epsilon = 0.1;
  int degree = 2;
  int samples = 1000;
  std::uint64_t seed = 7;
  /// ||A|| = a_factor * ||T|| * eps. The estimate assumes a_factor <= 2.
  double a_factor = 2.0;
  double slack = 1e-9;
  int max_rejections = 100000;
};

struct SchwartzBoundReport {
  int samples = 0;
  int violations = 0;
  double max_ratio = 0.0;
  bool premise_violated = false;
  bool pass() const { return max_ratio <= 1.0 + 1e-9; }
};

inline void to_json(nlohmann::json& j, const SchwartzBoundReport& r) {
  j = nlohmann::json{{"samples", r.samples},
                     {"violations", r.violations},
                     {"max_ratio", r.max_ratio},
                     {"premise_violated", r.premise_violated},
                     {"pass", r.pass()}};
}

/// Samples S with ||S - T|| < eps, ||S^{-1}|| < 2||T^{-1}||, ||S|| < 2||T||,
/// A with the given norm and x, then evaluates
///   ||x||^n ||S A x|| / (eps 2^{n+3} ||T||^2 ||T^{-1}||^{n+1} ||S x||^{n+1}).
inline SchwartzBoundReport schwartz_action_bound_check(const LinearAction& t, const SchwartzBoundOptions& opt = {}) {
  if (!(opt.epsilon > 0)) throw std::invalid_argument("schwartz_action_bound_check: epsilon must be positive");
  if (opt.degree < 0) throw std::invalid_argument("schwartz_action_bound_check: degree must be non-negative");
  const int n = t.dim();
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto gaussian_matrix = [&] {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
    return m;
  };

  const double deg = opt.degree;
  const double coeff = opt.epsilon * std::pow(2.0, deg + 3.0) * t.norm() * t.norm() * std::pow(t.inverse_norm(), deg + 1.0);
  const double a_norm = opt.a_factor * t.norm() * opt.epsilon;

  SchwartzBoundReport rep;
  rep.premise_violated = opt.a_factor > 2.0;
  int rejections = 0;
  while (rep.samples < opt.samples) {
    Mat e = gaussian_matrix();
    e *= unit(rng) * opt.epsilon / spectral_norm(e);
    const Mat s = t.matrix() + e;
    Eigen::FullPivLU<Mat> lu(s);
    const bool ok = spectral_norm(e) < opt.epsilon && lu.isInvertible() && spectral_norm(s) < 2.0 * t.norm() &&
                    spectral_norm(lu.inverse()) < 2.0 * t.inverse_norm();
    if (!ok) {
      if (++rejections > opt.max_rejections)
        throw std::domain_error("schwartz_action_bound_check: epsilon too large for T, cannot sample S");
      continue;
    }
    Mat a = gaussian_matrix();
    a *= a_norm / spectral_norm(a);
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = normal(rng);

    const double lhs = std::pow(x.norm(), deg) * (s * (a * x)).norm();
    const double rhs = coeff * std::pow((s * x).norm(), deg + 1.0);
    const double ratio = lhs / rhs;
    ++rep.samples;
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (lhs > rhs * (1.0 + opt.slack)) ++rep.violations;
  }
  return rep;
}

/// Sample points of a one-dimensional domain together with x = n pi.
inline std::vector<Vec> counterexample_points(int n, const SampleDomain& dom) {
  if (dom.dimension != 1) throw DimensionMismatch("bc_counterexample: domain must be one-dimensional");
  auto pts = dom.grid();
  pts.push_back(Vec::Constant(1, n * M_PI));
  return pts;
}

/// Sampled sup |sin(s x) - sin(x)| over `pts`.
inline double sine_perturbation_sup(double s, const std::vector<Vec>& pts) {
  const SmoothMap g = sine_profile(Vec::Ones(1), Vec::Constant(1, s)) - sine_profile(Vec::Ones(1), Vec::Ones(1));
  const auto prof = weighted_profile(g, Weight::one(), 0, pts);
  return prof.empty() ? 0.0 : *std::max_element(prof.begin(), prof.end());
}

/// ||sin((1 + 1/(2n)) .) - sin||_{1,0} on the grid extended by n pi.
inline double bc_counterexample(int n, const SampleDomain& dom) {
  if (n < 1) throw std::invalid_argument("bc_counterexample: n must be positive");
  return sine_perturbation_sup(1.0 + 1.0 / (2.0 * n), counterexample_points(n, dom));
}

inline constexpr double kDominanceCap = 1e6;

/// Sufficient-only test that M is a k-multiplier for W on the grid: every
/// |f| ||D^l M|| (f in W, l <= k) is bounded by C |g| for some g in W with
/// C <= cap.
inline bool multiplier_check(const SmoothMap& m, const WeightFamily& w, int k, const SampleDomain& dom,
                             double cap = kDominanceCap) {
  if (k < 0 || k > 2) throw UnsupportedOrder("multiplier_check: k must be <= 2");
  const auto pts = dom.grid();
  std::vector<std::vector<double>> gvals;
  for (const auto& g : w.members()) {
    std::vector<double> v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) v[i] = std::abs(g(pts[i]));
    gvals.push_back(std::move(v));
  }
  for (const auto& f : w.members()) {
    for (int l = 0; l <= k; ++l) {
      const auto prof = weighted_profile(m, f, l, pts);
      bool dominated = false;
      for (const auto& gv : gvals) {
        bool ok = true;
        for (std::size_t i = 0; i < pts.size() && ok; ++i) ok = prof[i] <= cap * gv[i];
        if (ok) {
          dominated = true;
          break;
        }
      }
      if (!dominated) return false;
    }
  }
  return true;
}

struct SemidirectElement {
  MappingElement map_part;
  ChartDiffeo diff_part;
};

inline SemidirectElement semidirect_identity(const MatrixGroup& g, int dim, const WeightFamily& family, int order,
                                             const SampleDomain& dom) {
  return SemidirectElement{MappingElement::identity(g, dim, family, order, dom), ChartDiffeo::identity(dim, dom)};
}

/// omega(phi, gamma) = gamma o (phi + id)^{-1}
inline MappingElement act(const ChartDiffeo& phi, const MappingElement& gamma) {
  if (phi.dim() != gamma.dim()) throw DimensionMismatch("act: dimension mismatch");
  return gamma.with_xi(compose(gamma.xi(), invert_chart(phi).full_map()));
}

/// (h1, g1)(h2, g2) = (h1 . omega(g1, h2), g1 g2)
inline SemidirectElement semidirect_multiply(const SemidirectElement& a, const SemidirectElement& b) {
  return SemidirectElement{multiply(a.map_part, act(a.diff_part, b.map_part)),
                           compose_chart(a.diff_part, b.diff_part)};
}

/// (h, g)^{-1} = (omega(g^{-1}, h^{-1}), g^{-1}); omega(g^{-1}, .) is
/// precomposition with g + id.
inline SemidirectElement semidirect_invert(const SemidirectElement& a) {
  const ChartDiffeo ginv = invert_chart(a.diff_part);
  const MappingElement hinv = invert(a.map_part);
  return SemidirectElement{hinv.with_xi(compose(hinv.xi(), a.diff_part.full_map())), ginv};
}

/// max over the grid of ||exp(xi_a) - exp(xi_b)|| plus the chart-coordinate
/// distance of the diff parts.
inline double semidirect_distance(const SemidirectElement& a, const SemidirectElement& b) {
  double worst = 0.0;
  for (const auto& x : a.diff_part.domain().grid()) {
    const double dm = spectral_norm(a.map_part.value(x) - b.map_part.value(x));
    const double dd = (a.diff_part.phi()(x) - b.diff_part.phi()(x)).norm();
    worst = std::max(worst, dm + dd);
  }
  return worst;
}

}  // namespace diffw
