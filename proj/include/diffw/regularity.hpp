#pragma once

// Right evolution on Diff_W in chart coordinates:
//     Gamma'(t) = p(t) o (Gamma(t) + id),   Gamma(0) = 0.
//
// The right-hand side acts on Gamma only through composition with the full
// map, so Gamma(t)(x0) = y(t) - x0 where y solves the point flow
// y' = p(t)(y), y(0) = x0. Every query point is integrated independently with
// classical RK4 on the fixed grid t_i = i / M.

#include "diffw/diff_group.hpp"

namespace diffw {

class StepCountTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class RefineRequired : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// t in [0,1] -> sum_k c_k(t) v_k for fixed smooth maps v_k.
class TimeField {
 public:
  struct Term {
    std::function<double(double)> coeff;
    SmoothMap field;
  };

  explicit TimeField(std::vector<Term> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw std::invalid_argument("TimeField: no terms");
    for (const auto& t : terms_)
      if (t.field.dim_in() != dim_in() || t.field.dim_out() != terms_[0].field.dim_out())
        throw DimensionMismatch("TimeField: term shapes differ");
  }

  static TimeField constant(SmoothMap v) { return TimeField({Term{[](double) { return 1.0; }, std::move(v)}}); }
  static TimeField modulated(std::function<double(double)> a, SmoothMap v) {
    return TimeField({Term{std::move(a), std::move(v)}});
  }
  /// x -> A x for all t
  static TimeField linear(const Mat& a) { return constant(diffw::linear(a)); }
  /// x -> (A0 + t A1) x
  static TimeField linear_path(const Mat& a0, const Mat& a1) {
    return TimeField({Term{[](double) { return 1.0; }, diffw::linear(a0)}, Term{[](double t) { return t; }, diffw::linear(a1)}});
  }

  int dim_in() const { return terms_[0].field.dim_in(); }
  int dim_out() const { return terms_[0].field.dim_out(); }
  int rows() const { return terms_[0].field.rows(); }
  int cols() const { return terms_[0].field.cols(); }
  const std::vector<Term>& terms() const { return terms_; }

  SmoothMap at(double t) const {
    std::vector<SmoothMap> parts;
    for (const auto& term : terms_) parts.push_back(scaled(term.coeff(t), term.field));
    return sum(std::move(parts));
  }

  Vec value(double t, const Vec& y) const {
    Vec v = Vec::Zero(dim_out());
    for (const auto& term : terms_) {
      const double c = term.coeff(t);
      if (c != 0.0) v += c * term.field(y);
    }
    return v;
  }

  Mat jacobian(double t, const Vec& y) const {
    Mat m = Mat::Zero(dim_out(), dim_in());
    for (const auto& term : terms_) {
      const double c = term.coeff(t);
      if (c != 0.0) m += c * term.field.jacobian(y);
    }
    return m;
  }

  /// tau -> (t1 - t0) p(t0 + (t1 - t0) tau), the field driving [t0, t1]
  /// rescaled to [0, 1].
  TimeField restricted(double t0, double t1) const {
    std::vector<Term> out;
    for (const auto& term : terms_) {
      auto c = term.coeff;
      out.push_back(Term{[c, t0, t1](double tau) { return (t1 - t0) * c(t0 + (t1 - t0) * tau); }, term.field});
    }
    return TimeField(std::move(out));
  }

  /// tau -> -p(1 - tau)
  TimeField reversed_negated() const {
    std::vector<Term> out;
    for (const auto& term : terms_) {
      auto c = term.coeff;
      out.push_back(Term{[c](double tau) { return -c(1.0 - tau); }, term.field});
    }
    return TimeField(std::move(out));
  }

 private:
  std::vector<Term> terms_;
};

/// p(t) o (Gamma + id)
inline SmoothMap rhs(double t, const SmoothMap& gamma, const TimeField& p) {
  if (gamma.dim_in() != p.dim_in() || gamma.dim_out() != p.dim_in() || p.dim_out() != p.dim_in())
    throw DimensionMismatch("rhs: dimension mismatch");
  return compose(p.at(t), gamma + identity_map(gamma.dim_in()));
}

/// max over the time samples of ||p(t)||_{1,1}.
inline double lipschitz_bound(const TimeField& p, const std::vector<double>& time_samples, const SampleDomain& dom) {
  double k = 0.0;
  for (double t : time_samples) k = std::max(k, seminorm(p.at(t), 1, dom));
  return k;
}

inline std::vector<double> uniform_times(int count) {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i) ts.push_back(count == 1 ? 0.0 : static_cast<double>(i) / (count - 1));
  return ts;
}

/// One classical RK4 step for y' = f(t, y).
template <class F, class State>
State rk4_step(const F& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + 0.5 * h * k1));
  const State k3 = f(t + 0.5 * h, State(y + 0.5 * h * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

struct EvolveOptions {
  double ode_tol = 1e-6;
  /// Points whose flows are checked for the knot defect; defaults to the grid.
  std::optional<std::vector<Vec>> probes;
  bool check_steps = true;
  int lipschitz_time_samples = 11;
};

class EvolutionCurve {
 public:
  EvolutionCurve(TimeField p, int steps, SampleDomain domain)
      : state_(std::make_shared<State>(State{std::move(p), steps, std::move(domain), detail::next_node_id(), 0.0})) {}

  const TimeField& field() const { return state_->p; }
  int steps() const { return state_->steps; }
  const SampleDomain& domain() const { return state_->domain; }
  double knot(std::size_t i) const { return static_cast<double>(i) / state_->steps; }
  std::size_t knot_count() const { return static_cast<std::size_t>(state_->steps) + 1; }
  double defect() const { return state_->defect; }

  /// y(t_i) for the flow started at x0, i = 0..M.
  std::vector<Vec> trajectory(const Vec& x0) const {
    struct Entry {
      std::uint64_t id = 0;
      Vec x;
      std::vector<Vec> ys;
    };
    thread_local Entry cache;
    if (cache.id == state_->id && cache.x.size() == x0.size() && cache.x == x0) return cache.ys;
    const auto& p = state_->p;
    const double h = 1.0 / state_->steps;
    std::vector<Vec> ys;
    ys.reserve(knot_count());
    ys.push_back(x0);
    auto f = [&p](double t, const Vec& y) { return p.value(t, y); };
    for (int i = 0; i < state_->steps; ++i) ys.push_back(rk4_step(f, i * h, ys.back(), h));
    cache = Entry{state_->id, x0, ys};
    return ys;
  }

  /// Gamma(t_i) as a chart element; jets come from differences of the flow.
  ChartDiffeo at_knot(std::size_t i) const {
    if (i >= knot_count()) throw std::out_of_range("at_knot: index beyond the last knot");
    auto self = *this;
    const int n = field().dim_in();
    SmoothMap g = fd_wrapped([self, i](const Vec& x) { return Vec(self.trajectory(x)[i] - x); }, n, n);
    return ChartDiffeo(std::move(g), domain());
  }

  ChartDiffeo final_value() const { return at_knot(knot_count() - 1); }

  /// Gamma(t) from cubic Hermite interpolation between knots.
  ChartDiffeo at(double t) const {
    if (t < 0.0 || t > 1.0) throw std::out_of_range("EvolutionCurve::at: t outside [0,1]");
    auto self = *this;
    const int n = field().dim_in();
    SmoothMap g = fd_wrapped([self, t](const Vec& x) { return Vec(self.dense_point(x, t) - x); }, n, n);
    return ChartDiffeo(std::move(g), domain());
  }

  Vec dense_point(const Vec& x0, double t) const {
    const auto ys = trajectory(x0);
    const int m = state_->steps;
    const double h = 1.0 / m;
    const int i = std::min(m - 1, static_cast<int>(std::floor(t * m)));
    const double s = (t - i * h) / h;
    const Vec& y0 = ys[static_cast<std::size_t>(i)];
    const Vec& y1 = ys[static_cast<std::size_t>(i) + 1];
    const Vec f0 = state_->p.value(i * h, y0);
    const Vec f1 = state_->p.value((i + 1) * h, y1);
    const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1;
  }

  /// max over probes and knots of ||Gamma'(t_i)(x) - p(t_i)(x + Gamma(t_i)(x))||,
  /// with Gamma' from five-point differences over the knots.
  double knot_defect(const std::vector<Vec>& probes) const {
    const int m = state_->steps;
    if (m < 4) throw StepCountTooSmall("evolve: at least 4 steps are needed for the defect check");
    const double h = 1.0 / m;
    double worst = 0.0;
    for (const auto& x0 : probes) {
      const auto ys = trajectory(x0);
      for (int i = 0; i <= m; ++i) {
        auto y = [&](int k) -> const Vec& { return ys[static_cast<std::size_t>(k)]; };
        Vec d;
        if (i >= 2 && i <= m - 2)
          d = (-y(i + 2) + 8.0 * y(i + 1) - 8.0 * y(i - 1) + y(i - 2)) / (12.0 * h);
        else if (i < 2)
          d = (-25.0 * y(i) + 48.0 * y(i + 1) - 36.0 * y(i + 2) + 16.0 * y(i + 3) - 3.0 * y(i + 4)) / (12.0 * h);
        else
          d = (25.0 * y(i) - 48.0 * y(i - 1) + 36.0 * y(i - 2) - 16.0 * y(i - 3) + 3.0 * y(i - 4)) / (12.0 * h);
        worst = std::max(worst, (d - state_->p.value(i * h, y(i))).norm());
      }
    }
    return worst;
  }

  /// DGamma(t_i)(x0) for all knots, by central differences of the flow with
  /// one Richardson step.
  std::vector<Mat> knot_jacobians(const Vec& x0) const {
    const int n = static_cast<int>(x0.size());
    std::vector<Mat> out(knot_count(), Mat::Zero(n, n));
    const double h = detail::fd_step(x0, 1e-5);
    for (int k = 0; k < n; ++k) {
      auto diff = [&](double s) {
        Vec xp = x0, xm = x0;
        xp(k) += s;
        xm(k) -= s;
        const auto yp = trajectory(xp);
        const auto ym = trajectory(xm);
        std::vector<Vec> d(knot_count());
        for (std::size_t i = 0; i < knot_count(); ++i) d[i] = (yp[i] - ym[i]) / (2.0 * s) - Vec::Unit(n, k);
        return d;
      };
      const auto coarse = diff(h);
      const auto fine = diff(0.5 * h);
      for (std::size_t i = 0; i < knot_count(); ++i) out[i].col(k) = (4.0 * fine[i] - coarse[i]) / 3.0;
    }
    return out;
  }

  /// ||Gamma(t_i)||_{1,1} on the sample grid for every knot.
  std::vector<double> knot_lip_norms() const {
    std::vector<double> lips(knot_count(), 0.0);
    for (const auto& x : domain().grid()) {
      const auto js = knot_jacobians(x);
      for (std::size_t i = 0; i < js.size(); ++i) lips[i] = std::max(lips[i], spectral_norm(js[i]));
    }
    return lips;
  }

 private:
  friend EvolutionCurve evolve(const TimeField&, int, const SampleDomain&, const EvolveOptions&);

  struct State {
    TimeField p;
    int steps;
    SampleDomain domain;
    std::uint64_t id;
    double defect;
  };
  std::shared_ptr<State> state_;
};

/// RK4 right evolution of p with M fixed steps, followed by the knot defect
/// check. Requires M >= ceil(10 K) for the Lipschitz bound K of p.
inline EvolutionCurve evolve(const TimeField& p, int steps, const SampleDomain& dom, const EvolveOptions& opt = {}) {
  if (p.dim_in() != p.dim_out()) throw DimensionMismatch("evolve: field must map R^n to R^n");
  if (dom.dimension != p.dim_in()) throw DimensionMismatch("evolve: domain dimension mismatch");
  if (steps < 4) throw StepCountTooSmall("evolve: at least 4 steps are required");
  if (opt.check_steps) {
    const double k = lipschitz_bound(p, uniform_times(opt.lipschitz_time_samples), dom);
    if (steps < static_cast<int>(std::ceil(10.0 * k)))
      throw StepCountTooSmall("evolve: " + std::to_string(steps) + " steps below ceil(10 K) for K = " + std::to_string(k));
  }
  EvolutionCurve curve(p, steps, dom);
  const double defect = curve.knot_defect(opt.probes ? *opt.probes : dom.grid());
  curve.state_->defect = defect;
  if (defect > opt.ode_tol)
    throw RefineRequired("evolve: knot defect " + std::to_string(defect) + " exceeds tolerance; increase the step count");
  return curve;
}

struct AuxReport {
  double max_residual = 0.0;
  std::size_t points = 0;
  Vec worst_point;
  double worst_time = 0.0;
};

inline void to_json(nlohmann::json& j, const AuxReport& r) {
  std::vector<double> wp(r.worst_point.data(), r.worst_point.data() + r.worst_point.size());
  j = nlohmann::json{{"max_residual", r.max_residual}, {"points", r.points}, {"worst_point", wp}, {"worst_time", r.worst_time}};
}

/// Integrates Phi' = (Dp(t) o (Gamma(t) + id)) (Phi + I), Phi(0) = 0, along
/// each probe's flow with the curve's RK4 grid, and compares Phi(t_i) with
/// the difference-quotient derivative of Gamma(t_i).
inline AuxReport aux_derivative_check(const TimeField& p, const EvolutionCurve& curve, const std::vector<Vec>& probes) {
  const int n = p.dim_in();
  const int m = curve.steps();
  const double h = 1.0 / m;
  using Pair = std::pair<Vec, Mat>;
  AuxReport rep;
  for (const auto& x0 : probes) {
    const auto fd = curve.knot_jacobians(x0);
    Vec y = x0;
    Mat phi = Mat::Zero(n, n);
    auto f = [&p, n](double t, const Vec& yy, const Mat& ph) {
      return Pair{p.value(t, yy), p.jacobian(t, yy) * (ph + Mat::Identity(n, n))};
    };
    for (int i = 0; i <= m; ++i) {
      const double res = (phi - fd[static_cast<std::size_t>(i)]).norm();
      if (rep.worst_point.size() == 0 || res > rep.max_residual) {
        rep.max_residual = res;
        rep.worst_point = x0;
        rep.worst_time = i * h;
      }
      if (i == m) break;
      const double t = i * h;
      const auto [ky1, kp1] = f(t, y, phi);
      const auto [ky2, kp2] = f(t + 0.5 * h, Vec(y + 0.5 * h * ky1), Mat(phi + 0.5 * h * kp1));
      const auto [ky3, kp3] = f(t + 0.5 * h, Vec(y + 0.5 * h * ky2), Mat(phi + 0.5 * h * kp2));
      const auto [ky4, kp4] = f(t + h, Vec(y + h * ky3), Mat(phi + h * kp3));
      y += (h / 6.0) * (ky1 + 2.0 * ky2 + 2.0 * ky3 + ky4);
      phi += (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    }
    ++rep.points;
  }
  return rep;
}

}  // namespace diffw
