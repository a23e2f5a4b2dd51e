#pragma once

// The monoid End_W and its unit group Diff_W in the global chart
// phi <-> phi + id.
//
//   multiplication   m(g, h)  = g o (h + id) + h
//   inversion        I(phi)   = (phi + id)^{-1} - id
//
// I(phi) is evaluated lazily per query point y as the fixed point of
// psi <- -phi(psi + y), a contraction with factor ||phi||_{1,1} whenever phi
// lies in U_W = { ||phi||_{1,1} < 1 }.

#include "diffw/quasi_inverse.hpp"

#include <mutex>

namespace diffw {

class NotInUW : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DiffGroupOptions {
  double margin = 0.02;
  double fp_tol = 1e-12;
  int max_iter = 200;
};

class ChartDiffeo {
 public:
  explicit ChartDiffeo(SmoothMap phi, std::optional<SampleDomain> domain = std::nullopt, DiffGroupOptions opt = {})
      : phi_(std::move(phi)),
        domain_(domain ? *domain : SampleDomain::defaults(phi_.dim_in())),
        opt_(opt),
        cache_(std::make_shared<Cache>()) {
    if (phi_.dim_in() != phi_.dim_out()) throw DimensionMismatch("ChartDiffeo: phi must map R^n to R^n");
    if (domain_.dimension != phi_.dim_in()) throw DimensionMismatch("ChartDiffeo: domain dimension mismatch");
  }

  static ChartDiffeo identity(int n, std::optional<SampleDomain> domain = std::nullopt) {
    return ChartDiffeo(zero_map(n, n), domain);
  }

  const SmoothMap& phi() const { return phi_; }
  const SampleDomain& domain() const { return domain_; }
  const DiffGroupOptions& options() const { return opt_; }
  int dim() const { return phi_.dim_in(); }

  /// ||phi||_{1,0} on the sample domain.
  double sup_norm() const {
    fill();
    return cache_->sup;
  }
  /// ||phi||_{1,1} on the sample domain.
  double lip_norm() const {
    fill();
    return cache_->lip;
  }
  bool in_UW() const { return lip_norm() < 1.0 - opt_.margin; }

  /// x -> x + phi(x)
  Vec apply(const Vec& x) const { return x + phi_(x); }
  SmoothMap full_map() const { return phi_ + identity_map(dim()); }

  ChartDiffeo with_phi(SmoothMap phi) const { return ChartDiffeo(std::move(phi), domain_, opt_); }

 private:
  struct Cache {
    std::once_flag once;
    double sup = 0.0;
    double lip = 0.0;
  };

  void fill() const {
    std::call_once(cache_->once, [this] {
      cache_->sup = seminorm(phi_, 0, domain_);
      cache_->lip = seminorm(phi_, 1, domain_);
    });
  }

  SmoothMap phi_;
  SampleDomain domain_;
  DiffGroupOptions opt_;
  std::shared_ptr<Cache> cache_;
};

/// Spot check that x -> x + phi(x) separates grid points:
/// ||F(x) - F(y)|| >= (1 - L) ||x - y|| on neighbouring and far pairs.
inline bool injective_on_grid(const ChartDiffeo& phi) {
  const auto pts = phi.domain().grid();
  const double lower = 1.0 - phi.lip_norm();
  if (lower <= 0.0) return false;
  std::vector<Vec> img;
  img.reserve(pts.size());
  for (const auto& p : pts) img.push_back(phi.apply(p));
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j : {i + 1, n - 1 - i / 2}) {
      if (j <= i || j >= n) continue;
      if ((img[i] - img[j]).norm() < lower * (pts[i] - pts[j]).norm() * (1.0 - 1e-9)) return false;
    }
  }
  return true;
}

/// Chart coordinate of (g + id) o (h + id): g o (h + id) + h.
inline ChartDiffeo compose_chart(const ChartDiffeo& g, const ChartDiffeo& h) {
  if (g.dim() != h.dim()) throw DimensionMismatch("compose_chart: dimension mismatch");
  return h.with_phi(compose(g.phi(), h.full_map()) + h.phi());
}

/// D(I(phi)) at the image point (phi + id)(x), from Dphi(x) QI(-Dphi(x)) - Dphi(x).
inline Mat d_inverse_at(const ChartDiffeo& phi, const Vec& x) {
  const Mat a = phi.phi().jacobian(x);
  if (!(spectral_norm(a) < 1.0)) throw NotInUW("d_inverse_at: ||Dphi(x)|| >= 1");
  return a * quasi_invert(Mat(-a)) - a;
}

namespace detail {

class InverseChartNode final : public SmoothMapNode {
 public:
  explicit InverseChartNode(ChartDiffeo phi) : SmoothMapNode(phi.dim(), phi.dim(), 1), phi_(std::move(phi)) {}
  MapKind kind() const override { return MapKind::fd_wrapped; }
  int direct_order() const override { return 1; }
  int max_order() const override { return 2; }

  Vec value(const Vec& y) const override {
    struct Entry {
      std::uint64_t id = 0;
      Vec y, psi;
    };
    thread_local Entry cache;
    if (cache.id == id() && cache.y.size() == y.size() && cache.y == y) return cache.psi;
    const auto& o = phi_.options();
    Vec psi = Vec::Zero(y.size());
    for (int it = 0; it < o.max_iter; ++it) {
      Vec next = -phi_.phi()(psi + y);
      const double step = (next - psi).norm();
      psi = std::move(next);
      if (step < o.fp_tol) {
        cache = Entry{id(), y, psi};
        return psi;
      }
    }
    throw NonConvergence("invert_chart: fixed point did not converge within max_iter");
  }

  Jet direct_jet(const Vec& y, int order) const override {
    const int n = dim_in();
    const Vec psi = value(y);
    Jet j;
    MultilinearTensor v(n, {});
    for (int r = 0; r < n; ++r) v(r, 0) = psi(r);
    j.d.push_back(std::move(v));
    if (order >= 1) {
      const Mat d = d_inverse_at(phi_, Vec(psi + y));
      MultilinearTensor d1 = MultilinearTensor::derivative(n, n, 1);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) d1(r, static_cast<std::size_t>(c)) = d(r, c);
      j.d.push_back(std::move(d1));
    }
    return j;
  }

 private:
  ChartDiffeo phi_;
};

class PointwiseMatrixNode final : public SmoothMapNode {
 public:
  PointwiseMatrixNode(std::function<Mat(const Vec&)> f, int n, int rows, int cols)
      : SmoothMapNode(n, rows, cols), f_(std::move(f)) {}
  MapKind kind() const override { return MapKind::fd_wrapped; }
  int direct_order() const override { return 0; }
  int max_order() const override { return 1; }
  Vec value(const Vec& x) const override { return flatten_row_major(f_(x)); }
  Jet direct_jet(const Vec& x, int) const override {
    Jet j;
    MultilinearTensor v(dim_out(), {});
    const Vec f = value(x);
    for (int r = 0; r < dim_out(); ++r) v(r, 0) = f(r);
    j.d.push_back(std::move(v));
    return j;
  }

 private:
  std::function<Mat(const Vec&)> f_;
};

}  // namespace detail

/// I(phi) = (phi + id)^{-1} - id. Requires phi in U_W.
inline ChartDiffeo invert_chart(const ChartDiffeo& phi) {
  if (!phi.in_UW())
    throw NotInUW("invert_chart: ||phi||_{1,1} = " + std::to_string(phi.lip_norm()) + " not below 1 - margin");
  return phi.with_phi(make_map<detail::InverseChartNode>(phi));
}

/// Directional derivative of (g, h) -> g o (h + id) along (g1, h1):
/// (Dg o (h + id)) . h1 + g1 o (h + id).
inline SmoothMap d_compose(const ChartDiffeo& g, const ChartDiffeo& h, const SmoothMap& g1, const SmoothMap& h1) {
  const int n = g.dim();
  if (h.dim() != n || g1.dim_in() != n || g1.dim_out() != n || h1.dim_in() != n || h1.dim_out() != n)
    throw DimensionMismatch("d_compose: dimension mismatch");
  const SmoothMap hid = h.full_map();
  const SmoothMap dg_at = compose(derivative_map(g.phi()), hid);
  return multilinear_superpose(matvec_form(n), {dg_at, h1}) + compose(g1, hid);
}

/// Directional derivative of I at phi along phi1:
/// -(phi1 + (D I(phi) o (phi + id)) . phi1) o (I(phi) + id).
inline SmoothMap d_invert(const ChartDiffeo& phi, const SmoothMap& phi1) {
  const int n = phi.dim();
  if (phi1.dim_in() != n || phi1.dim_out() != n) throw DimensionMismatch("d_invert: dimension mismatch");
  const ChartDiffeo psi = invert_chart(phi);
  const SmoothMap dinv = make_map<detail::PointwiseMatrixNode>([phi](const Vec& x) { return d_inverse_at(phi, x); }, n, n, n);
  const SmoothMap inner = phi1 + multilinear_superpose(matvec_form(n), {dinv, phi1});
  return scaled(-1.0, compose(inner, psi.full_map()));
}

struct TangentElement {
  ChartDiffeo base;
  SmoothMap vector;
};

/// (m(g, h), Dg o (h + id) . h1 + g1 o (h + id) + h1)
inline TangentElement tangent_multiply(const TangentElement& a, const TangentElement& b) {
  return TangentElement{compose_chart(a.base, b.base), d_compose(a.base, b.base, a.vector, b.vector) + b.vector};
}

/// T o (phi + id) o T^{-1} - id for the full map T + id of `conj`.
inline ChartDiffeo conjugate_chart(const ChartDiffeo& conj, const ChartDiffeo& phi) {
  return compose_chart(compose_chart(conj, phi), invert_chart(conj));
}

struct GridResidual {
  double residual = 0.0;
  Vec worst_point;
};

/// max over the grid of ||a(x) - b(x)||.
inline GridResidual grid_residual(const SmoothMap& a, const SmoothMap& b, const SampleDomain& dom) {
  GridResidual r;
  for (const auto& x : dom.grid()) {
    const double d = (a(x) - b(x)).norm();
    if (r.worst_point.size() == 0 || d > r.residual) {
      r.residual = d;
      r.worst_point = x;
    }
  }
  return r;
}

struct AxiomRecord {
  std::string axiom;
  double residual = 0.0;
  Vec worst_point;
};

struct AxiomReport {
  double tolerance = 0.0;
  std::vector<AxiomRecord> records;
  bool pass() const {
    return std::all_of(records.begin(), records.end(), [&](const AxiomRecord& r) { return r.residual <= tolerance; });
  }
  double max_residual(const std::string& axiom) const {
    double m = 0.0;
    for (const auto& r : records)
      if (r.axiom == axiom) m = std::max(m, r.residual);
    return m;
  }
};

inline void to_json(nlohmann::json& j, const AxiomRecord& r) {
  std::vector<double> wp(r.worst_point.data(), r.worst_point.data() + r.worst_point.size());
  j = nlohmann::json{{"axiom", r.axiom}, {"residual", r.residual}, {"worst_point", wp}};
}

inline void to_json(nlohmann::json& j, const AxiomReport& r) { j = r.records; }

/// Group-law residuals on the sample grid: identities, associativity on
/// cyclic triples, two-sided inverses. Failures are reported, not thrown.
inline AxiomReport verify_group_axioms(const std::vector<ChartDiffeo>& samples, double tol) {
  AxiomReport rep;
  rep.tolerance = tol;
  if (samples.empty()) return rep;
  auto worst = [&](const std::string& name) -> AxiomRecord& {
    for (auto& r : rep.records)
      if (r.axiom == name) return r;
    rep.records.push_back(AxiomRecord{name, 0.0, Vec::Zero(samples[0].dim())});
    return rep.records.back();
  };
  auto record = [&](const std::string& name, const GridResidual& g) {
    auto& r = worst(name);
    if (g.residual > r.residual) {
      r.residual = g.residual;
      r.worst_point = g.worst_point;
    }
  };
  for (const auto& name : {"left_identity", "right_identity", "associativity", "inverse_right", "inverse_left"})
    worst(name);

  const std::size_t s = samples.size();
  for (std::size_t i = 0; i < s; ++i) {
    const auto& a = samples[i];
    const auto& dom = a.domain();
    const ChartDiffeo e = ChartDiffeo::identity(a.dim(), dom);
    record("left_identity", grid_residual(compose_chart(e, a).phi(), a.phi(), dom));
    record("right_identity", grid_residual(compose_chart(a, e).phi(), a.phi(), dom));
    const auto& b = samples[(i + 1) % s];
    const auto& c = samples[(i + 2) % s];
    record("associativity", grid_residual(compose_chart(compose_chart(a, b), c).phi(),
                                          compose_chart(a, compose_chart(b, c)).phi(), dom));
    try {
      const ChartDiffeo inv = invert_chart(a);
      const SmoothMap zero = zero_map(a.dim(), a.dim());
      record("inverse_right", grid_residual(compose_chart(a, inv).phi(), zero, dom));
      record("inverse_left", grid_residual(compose_chart(inv, a).phi(), zero, dom));
    } catch (const std::exception&) {
      const GridResidual fail{std::numeric_limits<double>::infinity(), Vec::Zero(a.dim())};
      record("inverse_right", fail);
      record("inverse_left", fail);
    }
  }
  return rep;
}

/// Both phi and I(phi) decay at infinity in every seminorm of order <= 2.
inline bool is_decaying_diffeo(const ChartDiffeo& phi, const WeightFamily& family, double decay_tol = 1e-6) {
  if (!is_decaying(phi.phi(), family, 2, phi.domain(), decay_tol).decaying) return false;
  return is_decaying(invert_chart(phi).phi(), family, 2, phi.domain(), decay_tol).decaying;
}

struct EstimateCheck {
  std::size_t points = 0;
  std::size_t violations = 0;
  /// max over checked points of lhs - rhs (negative when all hold)
  double worst_excess = -std::numeric_limits<double>::infinity();
};

/// Pointwise form of the f,0 composition estimate
///   |f| ||g o (h+id) - g0 o (h0+id)|| <= |f| ( ||g||_{1,1} ||h - h0||
///        + ||g - g0||_{1,1} ||h0|| + ||g - g0|| )
/// with the Lipschitz constants taken on `lip_domain`.
inline EstimateCheck composition_estimate_check(const SmoothMap& g, const SmoothMap& h, const SmoothMap& g0,
                                                const SmoothMap& h0, const Weight& f, const SampleDomain& dom,
                                                const SampleDomain& lip_domain, double slack = 1e-9) {
  const int n = g.dim_in();
  const SmoothMap id = identity_map(n);
  const SmoothMap lhs = compose(g, h + id) - compose(g0, h0 + id);
  const SmoothMap dg = g - g0;
  const double lg = seminorm(g, 1, lip_domain);
  const double ldg = seminorm(dg, 1, lip_domain);
  EstimateCheck c;
  for (const auto& x : dom.grid()) {
    const double w = std::abs(f(x));
    const double l = w * lhs(x).norm();
    const double r = w * (lg * (h(x) - h0(x)).norm() + ldg * h0(x).norm() + dg(x).norm());
    ++c.points;
    c.worst_excess = std::max(c.worst_excess, l - r);
    if (l > r + slack) ++c.violations;
  }
  return c;
}

/// Pointwise weighted bound on the inverse outside a ball:
///   |f(x)| ||I(phi)(x)|| <= |f(x)| ||phi(x)|| / (1 - sup_{|z|>=r} ||Dphi(z)||)
/// at grid points with ||x|| > r + ||I(phi)||_{1,0}.
inline EstimateCheck inversion_estimate_check(const ChartDiffeo& phi, const Weight& f, double r, double slack = 1e-9) {
  const auto pts = phi.domain().grid();
  double tail = 0.0;
  for (const auto& x : pts)
    if (x.norm() >= r) tail = std::max(tail, spectral_norm(phi.phi().jacobian(x)));
  EstimateCheck c;
  if (!(tail < 1.0)) return c;
  const ChartDiffeo psi = invert_chart(phi);
  const double radius = r + psi.sup_norm();
  for (const auto& x : pts) {
    if (!(x.norm() > radius)) continue;
    const double w = std::abs(f(x));
    const double l = w * psi.phi()(x).norm();
    const double rhs = w * phi.phi()(x).norm() / (1.0 - tail);
    ++c.points;
    c.worst_excess = std::max(c.worst_excess, l - rhs);
    if (l > rhs + slack) ++c.violations;
  }
  return c;
}

}  // namespace diffw
