#pragma once

// Named verification suites. Each returns a Report of named checks; a
// suite's outcome depends only on its SuiteConfig.

#include "diffw/config.hpp"
#include "diffw/report.hpp"
#include "diffw/sampling.hpp"

#include <map>

namespace diffw {

struct SuiteConfig {
  std::string suite = "all";
  int dim = 1;
  std::uint64_t seed = 42;
  /// Replaces the tolerance of every residual check when set.
  std::optional<double> tol;
  /// Overrides for box_halfwidth, points_per_axis, tail_radii.
  nlohmann::json domain;
  std::string report_path;
  bool csv = false;

  SampleDomain sample_domain(int d) const { return domain_from_json(domain, d); }
  SampleDomain sample_domain() const { return sample_domain(dim); }
  double tolerance(double fallback) const { return tol.value_or(fallback); }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"seminorms", "group-axioms",  "inversion", "regularity",
                                                 "mapping",   "actions",       "counterexample"};
  return names;
}

inline bool is_suite_name(const std::string& s) {
  return s == "all" || std::find(suite_names().begin(), suite_names().end(), s) != suite_names().end();
}

namespace suites {

/// Central difference with one Richardson step of a vector-valued function
/// of a scalar.
inline Vec fd_scalar(const std::function<Vec(double)>& f, double h) {
  auto c = [&](double s) { return Vec((f(s) - f(-s)) / (2.0 * s)); };
  return (4.0 * c(0.5 * h) - c(h)) / 3.0;
}

/// Probes where the reference derivative is smaller than this are skipped
/// by relative-error checks.
inline constexpr double kSignalFloor = 1e-6;

inline double rel_err(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }
inline double rel_err(const Mat& a, const Mat& b) { return spectral_norm(a - b) / std::max(spectral_norm(b), 1e-300); }

/// Points of `dom` in [-box, box]^n on a small grid, used as probes.
inline std::vector<Vec> probe_grid(int n, double box, int per_axis) {
  SampleDomain d;
  d.dimension = n;
  d.box_halfwidth = box;
  d.points_per_axis = per_axis;
  return d.grid();
}

inline std::vector<Vec> random_probes(Rng& rng, int n, std::size_t count, double box) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_vector(rng, n, -box, box));
  return out;
}

inline Report seminorms(const SuiteConfig& cfg) {
  Report rep;
  const SampleDomain dom = cfg.sample_domain();
  const SampleDomain line = cfg.sample_domain(1);
  const int n = cfg.dim;
  Rng rng(cfg.seed);

  const SmoothMap zero = zero_map(n, n);
  double zmax = 0.0;
  for (int l = 0; l <= 2; ++l) zmax = std::max(zmax, seminorm(zero, Weight::norm_power(2), l, dom));
  rep.add("seminorms.zero_map", "sup |f| ||D^l 0|| = 0", zmax, 0.0);

  rep.add("seminorms.identity_order1", "||id||_{1,1} = 1",
          std::abs(seminorm(identity_map(1), 1, line) - 1.0), cfg.tolerance(1e-12));

  SampleDomain fine = line;
  fine.points_per_axis = 16001;
  const SmoothMap g = gaussian_bump(Vec::Zero(1), 1.0, Vec::Ones(1));
  const double gs = seminorm(g, 1, fine);
  rep.add("seminorms.gaussian_order1", "sup |d/dx exp(-x^2)| = sqrt(2/e)", std::abs(gs - std::sqrt(2.0 / std::exp(1.0))),
          cfg.tolerance(1e-4))
      .value = gs;

  double tri = 0.0, hom = 0.0, mono = 0.0, refine = 0.0;
  for (int k = 0; k < 5; ++k) {
    const SmoothMap a = random_bump_field(rng, n, n), b = random_bump_field(rng, n, n);
    const double c = uniform(rng, -3.0, 3.0);
    for (int l = 0; l <= 1; ++l) {
      const Weight f = Weight::norm_power(1);
      const double sa = seminorm(a, f, l, dom), sb = seminorm(b, f, l, dom);
      tri = std::max(tri, seminorm(a + b, f, l, dom) - sa - sb);
      hom = std::max(hom, std::abs(seminorm(c * a, f, l, dom) - std::abs(c) * sa) / std::max(sa, 1e-300));
      mono = std::max(mono, seminorm(a, Weight::norm_power(1), l, dom) - seminorm(a, Weight::poly_shifted(1), l, dom));
      refine = std::max(refine, seminorm(a, f, l, dom) - seminorm(a, f, l, dom.refined()));
    }
  }
  rep.add("seminorms.triangle_inequality", "||a + b|| <= ||a|| + ||b||", std::max(tri, 0.0), cfg.tolerance(1e-12));
  rep.add("seminorms.homogeneity", "||c a|| = |c| ||a||", hom, cfg.tolerance(1e-12));
  rep.add("seminorms.weight_monotonicity", "|f| <= |g| implies ||.||_f <= ||.||_g", std::max(mono, 0.0), 0.0);
  rep.add("seminorms.refinement_monotonicity", "sup over a superset grid is not smaller", std::max(refine, 0.0), 0.0);

  const auto poly = WeightFamily({Weight::one(), Weight::norm_power(2), Weight::norm_power(4)});
  rep.add_flag("seminorms.decay.gaussian", "Gaussian tails beat polynomial weights",
               is_decaying(g, poly, 2, line).decaying);
  rep.add_flag("seminorms.decay.constant", "constant maps do not decay",
               !is_decaying(constant_map(1, Vec::Ones(1)), WeightFamily({Weight::one()}), 2, line).decaying);
  rep.add_flag("seminorms.decay.sine", "sin does not decay",
               !is_decaying(sine_profile(Vec::Ones(1), Vec::Ones(1)), WeightFamily({Weight::one()}), 2, line).decaying);

  const auto single_one = bcr_check(WeightFamily({Weight::one()}), line);
  rep.add_flag("seminorms.bcr.constant_family", "W = {1}: W1, W2 hold and W3 fails",
               single_one.w1 && single_one.w2 && !single_one.w3);
  const auto shifted = bcr_check(WeightFamily::shifted_polynomials(3), line);
  bool successors = true;
  for (std::size_t d = 0; d + 1 < shifted.w3_witness.size(); ++d)
    successors = successors && shifted.w3_witness[d] && *shifted.w3_witness[d] == d + 1;
  rep.add_flag("seminorms.bcr.shifted_polynomials", "(1+|x|)^d is dominated by (1+|x|)^{d+1}",
               shifted.w1 && shifted.w2 && successors);
  const auto top = bcr_check(WeightFamily({Weight::poly_shifted(3)}), line);
  rep.add_flag("seminorms.bcr.top_degree_only", "a single non-constant weight has no W3 witness", top.w1 && !top.w3);
  return rep;
}

inline Report group_axioms(const SuiteConfig& cfg) {
  Report rep;
  const SampleDomain dom = cfg.sample_domain();
  const auto samples = random_bump_diffeos(20, dom, cfg.seed);
  bool all_in = true;
  for (const auto& s : samples) all_in = all_in && s.in_UW() && s.lip_norm() <= 0.8 + 1e-12;
  rep.add_flag("group-axioms.samples_in_UW", "||phi||_{1,1} <= 0.8", all_in);
  const auto ax = verify_group_axioms(samples, cfg.tolerance(1e-8));
  for (const auto& r : ax.records)
    rep.add("group-axioms." + r.axiom, "Diff_W group law in the chart phi + id", r.residual, ax.tolerance);
  return rep;
}

inline Report inversion(const SuiteConfig& cfg) {
  Report rep;
  const int n = cfg.dim;
  const SampleDomain dom = cfg.sample_domain();
  Rng rng(cfg.seed);

  double qi = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int m = 1 + static_cast<int>(rng() % 8);
    const Mat a = random_matrix(rng, m, m, uniform(rng, 0.0, 0.9));
    const Mat bridge = (a - Mat::Identity(m, m)).inverse() + Mat::Identity(m, m);
    qi = std::max(qi, (quasi_invert(a) - bridge).cwiseAbs().maxCoeff());
  }
  rep.add("inversion.quasi_inverse.matrix", "QI(A) = (A - I)^{-1} + I", qi, cfg.tolerance(1e-10));
  rep.add("inversion.quasi_inverse.scalar", "QI(0.5) = -1", std::abs(quasi_invert(0.5) + 1.0), cfg.tolerance(1e-12));

  const Mat a = random_matrix(rng, n, n, 0.5);
  const ChartDiffeo lin(linear(a), dom);
  const Mat exact = (Mat::Identity(n, n) + a).inverse() - Mat::Identity(n, n);
  rep.add("inversion.linear", "I(A x) = ((I + A)^{-1} - I) x",
          grid_residual(invert_chart(lin).phi(), linear(exact), dom).residual, cfg.tolerance(1e-10));
  rep.add("inversion.d_inverse_at.linear", "D I(phi) = Dphi QI(-Dphi) - Dphi",
          spectral_norm(d_inverse_at(lin, Vec::Zero(n)) - exact), cfg.tolerance(1e-12));

  const auto samples = random_bump_diffeos(5, dom, cfg.seed + 1);
  double law = 0.0, dinv_at = 0.0, dinv = 0.0;
  std::size_t est_violations = 0, est_points = 0;
  const auto probes = random_probes(rng, n, 20, 3.0);
  int used_at = 0, used_inv = 0;
  for (const auto& phi : samples) {
    const ChartDiffeo psi = invert_chart(phi);
    law = std::max(law, grid_residual(compose_chart(phi, psi).phi(), zero_map(n, n), dom).residual);
    law = std::max(law, grid_residual(compose_chart(psi, phi).phi(), zero_map(n, n), dom).residual);

    const SmoothMap phi1 = random_bump_field(rng, n, n);
    const double h = 1e-4;
    std::map<double, ChartDiffeo> perturbed;
    for (double s : {h, -h, 0.5 * h, -0.5 * h}) perturbed.emplace(s, invert_chart(phi.with_phi(phi.phi() + s * phi1)));
    const SmoothMap formula = d_invert(phi, phi1);
    for (const auto& x : probes) {
      const Vec y = phi.apply(x);
      Mat fd(n, n);
      for (int k = 0; k < n; ++k)
        fd.col(k) = fd_scalar([&](double s) { return psi.phi()(Vec(y + s * Vec::Unit(n, k))); }, 1e-4);
      if (spectral_norm(fd) >= kSignalFloor) {
        dinv_at = std::max(dinv_at, rel_err(d_inverse_at(phi, x), fd));
        ++used_at;
      }
      const Vec fdi = fd_scalar([&](double s) { return perturbed.at(s).phi()(x); }, h);
      if (fdi.norm() >= kSignalFloor) {
        dinv = std::max(dinv, rel_err(formula(x), fdi));
        ++used_inv;
      }
    }
    for (int d = 0; d <= 2; ++d) {
      const auto c = inversion_estimate_check(phi, Weight::norm_power(d), 3.0);
      est_violations += c.violations;
      est_points += c.points;
    }
  }
  rep.add("inversion.inverse_law", "phi o I(phi) and I(phi) o phi vanish", law, cfg.tolerance(1e-8));
  rep.add("inversion.d_inverse_at.fd", "D I(phi)((phi + id)(x)) against differences", dinv_at, cfg.tolerance(1e-5))
      .value = used_at;
  rep.add("inversion.d_invert.fd", "-(phi1 + D I(phi) o (phi + id) . phi1) o (I(phi) + id)", dinv,
          cfg.tolerance(1e-5))
      .value = used_inv;
  rep.add("inversion.weighted_bound", "|f| ||I(phi)|| <= |f| ||phi|| / (1 - tail ||Dphi||)",
          static_cast<double>(est_violations), 0.0)
      .value = static_cast<double>(est_points);

  std::size_t comp_violations = 0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    const auto c = composition_estimate_check(samples[i].phi(), samples[i + 1].phi(), samples[i + 1].phi(),
                                              samples[i].phi(), Weight::norm_power(1), dom, dom);
    comp_violations += c.violations;
  }
  rep.add("inversion.composition_estimate", "f,0 Lipschitz estimate of g o (h + id)",
          static_cast<double>(comp_violations), 0.0);
  return rep;
}

inline Report regularity(const SuiteConfig& cfg) {
  Report rep;
  const int n = cfg.dim;
  const SampleDomain dom = cfg.sample_domain();
  Rng rng(cfg.seed);
  const auto probes = probe_grid(n, 4.0, n == 1 ? 9 : 5);
  EvolveOptions opt;
  opt.probes = probes;

  const Mat a = random_matrix(rng, n, n, 0.8);
  const Mat ea = a.exp();
  auto linear_error = [&](int m) {
    const auto curve = evolve(TimeField::linear(a), m, dom, opt);
    double e = 0.0;
    for (const auto& x : probes) e = std::max(e, (curve.trajectory(x).back() - x - (ea - Mat::Identity(n, n)) * x).norm());
    return e;
  };
  rep.add("regularity.linear_field", "Gamma(1)(x) = (e^A - I) x", linear_error(200), cfg.tolerance(1e-8));
  const double factor = linear_error(40) / linear_error(80);
  rep.add("regularity.step_halving", "RK4 error ratio under step halving near 16", std::abs(factor - 16.0), 4.0).value =
      factor;

  const Vec v = random_vector(rng, n);
  const auto ramp = evolve(TimeField::modulated([](double t) { return t; }, constant_map(n, v)), 20, dom, opt);
  double quad = 0.0;
  for (const auto& x : probes) quad = std::max(quad, (ramp.trajectory(x).back() - x - 0.5 * v).norm());
  rep.add("regularity.ramp_field", "p(t) = t v gives Gamma(1) = v / 2", quad, cfg.tolerance(1e-10));

  auto field_with_lip = [&](double lip) {
    const SmoothMap raw = random_bump_field(rng, n, n);
    return scaled(lip / seminorm(raw, 1, dom), raw);
  };
  // sup_t ||p(t)||_{1,1} <= 0.45 keeps ||Gamma(1)||_{1,1} <= e^0.45 - 1 inside U_W.
  const SmoothMap b1 = field_with_lip(0.25), b2 = field_with_lip(0.2);
  const TimeField p({TimeField::Term{[](double) { return 1.0; }, b1},
                     TimeField::Term{[](double t) { return std::sin(3.0 * t); }, b2}});
  const int steps = 200;
  const auto curve = evolve(p, steps, dom, opt);
  const ChartDiffeo whole = curve.final_value();
  double flow = 0.0;
  for (double s : {0.25, 0.5}) {
    const int m1 = static_cast<int>(std::lround(s * steps));
    const auto first = evolve(p.restricted(0.0, s), m1, dom, opt).final_value();
    const auto second = evolve(p.restricted(s, 1.0), steps - m1, dom, opt).final_value();
    const ChartDiffeo joined = compose_chart(second, first);
    for (const auto& x : probes) flow = std::max(flow, (joined.phi()(x) - whole.phi()(x)).norm());
  }
  rep.add("regularity.flow_property", "Gamma_[s,1] composed with Gamma_[0,s] equals Gamma(1)", flow,
          cfg.tolerance(1e-7));

  rep.add("regularity.aux_ode", "Phi' = (Dp o (Gamma + id)) (Phi + I)",
          aux_derivative_check(p, curve, probes).max_residual, cfg.tolerance(1e-5));

  const auto back = evolve(p.reversed_negated(), steps, dom, opt).final_value();
  const ChartDiffeo inv = invert_chart(whole);
  double ie = 0.0;
  for (const auto& x : probes) ie = std::max(ie, (inv.phi()(x) - back.phi()(x)).norm());
  rep.add("regularity.invert_evolve", "I(Gamma(1)) is the evolution of -p(1 - t)", ie, cfg.tolerance(1e-6));
  return rep;
}

inline Report mapping(const SuiteConfig& cfg) {
  Report rep;
  const int dim = cfg.dim;
  const SampleDomain dom = cfg.sample_domain();
  const auto so3 = MatrixGroup::so3();
  const auto family = WeightFamily::norm_powers(2);
  Rng rng(cfg.seed);
  auto element = [&](double angle) { return MappingElement(so3, random_so3_field(rng, dim, angle), family, 1, dom); };

  double assoc = 0.0, inv = 0.0;
  const int triples = dim == 1 ? 50 : 10;
  for (int k = 0; k < triples; ++k) {
    const auto a = element(0.2), b = element(0.2), c = element(0.2);
    const auto left = multiply(multiply(a, b), c), right = multiply(a, multiply(b, c));
    const auto ai = multiply(a, invert(a));
    for (const auto& x : dom.grid()) {
      const Mat direct = a.value(x) * b.value(x) * c.value(x);
      assoc = std::max({assoc, spectral_norm(left.value(x) - direct), spectral_norm(right.value(x) - direct)});
      inv = std::max(inv, spectral_norm(ai.coordinate(x)));
    }
  }
  rep.add("mapping.so3.associativity", "pointwise (ab)c = a(bc) = direct product", assoc, cfg.tolerance(1e-10));
  rep.add("mapping.so3.inverse", "a invert(a) = 1", inv, cfg.tolerance(1e-12));

  const Mat xi = hat3(random_unit_vector(rng, 3) * 0.4);
  const Vec flat = flatten_row_major(xi);
  const auto probes = probe_grid(dim, 3.0, 5);
  auto evolved_error = [&](const TimeField& field, const Mat& expected) {
    const auto e = evolve_mapping(so3, field, 200, family, 1, dom);
    double worst = 0.0;
    for (const auto& x : probes) worst = std::max(worst, spectral_norm(e.value(x) - expected));
    return worst;
  };
  rep.add("mapping.evolve.constant", "eta' = eta A gives e^A",
          evolved_error(TimeField::constant(reshaped(constant_map(dim, flat), 3, 3)), xi.exp()), cfg.tolerance(1e-8));
  rep.add("mapping.evolve.commuting", "eta' = eta (1 + t) A gives e^{1.5 A}",
          evolved_error(TimeField::modulated([](double t) { return 1.0 + t; }, reshaped(constant_map(dim, flat), 3, 3)),
                        Mat((1.5 * xi).exp())),
          cfg.tolerance(1e-8));

  const SmoothMap g0 = random_so3_field(rng, dim, 0.5), g1 = random_so3_field(rng, dim, 0.5);
  const TimeField gamma({TimeField::Term{[](double) { return 1.0; }, g0},
                         TimeField::Term{[](double t) { return std::cos(2.0 * t); }, g1}});
  const int m = 200;
  const double h = 1.0 / m;
  double llog = 0.0;
  for (const auto& x : probes) {
    const auto eta = mapping_trajectory(gamma, m, x);
    for (int i = 2; i <= m - 2; ++i) {
      auto at = [&](int k) -> const Mat& { return eta[static_cast<std::size_t>(k)]; };
      const Mat d = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h);
      const Mat recovered = at(i).inverse() * d;
      llog = std::max(llog, spectral_norm(recovered - unflatten_row_major(gamma.value(i * h, x), 3, 3)));
    }
  }
  rep.add("mapping.left_log_derivative", "eta^{-1} eta' recovers Gamma(t)(x)", llog, cfg.tolerance(1e-5));

  const SmoothMap v = random_so3_field(rng, dim, 0.4);
  double one_param = 0.0;
  for (const auto& [s, t] : std::vector<std::pair<double, double>>{{0.3, 0.5}, {-0.4, 0.7}, {0.2, 0.2}}) {
    const auto lhs = group_exponential(so3, scaled(s + t, v), family, 1, dom);
    const auto rhs = multiply(group_exponential(so3, scaled(s, v), family, 1, dom),
                              group_exponential(so3, scaled(t, v), family, 1, dom));
    for (const auto& x : dom.grid()) one_param = std::max(one_param, spectral_norm(lhs.value(x) - rhs.value(x)));
  }
  rep.add("mapping.one_parameter_law", "exp((s + t) v) = exp(s v) exp(t v)", one_param, cfg.tolerance(1e-10));

  const auto a = element(0.3), b = element(0.3);
  rep.add_flag("mapping.decay_closure", "products of decaying elements decay",
               is_member(a, true) && is_member(b, true) && is_member(multiply(a, b).xi(), family, 1, true, dom));
  return rep;
}

/// Semidirect-product checks on `count` random triples of SO(3)-valued
/// maps paired with bump diffeomorphisms.
inline Report semidirect(const SuiteConfig& cfg, int count) {
  Report rep;
  const int n = cfg.dim;
  const SampleDomain dom = cfg.sample_domain();
  const auto poly = WeightFamily::norm_powers(2);
  Rng rng(cfg.seed + 17);
  BumpSampleOptions small;
  small.lip_min = 0.1;
  small.lip_max = 0.3;
  const auto so3 = MatrixGroup::so3();
  auto semi = [&] {
    return SemidirectElement{MappingElement(so3, random_so3_field(rng, n, 0.15), poly, 1, dom),
                             random_bump_diffeo(rng, dom, small)};
  };
  const SampleDomain coarse = [&] {
    SampleDomain d = dom;
    d.points_per_axis = n == 1 ? 41 : 13;
    d.box_halfwidth = 4.0;
    d.tail_radii = {};
    return d;
  }();
  double assoc = 0.0, inverse = 0.0, hom = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto a = semi(), b = semi(), c = semi();
    const auto l = semidirect_multiply(semidirect_multiply(a, b), c);
    const auto r = semidirect_multiply(a, semidirect_multiply(b, c));
    const auto e = semidirect_multiply(a, semidirect_invert(a));
    for (const auto& x : coarse.grid()) {
      assoc = std::max({assoc, spectral_norm(l.map_part.value(x) - r.map_part.value(x)),
                        (l.diff_part.phi()(x) - r.diff_part.phi()(x)).norm()});
      inverse = std::max({inverse, spectral_norm(e.map_part.coordinate(x)), e.diff_part.phi()(x).norm()});
    }
    const auto prod = act(a.diff_part, multiply(b.map_part, c.map_part));
    const auto split = multiply(act(a.diff_part, b.map_part), act(a.diff_part, c.map_part));
    for (const auto& x : coarse.grid()) hom = std::max(hom, spectral_norm(prod.value(x) - split.value(x)));
  }
  rep.add("actions.semidirect.associativity", "(h1 omega(g1, h2), g1 g2) is associative", assoc, cfg.tolerance(1e-8));
  rep.add("actions.semidirect.inverse", "a a^{-1} = 1", inverse, cfg.tolerance(1e-8));
  rep.add("actions.semidirect.homomorphism", "omega(phi, g1 g2) = omega(phi, g1) omega(phi, g2)", hom,
          cfg.tolerance(1e-10));
  return rep;
}

inline Report actions(const SuiteConfig& cfg) {
  Report rep;
  const int n = cfg.dim;
  const SampleDomain dom = cfg.sample_domain();
  Rng rng(cfg.seed);

  SchwartzBoundOptions sb;
  sb.seed = cfg.seed;
  const auto ok = schwartz_action_bound_check(LinearAction::identity(std::max(n, 2)), sb);
  rep.add("actions.schwartz_bound", "||x||^n ||S A x|| <= eps 2^{n+3} ||T||^2 ||T^{-1}||^{n+1} ||S x||^{n+1}",
          ok.max_ratio, 1.0 + 1e-9)
      .value = static_cast<double>(ok.violations);
  sb.a_factor = 100.0;
  const auto bad = schwartz_action_bound_check(LinearAction::identity(std::max(n, 2)), sb);
  rep.add_flag("actions.schwartz_bound.violated_premise", "bound breaks once ||A|| exceeds 2 ||T|| eps",
               bad.max_ratio > 1.0)
      .value = bad.max_ratio;

  auto random_action = [&] {
    Mat t = Mat::Identity(n, n) + random_matrix(rng, n, n, 0.5);
    return LinearAction(t);
  };
  const ChartDiffeo phi = random_bump_diffeo(rng, dom);
  double law = 0.0;
  for (int k = 0; k < 5; ++k) {
    const LinearAction s = random_action(), t = random_action();
    const auto lhs = gl_conjugate(s, gl_conjugate(t, phi));
    const auto rhs = gl_conjugate(LinearAction(s.matrix() * t.matrix()), phi);
    law = std::max(law, grid_residual(lhs.phi(), rhs.phi(), dom).residual);
  }
  rep.add("actions.gl_action_law", "S.(T.phi) = (ST).phi", law, cfg.tolerance(1e-12));

  const auto poly = WeightFamily::norm_powers(2);
  BumpSampleOptions small;
  small.lip_min = 0.1;
  small.lip_max = 0.3;
  const ChartDiffeo mild = random_bump_diffeo(rng, dom, small);
  bool conj_decay = is_decaying_diffeo(mild, poly);
  for (int k = 0; k < 3 && conj_decay; ++k) conj_decay = is_decaying_diffeo(gl_conjugate(random_action(), mild), poly);
  rep.add_flag("actions.conjugation_preserves_decay", "T phi(T^{-1} x) decays when phi does", conj_decay);

  const auto polys = WeightFamily::norm_powers(3);
  rep.add_flag("actions.multiplier.linear", "linear maps are multipliers for polynomial weights",
               multiplier_check(linear(random_matrix(rng, n, n, 1.0)), polys, 1, dom));
  rep.add_flag("actions.multiplier.zero", "0 is a multiplier", multiplier_check(zero_map(n, n), polys, 2, dom));
  const SmoothMap blowup = fd_wrapped([](const Vec& x) { return Vec(Vec::Ones(x.size()) * std::exp(x.squaredNorm())); }, n, n);
  rep.add_flag("actions.multiplier.exp_square", "exp(|x|^2) is not dominated by polynomials",
               !multiplier_check(blowup, polys, 0, dom));

  rep.append(semidirect(cfg, 20));
  return rep;
}

inline Report counterexample(const SuiteConfig& cfg) {
  Report rep;
  const SampleDomain line = cfg.sample_domain(1);
  for (int k = 1; k <= 20; ++k) {
    const double v = bc_counterexample(k, line);
    char name[64];
    std::snprintf(name, sizeof name, "counterexample.n=%02d", k);
    rep.add(name, "||sin((1 + 1/(2n)) .) - sin||_{1,0} >= 1", std::max(0.0, 1.0 - v), cfg.tolerance(1e-9)).value = v;
  }
  rep.add("counterexample.unperturbed", "||sin - sin||_{1,0} = 0",
          sine_perturbation_sup(1.0, counterexample_points(1, line)), 0.0);
  return rep;
}

}  // namespace suites

inline Report run_suite(const SuiteConfig& cfg) {
  if (!is_suite_name(cfg.suite)) throw ConfigError("unknown suite \"" + cfg.suite + "\"");
  if (cfg.dim < 1 || cfg.dim > 3) throw ConfigError("dim must be 1, 2 or 3");
  static const std::map<std::string, Report (*)(const SuiteConfig&)> table = {
      {"seminorms", suites::seminorms}, {"group-axioms", suites::group_axioms}, {"inversion", suites::inversion},
      {"regularity", suites::regularity}, {"mapping", suites::mapping},       {"actions", suites::actions},
      {"counterexample", suites::counterexample}};
  Report rep;
  for (const auto& name : suite_names())
    if (cfg.suite == "all" || cfg.suite == name) rep.append(table.at(name)(cfg));
  return rep;
}

}  // namespace diffw
