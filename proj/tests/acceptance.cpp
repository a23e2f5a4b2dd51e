// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Reference values come from independent computations (LU solves, Newton
// preimages, five-point differences, Pade exponentials), never from the
// library routine under test.

#include "oracles.hpp"

#include <diffw/suites.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace diffw;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Five-point stencil; truncation O(h^4) keeps the oracle far below 1e-4.
Vec d5(const std::function<Vec(double)>& f, double h = 1e-3) {
  return (f(-2 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2 * h)) / (12.0 * h);
}

double rel(const Vec& a, const Vec& b) { return (a - b).norm() / std::max(b.norm(), 1e-6); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

SampleDomain dom(int n) { return SampleDomain::defaults(n); }

Outcome quasi_inversion() {
  Rng rng(1);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Mat a = random_matrix(rng, n, n, uniform(rng, 0.0, 0.9));
    const Mat bridge = (a - Mat::Identity(n, n)).fullPivLu().solve(Mat::Identity(n, n)) + Mat::Identity(n, n);
    worst = std::max(worst, (quasi_invert(a) - bridge).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10, fmt("max elementwise error %.2e", worst)};
}

Outcome group_axioms() {
  Outcome o;
  for (int n = 1; n <= 2; ++n) {
    const auto samples = random_bump_diffeos(20, dom(n), 1000 + n);
    for (const auto& s : samples)
      if (!(s.lip_norm() <= 0.8 + 1e-12)) o.pass = false;
    const auto rep = verify_group_axioms(samples, 1e-8);
    double worst = 0.0;
    for (const auto& r : rep.records) worst = std::max(worst, r.residual);
    o.pass = o.pass && rep.pass() && rep.records.size() == 5;
    o.detail += fmt("n=%.0f max residual %.2e; ", n, worst);
  }
  return o;
}

Outcome derivative_formulas() {
  Rng rng(3);
  double w_comp = 0, w_inv = 0, w_at = 0, w_tan = 0;
  int probes = 0;
  for (int n = 1; n <= 2; ++n)
    for (int pair = 0; pair < 10; ++pair) {
      const ChartDiffeo g = random_bump_diffeo(rng, dom(n)), h = random_bump_diffeo(rng, dom(n));
      const SmoothMap g1 = random_bump_field(rng, n, n), h1 = random_bump_field(rng, n, n);
      const SmoothMap dc = d_compose(g, h, g1, h1), di = d_invert(g, g1);
      const auto tan = tangent_multiply({g, g1}, {h, h1});
      auto gfn = [&](const Vec& z) { return g.phi()(z); };
      for (int k = 0; k < 5; ++k, ++probes) {
        const Vec x = random_vector(rng, n, -2.0, 2.0);
        w_comp = std::max(w_comp, rel(dc(x), d5([&](double t) -> Vec {
                                        const Vec inner = x + h.phi()(x) + t * h1(x);
                                        return g.phi()(inner) + t * g1(inner);
                                      })));
        w_inv = std::max(w_inv, rel(di(x), d5([&](double t) -> Vec {
                                      const auto pert = [&](const Vec& z) { return Vec(gfn(z) + t * g1(z)); };
                                      return oracle::newton_preimage(pert, x) - x;
                                    })));
        const Vec y = g.apply(x);
        Mat fd(n, n);
        for (int c = 0; c < n; ++c)
          fd.col(c) = d5([&](double s) { return Vec(oracle::newton_preimage(gfn, Vec(y + s * Vec::Unit(n, c))) - y - s * Vec::Unit(n, c)); });
        w_at = std::max(w_at, spectral_norm(d_inverse_at(g, x) - fd) / std::max(spectral_norm(fd), 1e-6));
        w_tan = std::max(w_tan, rel(tan.vector(x), d5([&](double t) -> Vec {
                                      const Vec hx = h.phi()(x) + t * h1(x);
                                      const Vec inner = x + hx;
                                      return g.phi()(inner) + t * g1(inner) + hx;
                                    })));
      }
    }
  const double worst = std::max({w_comp, w_inv, w_at, w_tan});
  return {worst < 1e-4 && probes == 100,
          fmt("%.0f probes; rel err compose %.1e, invert %.1e, ", probes, w_comp, w_inv) +
              fmt("inverse-at-point %.1e, tangent %.1e", w_at, w_tan)};
}

TimeField bump_field(int n, std::uint64_t seed) {
  Rng rng(seed);
  auto normalised = [&](double lip) {
    const SmoothMap raw = random_bump_field(rng, n, n);
    return scaled(lip / seminorm(raw, 1, dom(n)), raw);
  };
  return TimeField({TimeField::Term{[](double) { return 1.0; }, normalised(0.25)},
                    TimeField::Term{[](double t) { return std::cos(2.0 * t); }, normalised(0.2)}});
}

Outcome regularity() {
  const int n = 2;
  const auto probes = suites::probe_grid(n, 4.0, 5);
  EvolveOptions opt;
  opt.probes = probes;
  Mat a(2, 2);
  a << 0.2, -0.9, 0.7, 0.1;
  const Mat ea = oracle::expm(a);
  auto err = [&](int m) {
    const auto curve = evolve(TimeField::linear(a), m, dom(n), opt);
    double w = 0.0;
    for (const auto& x : probes) w = std::max(w, (curve.final_value().phi()(x) - (ea * x - x)).norm());
    return w;
  };
  const double e200 = err(200);
  const double factor = err(40) / err(80);

  const TimeField p = bump_field(n, 13);
  const auto whole = evolve(p, 200, dom(n), opt);
  const auto first = evolve(p.restricted(0.0, 0.4), 80, dom(n), opt).final_value();
  const auto second = evolve(p.restricted(0.4, 1.0), 120, dom(n), opt).final_value();
  const ChartDiffeo joined = compose_chart(second, first);
  double flow = 0.0;
  for (const auto& x : probes) flow = std::max(flow, (joined.phi()(x) - whole.final_value().phi()(x)).norm());
  const double aux = aux_derivative_check(p, whole, probes).max_residual;
  return {e200 < 1e-8 && factor >= 12.0 && factor <= 20.0 && flow < 1e-7 && aux < 1e-5,
          fmt("linear err %.1e, halving factor %.2f, flow residual %.1e, aux residual %.1e", e200, factor, flow, aux)};
}

Outcome estimates() {
  std::size_t violations = 0, comp_points = 0, inv_points = 0;
  double worst = -1e300;
  for (int n = 1; n <= 2; ++n) {
    const auto s = random_bump_diffeos(102, dom(n), 500 + n);
    const SampleDomain lip_dom = dom(n).refined();
    for (std::size_t i = 0; i < 50; ++i) {
      const auto& g = s[2 * i];
      const auto& h = s[2 * i + 1];
      const auto& g0 = s[2 * i + 2];
      const auto& h0 = s[2 * i + 3];
      for (const auto& f : {Weight::one(), Weight::poly_shifted(2)}) {
        const auto c = composition_estimate_check(g.phi(), h.phi(), g0.phi(), h0.phi(), f, dom(n), lip_dom);
        violations += c.violations;
        comp_points += c.points;
        worst = std::max(worst, c.worst_excess);
      }
      const auto inv = inversion_estimate_check(g, Weight::norm_power(2), 2.5);
      violations += inv.violations;
      inv_points += inv.points;
      worst = std::max(worst, inv.worst_excess);
    }
  }
  return {violations == 0 && comp_points > 0 && inv_points > 0,
          fmt("100 pairs, %.0f composition and %.0f inversion point checks, %.0f violations, worst excess %.2e",
              static_cast<double>(comp_points), static_cast<double>(inv_points), static_cast<double>(violations),
              worst)};
}

Outcome counterexample() {
  const auto line = dom(1);
  double lowest = 1e300;
  for (int n = 1; n <= 20; ++n) lowest = std::min(lowest, bc_counterexample(n, line));
  const auto sb = schwartz_action_bound_check(LinearAction::identity(2), SchwartzBoundOptions{});
  return {lowest >= 1.0 - 1e-9 && sb.samples == 1000 && sb.violations == 0,
          fmt("min sup over n=1..20 %.12f; Schwartz bound %.0f samples, %.0f violations, max ratio %.3f", lowest,
              sb.samples, sb.violations, sb.max_ratio)};
}

Outcome mapping() {
  Rng rng(7);
  const auto so3 = MatrixGroup::so3();
  const auto poly = WeightFamily::norm_powers(2);
  const auto line = dom(1);
  auto elem = [&](double angle) { return MappingElement(so3, random_so3_field(rng, 1, angle), poly, 1, line); };
  double assoc = 0.0, inverse = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto a = elem(0.15), b = elem(0.15), c = elem(0.15);
    const auto l = multiply(multiply(a, b), c), r = multiply(a, multiply(b, c));
    const auto e = multiply(a, invert(a)), e2 = multiply(invert(a), a);
    for (const auto& x : line.grid()) {
      assoc = std::max(assoc, spectral_norm(l.value(x) - r.value(x)));
      inverse = std::max({inverse, spectral_norm(e.value(x) - Mat::Identity(3, 3)),
                          spectral_norm(e2.value(x) - Mat::Identity(3, 3))});
    }
  }

  const Mat a = hat3(random_unit_vector(rng, 3) * 0.4);
  const SmoothMap ca = reshaped(constant_map(1, flatten_row_major(a)), 3, 3);
  const auto ev = evolve_mapping(so3, TimeField::constant(ca), 200, poly, 1, line);
  const Mat ref = oracle::expm(a);
  double evo = 0.0;
  for (const auto& x : line.grid()) evo = std::max(evo, spectral_norm(ev.value(x) - ref));

  const SmoothMap f0 = random_so3_field(rng, 1, 0.5), f1 = random_so3_field(rng, 1, 0.5);
  const TimeField gamma({TimeField::Term{[](double) { return 1.0; }, f0},
                         TimeField::Term{[](double t) { return std::cos(2.0 * t); }, f1}});
  const int m = 200;
  const double h = 1.0 / m;
  double leftlog = 0.0;
  for (double xv : {-1.0, 0.0, 0.8}) {
    const Vec x = Vec::Constant(1, xv);
    const auto eta = mapping_trajectory(gamma, m, x);
    for (int i = 2; i <= m - 2; ++i) {
      const Mat d = (-eta[i + 2] + 8.0 * eta[i + 1] - 8.0 * eta[i - 1] + eta[i - 2]) / (12.0 * h);
      leftlog = std::max(leftlog, spectral_norm(eta[i].inverse() * d - gamma.at(i * h).matrix_value(x)));
    }
  }

  const SmoothMap v = random_so3_field(rng, 1, 0.4);
  double law = 0.0;
  for (const auto& [s, t] : std::vector<std::pair<double, double>>{{0.3, 0.5}, {-0.4, 0.7}, {1.0, -1.0}, {0.25, 0.25}}) {
    const auto lhs = group_exponential(so3, scaled(s + t, v), poly, 1, line);
    const auto rhs =
        multiply(group_exponential(so3, scaled(s, v), poly, 1, line), group_exponential(so3, scaled(t, v), poly, 1, line));
    for (const auto& x : line.grid()) law = std::max(law, spectral_norm(lhs.value(x) - rhs.value(x)));
  }
  return {assoc < 1e-10 && inverse < 1e-10 && evo < 1e-8 && leftlog < 1e-5 && law < 1e-10,
          fmt("assoc %.1e, inverse %.1e, evolve vs expm %.1e, ", assoc, inverse, evo) +
              fmt("left log derivative %.1e, one-parameter law %.1e", leftlog, law)};
}

Outcome decay_and_bcr() {
  const auto poly = WeightFamily::norm_powers(2);
  BumpSampleOptions narrow;
  narrow.sigma_max = 0.8;
  narrow.lip_min = 0.1;
  narrow.lip_max = 0.5;
  int checks = 0, failures = 0;
  auto tally = [&](bool ok) {
    ++checks;
    if (!ok) ++failures;
  };
  Rng rng(8);
  for (int n = 1; n <= 2; ++n) {
    const int pairs = n == 1 ? 6 : 2;
    const auto s = random_bump_diffeos(2 * pairs, dom(n), 800 + n, narrow);
    for (int i = 0; i < pairs; ++i) {
      const auto& g = s[2 * i];
      const auto& h = s[2 * i + 1];
      tally(is_decaying_diffeo(g, poly));
      tally(is_decaying_diffeo(compose_chart(g, h), poly));
      tally(is_decaying_diffeo(invert_chart(g), poly));
      const LinearAction t(Mat(Mat::Identity(n, n) + random_matrix(rng, n, n, 0.3)));
      tally(is_decaying_diffeo(gl_conjugate(t, g), poly));
    }
  }

  const auto line = dom(1);
  const auto ones = bcr_check(WeightFamily({Weight::one()}), line);
  const auto shifted = bcr_check(WeightFamily::shifted_polynomials(3), line);
  const auto top = bcr_check(WeightFamily({Weight::poly_shifted(3)}), line);
  bool successors = true;
  for (std::size_t d = 0; d < 3; ++d) successors = successors && shifted.w3_witness[d] == std::optional<std::size_t>(d + 1);
  const bool bcr = !ones.w3 && successors && !top.w3 && !top.w3_witness[0].has_value();
  return {failures == 0 && bcr,
          fmt("%.0f/%.0f decay checks true; BCR {1}: W3 %.0f, shifted successors found %.0f, ", checks - failures,
              checks, ones.w3, successors) +
              fmt("top degree alone: W3 %.0f", top.w3)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 quasi-inversion matches (A - I)^{-1} + I", 5, quasi_inversion},
      {"2 group axioms on Gaussian-bump charts", 60, group_axioms},
      {"3 derivative formulas against finite differences", 60, derivative_formulas},
      {"4 regularity ODE", 30, regularity},
      {"5 weighted composition and inversion estimates", 0, estimates},
      {"6 counterexample and Schwartz action bound", 10, counterexample},
      {"7 SO(3) mapping group", 30, mapping},
      {"8 decay closure and BCR verdicts", 60, decay_and_bcr},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s criterion %s: %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                in_time ? "" : fmt(", budget %.0f s exceeded", c.budget_s).c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
