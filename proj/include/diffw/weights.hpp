#pragma once

// Weights, weight families, sampled weighted seminorms, decay at infinity and
// the BCR weight conditions.
//
// The supremum over R^n in ||g||_{f,l} = sup |f(x)| ||D^l g(x)||_op is taken
// over a uniform grid on [-R, R]^n. Tail suprema restrict the same grid to
// ||x|| >= r for the radii of the sample domain.

#include "diffw/smooth_map.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace diffw {

enum class WeightKind { constant_one, norm_power, poly_shifted, custom };

class Weight {
 public:
  using Fn = std::function<double(const Vec&)>;

  static Weight one() { return Weight(WeightKind::constant_one, 0, "1", [](const Vec&) { return 1.0; }); }
  /// x -> ||x||^d  (d = 0 gives the constant 1)
  static Weight norm_power(int d) {
    if (d < 0) throw std::invalid_argument("norm_power: negative degree");
    return Weight(WeightKind::norm_power, d, "|x|^" + std::to_string(d),
                  [d](const Vec& x) { return d == 0 ? 1.0 : std::pow(x.norm(), d); });
  }
  /// x -> (1 + ||x||)^d
  static Weight poly_shifted(int d) {
    if (d < 0) throw std::invalid_argument("poly_shifted: negative degree");
    return Weight(WeightKind::poly_shifted, d, "(1+|x|)^" + std::to_string(d),
                  [d](const Vec& x) { return std::pow(1.0 + x.norm(), d); });
  }
  static Weight custom(std::string label, Fn f) { return Weight(WeightKind::custom, 0, std::move(label), std::move(f)); }

  double operator()(const Vec& x) const {
    const double v = fn_(x);
    if (!std::isfinite(v)) throw std::domain_error("weight '" + label_ + "' is not finite at a sample point");
    return v;
  }
  WeightKind kind() const { return kind_; }
  int degree() const { return degree_; }
  const std::string& label() const { return label_; }

  /// Evaluates to exactly 1 everywhere by construction.
  bool is_constant_one() const {
    return kind_ == WeightKind::constant_one || (degree_ == 0 && kind_ != WeightKind::custom);
  }

 private:
  Weight(WeightKind k, int d, std::string label, Fn f) : kind_(k), degree_(d), label_(std::move(label)), fn_(std::move(f)) {}

  WeightKind kind_;
  int degree_;
  std::string label_;
  Fn fn_;
};

class WeightFamily {
 public:
  WeightFamily() = default;
  explicit WeightFamily(std::vector<Weight> members) : members_(std::move(members)) {}

  /// {1} together with ||x||^d for d = 1..max_degree
  static WeightFamily norm_powers(int max_degree, int step = 1) {
    std::vector<Weight> w{Weight::one()};
    for (int d = step; d <= max_degree; d += step) w.push_back(Weight::norm_power(d));
    return WeightFamily(std::move(w));
  }
  /// (1+||x||)^d for d = 0..max_degree
  static WeightFamily shifted_polynomials(int max_degree) {
    std::vector<Weight> w;
    for (int d = 0; d <= max_degree; ++d) w.push_back(Weight::poly_shifted(d));
    return WeightFamily(std::move(w));
  }

  const std::vector<Weight>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains_one() const {
    return std::any_of(members_.begin(), members_.end(), [](const Weight& w) { return w.is_constant_one(); });
  }

 private:
  std::vector<Weight> members_;
};

/// {"kind": "constant_one" | "norm_power" | "poly_shifted", "degree": d}
inline Weight weight_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const int d = j.value("degree", 0);
  if (kind == "constant_one" || kind == "one") return Weight::one();
  if (kind == "norm_power") return Weight::norm_power(d);
  if (kind == "poly_shifted") return Weight::poly_shifted(d);
  throw std::invalid_argument("unknown weight kind '" + kind + "'");
}

inline WeightFamily weight_family_from_json(const nlohmann::json& j) {
  std::vector<Weight> w;
  for (const auto& e : j) w.push_back(weight_from_json(e));
  return WeightFamily(std::move(w));
}

struct SampleDomain {
  double box_halfwidth = 8.0;
  int points_per_axis = 201;
  int dimension = 1;
  std::vector<double> tail_radii;

  static SampleDomain defaults(int dim) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("sample domain: dimension must be 1, 2 or 3");
    SampleDomain d;
    d.dimension = dim;
    d.box_halfwidth = 8.0;
    d.points_per_axis = dim == 1 ? 201 : dim == 2 ? 61 : 25;
    d.tail_radii = {2.0, 4.0, 6.0, 7.5};
    return d;
  }

  void validate() const {
    if (!(box_halfwidth > 0)) throw std::invalid_argument("sample domain: R must be positive");
    if (points_per_axis < 2) throw std::invalid_argument("sample domain: need at least 2 points per axis");
    if (dimension < 1 || dimension > 3) throw std::invalid_argument("sample domain: dimension must be 1, 2 or 3");
    for (std::size_t i = 0; i < tail_radii.size(); ++i) {
      if (tail_radii[i] > box_halfwidth) throw std::invalid_argument("sample domain: tail radius beyond box");
      if (i > 0 && !(tail_radii[i] > tail_radii[i - 1]))
        throw std::invalid_argument("sample domain: tail radii must increase");
    }
  }

  /// Grid with every interval halved; a superset of the current grid.
  SampleDomain refined() const {
    SampleDomain d = *this;
    d.points_per_axis = 2 * points_per_axis - 1;
    return d;
  }

  std::vector<Vec> grid() const {
    validate();
    const std::size_t per = static_cast<std::size_t>(points_per_axis);
    std::size_t total = 1;
    for (int i = 0; i < dimension; ++i) total *= per;
    std::vector<Vec> pts;
    pts.reserve(total);
    const double step = 2.0 * box_halfwidth / static_cast<double>(points_per_axis - 1);
    for (std::size_t f = 0; f < total; ++f) {
      Vec x(dimension);
      std::size_t rest = f;
      for (int k = dimension - 1; k >= 0; --k) {
        x(k) = -box_halfwidth + step * static_cast<double>(rest % per);
        rest /= per;
      }
      pts.push_back(std::move(x));
    }
    return pts;
  }
};

namespace detail {

inline double derivative_norm_at(const SmoothMap& g, const Vec& x, int order) {
  const Jet j = g.jet(x, order);
  return derivative_opnorm(g, j.d[static_cast<std::size_t>(order)]).value;
}

}  // namespace detail

inline void check_order(const SmoothMap& g, int order) {
  if (order < 0 || order > 3 || order > g.max_order())
    throw UnsupportedOrder("seminorm order " + std::to_string(order) + " not supported by this map (max " +
                           std::to_string(g.max_order()) + ")");
}

/// Grid values |f(x)| * ||D^l g(x)||_op.
inline std::vector<double> weighted_profile(const SmoothMap& g, const Weight& f, int order, const std::vector<Vec>& pts) {
  check_order(g, order);
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double w = std::abs(f(pts[i]));
    out[i] = w == 0.0 ? 0.0 : w * detail::derivative_norm_at(g, pts[i], order);
  }
  return out;
}

/// Sampled ||g||_{f,l}.
inline double seminorm(const SmoothMap& g, const Weight& f, int order, const SampleDomain& dom) {
  const auto prof = weighted_profile(g, f, order, dom.grid());
  return prof.empty() ? 0.0 : *std::max_element(prof.begin(), prof.end());
}

inline double seminorm(const SmoothMap& g, int order, const SampleDomain& dom) {
  return seminorm(g, Weight::one(), order, dom);
}

struct TailRecord {
  std::string weight;
  int order = 0;
  double value = 0.0;              // full-grid seminorm
  std::vector<double> radii;
  std::vector<double> tail;        // tail sup for ||x|| >= radii[i]
  bool decays = false;
};

struct DecayReport {
  bool decaying = true;
  double tolerance = 1e-6;
  std::vector<TailRecord> records;
};

inline void to_json(nlohmann::json& j, const TailRecord& r) {
  j = nlohmann::json{{"weight", r.weight}, {"order", r.order}, {"value", r.value},
                     {"radii", r.radii},   {"tail", r.tail},   {"decays", r.decays}};
}

inline void to_json(nlohmann::json& j, const DecayReport& r) {
  j = nlohmann::json{{"decaying", r.decaying}, {"tolerance", r.tolerance}, {"records", r.records}};
}

/// Decay at infinity of every ||g||_{f,l}, f in W, l <= k: the tail supremum
/// at the outermost radius must fall below decay_tol times the full seminorm.
inline DecayReport is_decaying(const SmoothMap& g, const WeightFamily& family, int k, const SampleDomain& dom,
                               double decay_tol = 1e-6) {
  if (k < 0 || k > 2) throw UnsupportedOrder("is_decaying: order must be <= 2");
  dom.validate();
  if (dom.tail_radii.empty()) throw std::invalid_argument("is_decaying: domain has no tail radii");
  const auto pts = dom.grid();
  std::vector<double> norms(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) norms[i] = pts[i].norm();

  DecayReport rep;
  rep.tolerance = decay_tol;
  for (const auto& f : family.members()) {
    for (int l = 0; l <= k; ++l) {
      const auto prof = weighted_profile(g, f, l, pts);
      TailRecord rec;
      rec.weight = f.label();
      rec.order = l;
      rec.radii = dom.tail_radii;
      rec.value = *std::max_element(prof.begin(), prof.end());
      for (double r : dom.tail_radii) {
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
          if (norms[i] >= r) s = std::max(s, prof[i]);
        rec.tail.push_back(s);
      }
      rec.decays = rec.tail.back() <= decay_tol * rec.value;
      rep.decaying = rep.decaying && rec.decays;
      rep.records.push_back(std::move(rec));
    }
  }
  return rep;
}

struct BcrReport {
  bool w1 = true;
  bool w2 = false;
  bool w3 = false;
  /// For each member, the index of a member dominating it at infinity.
  std::vector<std::optional<std::size_t>> w3_witness;
  /// Tail sup of f1/f2 along the radii for the chosen witness (or the best
  /// candidate when none qualifies).
  std::vector<std::vector<double>> w3_ratio_tail;
  std::vector<double> radii;
};

inline void to_json(nlohmann::json& j, const BcrReport& r) {
  nlohmann::json witness = nlohmann::json::array();
  for (const auto& w : r.w3_witness) witness.push_back(w ? nlohmann::json(*w) : nlohmann::json(nullptr));
  j = nlohmann::json{{"W1", r.w1},         {"W2", r.w2},       {"W3", r.w3},
                     {"W3_witness", witness}, {"W3_ratio_tail", r.w3_ratio_tail}, {"radii", r.radii}};
}

/// Ratio profile f1/f2 counts as tending to zero at infinity when its tail
/// sup strictly decreases along the radii and the last value is at most
/// this fraction of the first.
inline constexpr double kBcrTailShrink = 0.5;

/// Weight conditions W1-W3 on the sampled domain. All weights here are
/// finite, so W1 holds trivially.
inline BcrReport bcr_check(const WeightFamily& family, const SampleDomain& dom) {
  dom.validate();
  const auto pts = dom.grid();
  const auto& ws = family.members();
  BcrReport rep;
  rep.radii = dom.tail_radii;

  std::vector<std::vector<double>> vals(ws.size(), std::vector<double>(pts.size()));
  for (std::size_t a = 0; a < ws.size(); ++a)
    for (std::size_t i = 0; i < pts.size(); ++i) vals[a][i] = ws[a](pts[i]);

  // W2: a member equal to 1 that is pointwise below every other member.
  for (std::size_t a = 0; a < ws.size() && !rep.w2; ++a) {
    bool is_one = std::all_of(vals[a].begin(), vals[a].end(), [](double v) { return v == 1.0; });
    if (!is_one) continue;
    bool smallest = true;
    for (std::size_t b = 0; b < ws.size() && smallest; ++b)
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (vals[b][i] < 1.0) {
          smallest = false;
          break;
        }
    rep.w2 = smallest;
  }

  rep.w3 = !ws.empty();
  for (std::size_t a = 0; a < ws.size(); ++a) {
    std::optional<std::size_t> witness;
    std::vector<double> best_tail;
    double best_last = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < ws.size(); ++b) {
      std::vector<double> tail;
      bool defined = true;
      for (double r : dom.tail_radii) {
        double s = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (pts[i].norm() < r) continue;
          if (vals[b][i] == 0.0) {
            defined = false;
            break;
          }
          s = std::max(s, vals[a][i] / vals[b][i]);
        }
        tail.push_back(s);
      }
      if (!defined || tail.empty()) continue;
      bool decreasing = true;
      for (std::size_t i = 1; i < tail.size(); ++i) decreasing = decreasing && tail[i] < tail[i - 1];
      const bool ok = decreasing && tail.back() <= kBcrTailShrink * tail.front();
      if (ok && (!witness || tail.back() > best_last)) {
        // Prefer the slowest qualifying witness: the next member up.
        witness = b;
        best_last = tail.back();
        best_tail = tail;
      } else if (!witness && best_tail.empty()) {
        best_tail = tail;
      }
    }
    rep.w3_witness.push_back(witness);
    rep.w3_ratio_tail.push_back(best_tail);
    rep.w3 = rep.w3 && witness.has_value();
  }
  return rep;
}

}  // namespace diffw
