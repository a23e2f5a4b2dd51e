#pragma once

// Smooth maps R^n -> R^m with derivative jets up to order 3.
//
// A SmoothMap is an immutable handle on a node graph. Catalog nodes (affine,
// Gaussian bump, sine profile, polynomial times Gaussian) return closed-form
// jets to order 3. Composite nodes (sum, scaled, composed, superposition,
// derivative) assemble their jets from their children and raise one further
// order by central differences. Black-box nodes (fd_wrapped) only provide
// values; their jets to order 2 come from central differences.

#include "diffw/tensor.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace diffw {

/// Value and derivative tensors D^0..D^order at one point.
struct Jet {
  std::vector<MultilinearTensor> d;

  int order() const { return static_cast<int>(d.size()) - 1; }
  Vec value() const { return Eigen::Map<const Vec>(d[0].data.data(), d[0].rows); }
  Mat jacobian() const {
    const auto& t = d.at(1);
    Mat m(t.rows, t.slots[0]);
    for (int r = 0; r < t.rows; ++r)
      for (int j = 0; j < t.slots[0]; ++j) m(r, j) = t(r, static_cast<std::size_t>(j));
    return m;
  }
};

enum class MapKind {
  affine,
  gaussian_bump,
  sine_profile,
  poly_gauss,
  sum,
  scaled,
  composed,
  superposition,
  derivative,
  reshaped,
  fd_wrapped,
};

namespace detail {

inline std::uint64_t next_node_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

inline double fd_step(const Vec& x, double base) { return base * std::max(1.0, x.norm()); }

}  // namespace detail

class SmoothMapNode {
 public:
  SmoothMapNode(int dim_in, int rows, int cols) : dim_in_(dim_in), rows_(rows), cols_(cols) {}
  virtual ~SmoothMapNode() = default;

  int dim_in() const { return dim_in_; }
  int dim_out() const { return rows_ * cols_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::uint64_t id() const { return id_; }

  virtual MapKind kind() const = 0;
  /// Highest order served without this node's own difference quotients.
  virtual int direct_order() const = 0;
  virtual int max_order() const { return std::min(3, direct_order() + 1); }
  virtual Jet direct_jet(const Vec& x, int order) const = 0;

  virtual Vec value(const Vec& x) const { return direct_jet(x, 0).value(); }

  virtual Jet jet(const Vec& x, int order) const {
    if (order < 0 || order > max_order())
      throw UnsupportedOrder("jet order " + std::to_string(order) + " exceeds supported order " +
                             std::to_string(max_order()));
    if (x.size() != dim_in_) throw DimensionMismatch("jet: point dimension mismatch");
    if (order <= direct_order()) return direct_jet(x, order);
    Jet j = direct_jet(x, order - 1);
    j.d.push_back(raise_by_differences(x, order - 1));
    return j;
  }

 protected:
  // Central difference of the order-l tensor with h and h/2, one Richardson step.
  MultilinearTensor raise_by_differences(const Vec& x, int l) const {
    const int n = dim_in_;
    MultilinearTensor out = MultilinearTensor::derivative(dim_out(), n, l + 1);
    const double h = detail::fd_step(x, 1e-5);
    const std::size_t vol = MultilinearTensor::volume_of(std::vector<int>(static_cast<std::size_t>(l), n));
    for (int k = 0; k < n; ++k) {
      auto diff = [&](double step) {
        Vec xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        MultilinearTensor tp = direct_jet(xp, l).d[static_cast<std::size_t>(l)];
        const MultilinearTensor tm = direct_jet(xm, l).d[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < tp.data.size(); ++i) tp.data[i] = (tp.data[i] - tm.data[i]) / (2.0 * step);
        return tp;
      };
      const MultilinearTensor coarse = diff(h);
      const MultilinearTensor fine = diff(0.5 * h);
      for (int r = 0; r < dim_out(); ++r)
        for (std::size_t f = 0; f < vol; ++f)
          out(r, f * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)) =
              (4.0 * fine(r, f) - coarse(r, f)) / 3.0;
    }
    return out;
  }

 private:
  int dim_in_;
  int rows_;
  int cols_;
  std::uint64_t id_ = detail::next_node_id();
};

using Evaluator = std::function<Vec(const Vec&)>;

class SmoothMap {
 public:
  SmoothMap() = default;
  explicit SmoothMap(std::shared_ptr<const SmoothMapNode> node) : node_(std::move(node)) {}

  int dim_in() const { return node_->dim_in(); }
  int dim_out() const { return node_->dim_out(); }
  int rows() const { return node_->rows(); }
  int cols() const { return node_->cols(); }
  int max_order() const { return node_->max_order(); }
  MapKind kind() const { return node_->kind(); }
  bool valid() const { return static_cast<bool>(node_); }
  const SmoothMapNode& node() const { return *node_; }
  const std::shared_ptr<const SmoothMapNode>& node_ptr() const { return node_; }

  Jet jet(const Vec& x, int order) const { return node_->jet(x, order); }
  Vec operator()(const Vec& x) const {
    if (x.size() != dim_in()) throw DimensionMismatch("evaluate: point dimension mismatch");
    return node_->value(x);
  }
  Mat jacobian(const Vec& x) const { return jet(x, 1).jacobian(); }
  /// Value reshaped to rows x cols (row-major storage).
  Mat matrix_value(const Vec& x) const {
    const Vec v = (*this)(x);
    Mat m(rows(), cols());
    for (int r = 0; r < rows(); ++r)
      for (int c = 0; c < cols(); ++c) m(r, c) = v(r * cols() + c);
    return m;
  }

 private:
  std::shared_ptr<const SmoothMapNode> node_;
};

inline Vec flatten_row_major(const Mat& m) {
  Vec v(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) v(r * m.cols() + c) = m(r, c);
  return v;
}

inline Mat unflatten_row_major(const Vec& v, int rows, int cols) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = v(r * cols + c);
  return m;
}

namespace detail {

// Jet of a scalar function of x, flat tensors with rows = 1.
struct ScalarJet {
  std::vector<MultilinearTensor> d;
};

inline ScalarJet scalar_jet_zero(int n, int order) {
  ScalarJet s;
  for (int l = 0; l <= order; ++l) s.d.push_back(MultilinearTensor::derivative(1, n, l));
  return s;
}

// Jet of x -> q(<w, x - c>) given q^{(l)} at the point.
inline ScalarJet ridge_jet(const Vec& w, std::span<const double> q_derivs, int order) {
  const int n = static_cast<int>(w.size());
  ScalarJet s = scalar_jet_zero(n, order);
  for (int l = 0; l <= order; ++l) {
    auto& t = s.d[static_cast<std::size_t>(l)];
    std::vector<int> idx(static_cast<std::size_t>(l));
    for (std::size_t f = 0; f < t.volume(); ++f) {
      t.unflatten(f, idx);
      double p = q_derivs[static_cast<std::size_t>(l)];
      for (int j : idx) p *= w(j);
      t(0, f) = p;
    }
  }
  return s;
}

// Jet of x -> exp(-||x - c||^2 / sigma^2).
inline ScalarJet gaussian_jet(const Vec& x, const Vec& c, double sigma, int order) {
  const int n = static_cast<int>(x.size());
  const double s = 1.0 / (sigma * sigma);
  const Vec y = x - c;
  const double g = std::exp(-s * y.squaredNorm());
  ScalarJet out = scalar_jet_zero(n, order);
  out.d[0](0, 0) = g;
  if (order >= 1)
    for (int j = 0; j < n; ++j) out.d[1](0, static_cast<std::size_t>(j)) = -2.0 * s * y(j) * g;
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  if (order >= 2)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        out.d[2](0, static_cast<std::size_t>(j * n + k)) = (4.0 * s * s * y(j) * y(k) - 2.0 * s * delta(j, k)) * g;
  if (order >= 3)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out.d[3](0, static_cast<std::size_t>((j * n + k) * n + l)) =
              (-8.0 * s * s * s * y(j) * y(k) * y(l) +
               4.0 * s * s * (delta(j, k) * y(l) + delta(j, l) * y(k) + delta(k, l) * y(j))) *
              g;
  return out;
}

// Leibniz rule for the product of two scalar jets.
inline ScalarJet product_jet(const ScalarJet& a, const ScalarJet& b, int n, int order) {
  ScalarJet p = scalar_jet_zero(n, order);
  auto A = [&](int l, std::initializer_list<int> idx) {
    return a.d[static_cast<std::size_t>(l)](0, a.d[static_cast<std::size_t>(l)].flat_index(std::vector<int>(idx)));
  };
  auto B = [&](int l, std::initializer_list<int> idx) {
    return b.d[static_cast<std::size_t>(l)](0, b.d[static_cast<std::size_t>(l)].flat_index(std::vector<int>(idx)));
  };
  p.d[0](0, 0) = A(0, {}) * B(0, {});
  if (order >= 1)
    for (int j = 0; j < n; ++j) p.d[1](0, static_cast<std::size_t>(j)) = A(1, {j}) * B(0, {}) + A(0, {}) * B(1, {j});
  if (order >= 2)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        p.d[2](0, static_cast<std::size_t>(j * n + k)) = A(2, {j, k}) * B(0, {}) + A(1, {j}) * B(1, {k}) +
                                                         A(1, {k}) * B(1, {j}) + A(0, {}) * B(2, {j, k});
  if (order >= 3)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          p.d[3](0, static_cast<std::size_t>((j * n + k) * n + l)) =
              A(3, {j, k, l}) * B(0, {}) + A(2, {j, k}) * B(1, {l}) + A(2, {j, l}) * B(1, {k}) +
              A(2, {k, l}) * B(1, {j}) + A(1, {j}) * B(2, {k, l}) + A(1, {k}) * B(2, {j, l}) +
              A(1, {l}) * B(2, {j, k}) + A(0, {}) * B(3, {j, k, l});
  return p;
}

inline Jet outer_with_amplitude(const ScalarJet& s, const Vec& amplitude) {
  Jet j;
  for (const auto& t : s.d) {
    MultilinearTensor out(static_cast<int>(amplitude.size()), t.slots);
    for (int r = 0; r < out.rows; ++r)
      for (std::size_t f = 0; f < t.volume(); ++f) out(r, f) = amplitude(r) * t(0, f);
    j.d.push_back(std::move(out));
  }
  return j;
}

inline int shape_rows(int dim_out, int rows) { return rows > 0 ? rows : dim_out; }

class AffineNode final : public SmoothMapNode {
 public:
  AffineNode(Mat a, Vec b, int rows)
      : SmoothMapNode(static_cast<int>(a.cols()), shape_rows(static_cast<int>(a.rows()), rows),
                      static_cast<int>(a.rows()) / shape_rows(static_cast<int>(a.rows()), rows)),
        a_(std::move(a)),
        b_(std::move(b)) {
    if (b_.size() != a_.rows()) throw DimensionMismatch("affine: A and b disagree");
  }
  MapKind kind() const override { return MapKind::affine; }
  int direct_order() const override { return 3; }
  Vec value(const Vec& x) const override { return a_ * x + b_; }
  Jet direct_jet(const Vec& x, int order) const override {
    const int m = static_cast<int>(a_.rows()), n = static_cast<int>(a_.cols());
    Jet j;
    MultilinearTensor v(m, {});
    const Vec y = a_ * x + b_;
    for (int r = 0; r < m; ++r) v(r, 0) = y(r);
    j.d.push_back(std::move(v));
    if (order >= 1) {
      MultilinearTensor d1 = MultilinearTensor::derivative(m, n, 1);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) d1(r, static_cast<std::size_t>(c)) = a_(r, c);
      j.d.push_back(std::move(d1));
    }
    for (int l = 2; l <= order; ++l) j.d.push_back(MultilinearTensor::derivative(m, n, l));
    return j;
  }
  const Mat& linear() const { return a_; }
  const Vec& offset() const { return b_; }

 private:
  Mat a_;
  Vec b_;
};

class GaussianNode final : public SmoothMapNode {
 public:
  GaussianNode(Vec center, double sigma, Vec amplitude, int rows)
      : SmoothMapNode(static_cast<int>(center.size()), shape_rows(static_cast<int>(amplitude.size()), rows),
                      static_cast<int>(amplitude.size()) / shape_rows(static_cast<int>(amplitude.size()), rows)),
        center_(std::move(center)),
        sigma_(sigma),
        amplitude_(std::move(amplitude)) {
    if (!(sigma_ > 0)) throw std::invalid_argument("gaussian_bump: sigma must be positive");
  }
  MapKind kind() const override { return MapKind::gaussian_bump; }
  int direct_order() const override { return 3; }
  Vec value(const Vec& x) const override {
    return amplitude_ * std::exp(-(x - center_).squaredNorm() / (sigma_ * sigma_));
  }
  Jet direct_jet(const Vec& x, int order) const override {
    return outer_with_amplitude(gaussian_jet(x, center_, sigma_, order), amplitude_);
  }

 private:
  Vec center_;
  double sigma_;
  Vec amplitude_;
};

class SineNode final : public SmoothMapNode {
 public:
  SineNode(Vec amplitude, Vec frequency, double phase, int rows)
      : SmoothMapNode(static_cast<int>(frequency.size()), shape_rows(static_cast<int>(amplitude.size()), rows),
                      static_cast<int>(amplitude.size()) / shape_rows(static_cast<int>(amplitude.size()), rows)),
        amplitude_(std::move(amplitude)),
        frequency_(std::move(frequency)),
        phase_(phase) {}
  MapKind kind() const override { return MapKind::sine_profile; }
  int direct_order() const override { return 3; }
  Vec value(const Vec& x) const override { return amplitude_ * std::sin(frequency_.dot(x) + phase_); }
  Jet direct_jet(const Vec& x, int order) const override {
    const double t = frequency_.dot(x) + phase_;
    const double q[4] = {std::sin(t), std::cos(t), -std::sin(t), -std::cos(t)};
    return outer_with_amplitude(ridge_jet(frequency_, q, order), amplitude_);
  }

 private:
  Vec amplitude_;
  Vec frequency_;
  double phase_;
};

class PolyGaussNode final : public SmoothMapNode {
 public:
  PolyGaussNode(std::vector<double> coeffs, Vec direction, Vec center, double sigma, Vec amplitude, int rows)
      : SmoothMapNode(static_cast<int>(center.size()), shape_rows(static_cast<int>(amplitude.size()), rows),
                      static_cast<int>(amplitude.size()) / shape_rows(static_cast<int>(amplitude.size()), rows)),
        coeffs_(std::move(coeffs)),
        direction_(std::move(direction)),
        center_(std::move(center)),
        sigma_(sigma),
        amplitude_(std::move(amplitude)) {
    if (direction_.size() != center_.size()) throw DimensionMismatch("poly_gauss: direction/center mismatch");
    if (!(sigma_ > 0)) throw std::invalid_argument("poly_gauss: sigma must be positive");
  }
  MapKind kind() const override { return MapKind::poly_gauss; }
  int direct_order() const override { return 3; }
  Jet direct_jet(const Vec& x, int order) const override {
    const int n = dim_in();
    const double t = direction_.dot(x - center_);
    // q^{(l)}(t) for the polynomial sum c_k t^k
    double q[4] = {0, 0, 0, 0};
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      for (int l = 0; l <= 3; ++l) {
        if (static_cast<int>(k) < l) continue;
        double falling = 1.0;
        for (int i = 0; i < l; ++i) falling *= static_cast<double>(static_cast<int>(k) - i);
        q[l] += coeffs_[k] * falling * std::pow(t, static_cast<double>(static_cast<int>(k) - l));
      }
    }
    const ScalarJet p = ridge_jet(direction_, q, order);
    const ScalarJet g = gaussian_jet(x, center_, sigma_, order);
    return outer_with_amplitude(product_jet(p, g, n, order), amplitude_);
  }

 private:
  std::vector<double> coeffs_;
  Vec direction_;
  Vec center_;
  double sigma_;
  Vec amplitude_;
};

class SumNode final : public SmoothMapNode {
 public:
  explicit SumNode(std::vector<SmoothMap> terms)
      : SmoothMapNode(terms.at(0).dim_in(), terms.at(0).rows(), terms.at(0).cols()), terms_(std::move(terms)) {
    for (const auto& t : terms_)
      if (t.dim_in() != dim_in() || t.dim_out() != dim_out()) throw DimensionMismatch("sum: term shapes differ");
  }
  MapKind kind() const override { return MapKind::sum; }
  int direct_order() const override {
    int o = 3;
    for (const auto& t : terms_) o = std::min(o, t.max_order());
    return o;
  }
  int max_order() const override { return direct_order(); }
  Vec value(const Vec& x) const override {
    Vec v = terms_[0](x);
    for (std::size_t i = 1; i < terms_.size(); ++i) v += terms_[i](x);
    return v;
  }
  Jet direct_jet(const Vec& x, int order) const override {
    Jet j = terms_[0].jet(x, order);
    for (std::size_t i = 1; i < terms_.size(); ++i) {
      const Jet o = terms_[i].jet(x, order);
      for (int l = 0; l <= order; ++l) j.d[static_cast<std::size_t>(l)] += o.d[static_cast<std::size_t>(l)];
    }
    return j;
  }

 private:
  std::vector<SmoothMap> terms_;
};

class ScaledNode final : public SmoothMapNode {
 public:
  ScaledNode(double c, SmoothMap inner)
      : SmoothMapNode(inner.dim_in(), inner.rows(), inner.cols()), c_(c), inner_(std::move(inner)) {}
  MapKind kind() const override { return MapKind::scaled; }
  int direct_order() const override { return inner_.max_order(); }
  int max_order() const override { return direct_order(); }
  Vec value(const Vec& x) const override { return c_ * inner_(x); }
  Jet direct_jet(const Vec& x, int order) const override {
    Jet j = inner_.jet(x, order);
    for (auto& t : j.d) t *= c_;
    return j;
  }

 private:
  double c_;
  SmoothMap inner_;
};

class ReshapedNode final : public SmoothMapNode {
 public:
  ReshapedNode(SmoothMap inner, int rows, int cols)
      : SmoothMapNode(inner.dim_in(), rows, cols), inner_(std::move(inner)) {
    if (rows * cols != inner_.dim_out()) throw DimensionMismatch("reshape: size mismatch");
  }
  MapKind kind() const override { return MapKind::reshaped; }
  int direct_order() const override { return inner_.max_order(); }
  int max_order() const override { return direct_order(); }
  Vec value(const Vec& x) const override { return inner_(x); }
  Jet direct_jet(const Vec& x, int order) const override { return inner_.jet(x, order); }

 private:
  SmoothMap inner_;
};

// Chain rule: orders 1 and 2 assembled from the children's jets.
class ComposedNode final : public SmoothMapNode {
 public:
  ComposedNode(SmoothMap outer, SmoothMap inner)
      : SmoothMapNode(inner.dim_in(), outer.rows(), outer.cols()), outer_(std::move(outer)), inner_(std::move(inner)) {
    if (inner_.dim_out() != outer_.dim_in()) throw DimensionMismatch("compose: inner output != outer input");
  }
  MapKind kind() const override { return MapKind::composed; }
  int direct_order() const override { return std::min({2, outer_.max_order(), inner_.max_order()}); }
  Vec value(const Vec& x) const override { return outer_(inner_(x)); }

  Jet direct_jet(const Vec& x, int order) const override {
    const Jet in = inner_jet(x, order);
    const Jet out = outer_.jet(in.value(), order);
    const int n = dim_in(), k = inner_.dim_out(), m = dim_out();
    Jet j;
    j.d.push_back(out.d[0]);
    if (order >= 1) {
      MultilinearTensor d1 = MultilinearTensor::derivative(m, n, 1);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int a = 0; a < k; ++a) s += out.d[1](r, static_cast<std::size_t>(a)) * in.d[1](a, static_cast<std::size_t>(c));
          d1(r, static_cast<std::size_t>(c)) = s;
        }
      j.d.push_back(std::move(d1));
    }
    if (order >= 2) {
      MultilinearTensor d2 = MultilinearTensor::derivative(m, n, 2);
      const auto& g1 = out.d[1];
      const auto& g2 = out.d[2];
      const auto& e1 = in.d[1];
      const auto& e2 = in.d[2];
      for (int r = 0; r < m; ++r)
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) {
            double s = 0.0;
            for (int a = 0; a < k; ++a) {
              const double ja = e1(a, static_cast<std::size_t>(p));
              for (int b = 0; b < k; ++b)
                s += g2(r, static_cast<std::size_t>(a * k + b)) * ja * e1(b, static_cast<std::size_t>(q));
              s += g1(r, static_cast<std::size_t>(a)) * e2(a, static_cast<std::size_t>(p * n + q));
            }
            d2(r, static_cast<std::size_t>(p * n + q)) = s;
          }
      j.d.push_back(std::move(d2));
    }
    return j;
  }

 private:
  // Single-entry, per-thread cache of the inner jet: grid sweeps evaluate
  // several orders at the same point in a row.
  Jet inner_jet(const Vec& x, int order) const {
    struct Entry {
      std::uint64_t id = 0;
      int order = -1;
      Vec x;
      Jet jet;
    };
    thread_local Entry cache;
    if (cache.id == id() && cache.order >= order && cache.x.size() == x.size() && cache.x == x) {
      Jet j = cache.jet;
      j.d.resize(static_cast<std::size_t>(order) + 1);
      return j;
    }
    Jet j = inner_.jet(x, order);
    cache = Entry{id(), order, x, j};
    return j;
  }

  SmoothMap outer_;
  SmoothMap inner_;
};

// x -> b(g_1(x), ..., g_m(x)) for a multilinear b.
class SuperpositionNode final : public SmoothMapNode {
 public:
  SuperpositionNode(MultilinearTensor b, std::vector<SmoothMap> args, int rows)
      : SmoothMapNode(args.at(0).dim_in(), shape_rows(b.rows, rows), b.rows / shape_rows(b.rows, rows)),
        b_(std::move(b)),
        args_(std::move(args)) {
    if (static_cast<int>(args_.size()) != b_.order()) throw DimensionMismatch("superpose: arity mismatch");
    if (args_.size() > 3) throw DimensionMismatch("superpose: at most trilinear forms");
    for (std::size_t i = 0; i < args_.size(); ++i) {
      if (args_[i].dim_out() != b_.slots[i]) throw DimensionMismatch("superpose: argument dimension mismatch");
      if (args_[i].dim_in() != dim_in()) throw DimensionMismatch("superpose: domain mismatch");
    }
  }
  MapKind kind() const override { return MapKind::superposition; }
  int direct_order() const override {
    int o = 2;
    for (const auto& a : args_) o = std::min(o, a.max_order());
    return o;
  }
  Jet direct_jet(const Vec& x, int order) const override {
    const int n = dim_in(), m = dim_out();
    std::vector<Jet> jets;
    std::vector<Vec> vals;
    for (const auto& a : args_) {
      jets.push_back(a.jet(x, order));
      vals.push_back(jets.back().value());
    }
    auto column = [&](std::size_t i, int l, std::size_t flat) {
      const auto& t = jets[i].d[static_cast<std::size_t>(l)];
      Vec v(t.rows);
      for (int r = 0; r < t.rows; ++r) v(r) = t(r, flat);
      return v;
    };
    Jet j;
    MultilinearTensor v0(m, {});
    const Vec y = b_.apply(vals);
    for (int r = 0; r < m; ++r) v0(r, 0) = y(r);
    j.d.push_back(std::move(v0));
    if (order >= 1) {
      MultilinearTensor d1 = MultilinearTensor::derivative(m, n, 1);
      for (int k = 0; k < n; ++k) {
        Vec s = Vec::Zero(m);
        for (std::size_t i = 0; i < args_.size(); ++i) {
          std::vector<Vec> a = vals;
          a[i] = column(i, 1, static_cast<std::size_t>(k));
          s += b_.apply(a);
        }
        for (int r = 0; r < m; ++r) d1(r, static_cast<std::size_t>(k)) = s(r);
      }
      j.d.push_back(std::move(d1));
    }
    if (order >= 2) {
      MultilinearTensor d2 = MultilinearTensor::derivative(m, n, 2);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          Vec s = Vec::Zero(m);
          for (std::size_t i = 0; i < args_.size(); ++i) {
            std::vector<Vec> a = vals;
            a[i] = column(i, 2, static_cast<std::size_t>(p * n + q));
            s += b_.apply(a);
            for (std::size_t l = 0; l < args_.size(); ++l) {
              if (l == i) continue;
              std::vector<Vec> c = vals;
              c[i] = column(i, 1, static_cast<std::size_t>(p));
              c[l] = column(l, 1, static_cast<std::size_t>(q));
              s += b_.apply(c);
            }
          }
          for (int r = 0; r < m; ++r) d2(r, static_cast<std::size_t>(p * n + q)) = s(r);
        }
      j.d.push_back(std::move(d2));
    }
    return j;
  }

 private:
  MultilinearTensor b_;
  std::vector<SmoothMap> args_;
};

// x -> Dg(x) as an (m x n)-matrix-valued map.
class DerivativeNode final : public SmoothMapNode {
 public:
  explicit DerivativeNode(SmoothMap g) : SmoothMapNode(g.dim_in(), g.dim_out(), g.dim_in()), g_(std::move(g)) {
    if (g_.max_order() < 1) throw UnsupportedOrder("derivative: map has no first derivative");
  }
  MapKind kind() const override { return MapKind::derivative; }
  int direct_order() const override { return g_.max_order() - 1; }
  int max_order() const override { return direct_order(); }
  Jet direct_jet(const Vec& x, int order) const override {
    const Jet src = g_.jet(x, order + 1);
    const int n = dim_in();
    Jet j;
    for (int l = 0; l <= order; ++l) {
      MultilinearTensor t = MultilinearTensor::derivative(dim_out(), n, l);
      t.data = src.d[static_cast<std::size_t>(l) + 1].data;
      j.d.push_back(std::move(t));
    }
    return j;
  }

 private:
  SmoothMap g_;
};

// Values from a callback; first and second derivatives by central
// differences with one Richardson step.
class FdWrappedNode final : public SmoothMapNode {
 public:
  FdWrappedNode(Evaluator f, int dim_in, int rows, int cols) : SmoothMapNode(dim_in, rows, cols), f_(std::move(f)) {}
  MapKind kind() const override { return MapKind::fd_wrapped; }
  int direct_order() const override { return 2; }
  int max_order() const override { return 2; }
  Vec value(const Vec& x) const override { return f_(x); }
  Jet direct_jet(const Vec& x, int order) const override {
    const int n = dim_in(), m = dim_out();
    const Vec f0 = f_(x);
    if (f0.size() != m) throw DimensionMismatch("fd_wrapped: evaluator output size mismatch");
    Jet j;
    MultilinearTensor v(m, {});
    for (int r = 0; r < m; ++r) v(r, 0) = f0(r);
    j.d.push_back(std::move(v));
    if (order >= 1) {
      MultilinearTensor d1 = MultilinearTensor::derivative(m, n, 1);
      const double h = detail::fd_step(x, 1e-5);
      for (int k = 0; k < n; ++k) {
        auto diff = [&](double s) {
          Vec xp = x, xm = x;
          xp(k) += s;
          xm(k) -= s;
          return Vec((f_(xp) - f_(xm)) / (2.0 * s));
        };
        const Vec g = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
        for (int r = 0; r < m; ++r) d1(r, static_cast<std::size_t>(k)) = g(r);
      }
      j.d.push_back(std::move(d1));
    }
    if (order >= 2) {
      MultilinearTensor d2 = MultilinearTensor::derivative(m, n, 2);
      const double h = detail::fd_step(x, 1e-3);
      for (int p = 0; p < n; ++p)
        for (int q = p; q < n; ++q) {
          auto diff = [&](double s) -> Vec {
            if (p == q) {
              Vec xp = x, xm = x;
              xp(p) += s;
              xm(p) -= s;
              return (f_(xp) - 2.0 * f0 + f_(xm)) / (s * s);
            }
            Vec xpp = x, xpm = x, xmp = x, xmm = x;
            xpp(p) += s; xpp(q) += s;
            xpm(p) += s; xpm(q) -= s;
            xmp(p) -= s; xmp(q) += s;
            xmm(p) -= s; xmm(q) -= s;
            return (f_(xpp) - f_(xpm) - f_(xmp) + f_(xmm)) / (4.0 * s * s);
          };
          const Vec g = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
          for (int r = 0; r < m; ++r) {
            d2(r, static_cast<std::size_t>(p * n + q)) = g(r);
            d2(r, static_cast<std::size_t>(q * n + p)) = g(r);
          }
        }
      j.d.push_back(std::move(d2));
    }
    return j;
  }

 private:
  Evaluator f_;
};

}  // namespace detail

// ---- construction -------------------------------------------------------

template <class Node, class... Args>
SmoothMap make_map(Args&&... args) {
  return SmoothMap(std::make_shared<const Node>(std::forward<Args>(args)...));
}

/// x -> A x + b. `rows` > 0 reshapes the output as a rows x (m/rows) matrix.
inline SmoothMap affine(Mat a, Vec b, int rows = 0) { return make_map<detail::AffineNode>(std::move(a), std::move(b), rows); }
inline SmoothMap linear(Mat a) {
  Vec b = Vec::Zero(a.rows());
  return affine(std::move(a), std::move(b));
}
inline SmoothMap identity_map(int n) { return linear(Mat::Identity(n, n)); }
inline SmoothMap zero_map(int n, int m) { return affine(Mat::Zero(m, n), Vec::Zero(m)); }
inline SmoothMap constant_map(int n, Vec c) {
  const auto m = c.size();
  return affine(Mat::Zero(m, n), std::move(c));
}

/// x -> amplitude * exp(-||x - center||^2 / sigma^2).
inline SmoothMap gaussian_bump(Vec center, double sigma, Vec amplitude, int rows = 0) {
  return make_map<detail::GaussianNode>(std::move(center), sigma, std::move(amplitude), rows);
}

/// x -> amplitude * sin(<frequency, x> + phase).
inline SmoothMap sine_profile(Vec amplitude, Vec frequency, double phase = 0.0, int rows = 0) {
  return make_map<detail::SineNode>(std::move(amplitude), std::move(frequency), phase, rows);
}

/// x -> amplitude * (sum_k c_k t^k) * exp(-||x - center||^2 / sigma^2),
/// t = <direction, x - center>.
inline SmoothMap poly_gauss(std::vector<double> coeffs, Vec direction, Vec center, double sigma, Vec amplitude,
                            int rows = 0) {
  return make_map<detail::PolyGaussNode>(std::move(coeffs), std::move(direction), std::move(center), sigma,
                                         std::move(amplitude), rows);
}

inline SmoothMap sum(std::vector<SmoothMap> terms) {
  if (terms.empty()) throw std::invalid_argument("sum: no terms");
  if (terms.size() == 1) return terms[0];
  return make_map<detail::SumNode>(std::move(terms));
}
inline SmoothMap scaled(double c, SmoothMap inner) { return make_map<detail::ScaledNode>(c, std::move(inner)); }
inline SmoothMap reshaped(SmoothMap inner, int rows, int cols) {
  return make_map<detail::ReshapedNode>(std::move(inner), rows, cols);
}

/// outer o inner. Jets to order 2 follow the chain rule; order 3 is raised by
/// central differences.
inline SmoothMap compose(SmoothMap outer, SmoothMap inner) {
  return make_map<detail::ComposedNode>(std::move(outer), std::move(inner));
}

/// x -> b(args_1(x), ..., args_m(x)), m <= 3.
inline SmoothMap multilinear_superpose(MultilinearTensor b, std::vector<SmoothMap> args, int rows = 0) {
  if (args.empty()) throw DimensionMismatch("superpose: no arguments");
  return make_map<detail::SuperpositionNode>(std::move(b), std::move(args), rows);
}

/// The derivative x -> Dg(x) as a matrix-valued map.
inline SmoothMap derivative_map(SmoothMap g) { return make_map<detail::DerivativeNode>(std::move(g)); }

/// Black-box map registered through a point-in, vector-out callback.
inline SmoothMap fd_wrapped(Evaluator f, int dim_in, int dim_out) {
  return make_map<detail::FdWrappedNode>(std::move(f), dim_in, dim_out, 1);
}
inline SmoothMap fd_wrapped_matrix(Evaluator f, int dim_in, int rows, int cols) {
  return make_map<detail::FdWrappedNode>(std::move(f), dim_in, rows, cols);
}

inline SmoothMap operator+(const SmoothMap& a, const SmoothMap& b) { return sum({a, b}); }
inline SmoothMap operator-(const SmoothMap& a, const SmoothMap& b) { return sum({a, scaled(-1.0, b)}); }
inline SmoothMap operator*(double c, const SmoothMap& a) { return scaled(c, a); }

/// Bilinear form (M, v) -> M v for n x n matrices stored row-major.
inline MultilinearTensor matvec_form(int n) {
  MultilinearTensor b(n, {n * n, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, static_cast<std::size_t>((i * n + j) * n + j)) = 1.0;
  return b;
}

/// Bilinear form (M, N) -> M N for n x n matrices stored row-major.
inline MultilinearTensor matmul_form(int n) {
  MultilinearTensor b(n * n, {n * n, n * n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        b(i * n + j, static_cast<std::size_t>((i * n + k) * n * n + (k * n + j))) = 1.0;
  return b;
}

/// Scalar product (a, b) -> a b on R.
inline MultilinearTensor scalar_product_form() {
  MultilinearTensor b(1, {1, 1});
  b(0, 0) = 1.0;
  return b;
}

/// Operator norm of the l-th derivative tensor of `g`, reading matrix-valued
/// outputs as operators.
inline OpnormEstimate derivative_opnorm(const SmoothMap& g, const MultilinearTensor& t, const OpnormOptions& opt = {}) {
  return opnorm_estimate(t.as_operator(g.rows()), opt);
}

}  // namespace diffw
