#pragma once

// Multilinear maps on R^n stored as flat coefficient arrays, plus operator-norm
// estimation.
//
// Layout: a tensor with `rows` outputs and input slots of dimensions
// d_1..d_l stores T(e_{j1},...,e_{jl})_r at
//     data[r * (d_1*...*d_l) + j1 * (d_2*...*d_l) + ... + jl].
// The l-th derivative of a map R^n -> R^m is a tensor with rows = m and l
// slots of dimension n. A matrix-valued map with values in R^{p x q} stores
// its outputs row-major (m = p*q); reading such a tensor as p rows with an
// extra leading slot of dimension q identifies L^l(X, L(X,Y)) with
// L^{l+1}(X,Y) without moving any coefficient.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace diffw {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedOrder : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct MultilinearTensor {
  int rows = 0;
  std::vector<int> slots;
  std::vector<double> data;

  MultilinearTensor() = default;
  MultilinearTensor(int rows_, std::vector<int> slots_)
      : rows(rows_), slots(std::move(slots_)), data(static_cast<std::size_t>(rows) * volume_of(slots), 0.0) {}

  /// Zero tensor of derivative order `order` for a map R^n -> R^m.
  static MultilinearTensor derivative(int m, int n, int order) {
    return MultilinearTensor(m, std::vector<int>(static_cast<std::size_t>(order), n));
  }

  static std::size_t volume_of(const std::vector<int>& s) {
    std::size_t v = 1;
    for (int d : s) v *= static_cast<std::size_t>(d);
    return v;
  }

  int order() const { return static_cast<int>(slots.size()); }
  std::size_t volume() const { return volume_of(slots); }

  double& operator()(int r, std::size_t flat) { return data[static_cast<std::size_t>(r) * volume() + flat]; }
  double operator()(int r, std::size_t flat) const { return data[static_cast<std::size_t>(r) * volume() + flat]; }

  std::size_t flat_index(std::span<const int> idx) const {
    std::size_t f = 0;
    for (std::size_t s = 0; s < slots.size(); ++s) f = f * static_cast<std::size_t>(slots[s]) + static_cast<std::size_t>(idx[s]);
    return f;
  }

  void unflatten(std::size_t flat, std::span<int> idx) const {
    for (std::size_t s = slots.size(); s-- > 0;) {
      idx[s] = static_cast<int>(flat % static_cast<std::size_t>(slots[s]));
      flat /= static_cast<std::size_t>(slots[s]);
    }
  }

  /// Full contraction T(a_1, ..., a_l).
  Vec apply(std::span<const Vec> args) const {
    if (args.size() != slots.size()) throw DimensionMismatch("tensor apply: wrong number of arguments");
    Vec out = Vec::Zero(rows);
    const std::size_t vol = volume();
    std::vector<int> idx(slots.size());
    for (std::size_t f = 0; f < vol; ++f) {
      unflatten(f, idx);
      double w = 1.0;
      for (std::size_t s = 0; s < slots.size(); ++s) w *= args[s](idx[s]);
      if (w == 0.0) continue;
      for (int r = 0; r < rows; ++r) out(r) += (*this)(r, f) * w;
    }
    return out;
  }

  /// Contract every slot except `keep`; the result is the rows x d_keep matrix
  /// of the linear map left over in that slot.
  Mat partial(std::size_t keep, std::span<const Vec> args) const {
    Mat out = Mat::Zero(rows, slots[keep]);
    const std::size_t vol = volume();
    std::vector<int> idx(slots.size());
    for (std::size_t f = 0; f < vol; ++f) {
      unflatten(f, idx);
      double w = 1.0;
      for (std::size_t s = 0; s < slots.size(); ++s)
        if (s != keep) w *= args[s](idx[s]);
      if (w == 0.0) continue;
      for (int r = 0; r < rows; ++r) out(r, idx[keep]) += (*this)(r, f) * w;
    }
    return out;
  }

  /// Same coefficients read as a tensor with `out_rows` outputs and a leading
  /// slot of dimension rows/out_rows.
  MultilinearTensor as_operator(int out_rows) const {
    if (out_rows <= 0 || rows % out_rows != 0) throw DimensionMismatch("as_operator: rows not divisible");
    const int cols = rows / out_rows;
    if (cols == 1) return *this;
    std::vector<int> s;
    s.reserve(slots.size() + 1);
    s.push_back(cols);
    s.insert(s.end(), slots.begin(), slots.end());
    MultilinearTensor t(out_rows, std::move(s));
    t.data = data;
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }

  /// Largest coefficient difference under a swap of two slots of equal size.
  double asymmetry(std::size_t a, std::size_t b) const {
    if (slots[a] != slots[b]) throw DimensionMismatch("asymmetry: slot sizes differ");
    double worst = 0.0;
    const std::size_t vol = volume();
    std::vector<int> idx(slots.size());
    for (std::size_t f = 0; f < vol; ++f) {
      unflatten(f, idx);
      std::swap(idx[a], idx[b]);
      const std::size_t g = flat_index(idx);
      for (int r = 0; r < rows; ++r) worst = std::max(worst, std::abs((*this)(r, f) - (*this)(r, g)));
    }
    return worst;
  }

  MultilinearTensor& operator+=(const MultilinearTensor& o) {
    if (o.rows != rows || o.slots != slots) throw DimensionMismatch("tensor +=: shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
    return *this;
  }
  MultilinearTensor& operator*=(double c) {
    for (double& v : data) v *= c;
    return *this;
  }
};

inline MultilinearTensor operator+(MultilinearTensor a, const MultilinearTensor& b) { return a += b; }
inline MultilinearTensor operator-(MultilinearTensor a, const MultilinearTensor& b) {
  MultilinearTensor nb = b;
  nb *= -1.0;
  return a += nb;
}
inline MultilinearTensor operator*(double c, MultilinearTensor a) { return a *= c; }

struct OpnormOptions {
  int random_tuples = 256;
  int max_sweeps = 50;
  std::uint64_t seed = 0x5eedULL;
};

struct OpnormEstimate {
  double value = 0.0;
  /// false when `value` is a lower bound from sampling plus ascent
  bool exact = true;
};

inline double spectral_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

/// sup ||T(u_1,...,u_l)|| over unit vectors. Orders 0 and 1 are exact
/// (Euclidean and spectral norm); higher orders take the best of K random
/// unit tuples and refine it by alternating maximisation, one slot at a time.
inline OpnormEstimate opnorm_estimate(const MultilinearTensor& t, const OpnormOptions& opt = {}) {
  if (t.order() == 0) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return {std::sqrt(s), true};
  }
  if (t.order() == 1) {
    Mat m(t.rows, t.slots[0]);
    for (int r = 0; r < t.rows; ++r)
      for (int j = 0; j < t.slots[0]; ++j) m(r, j) = t(r, static_cast<std::size_t>(j));
    return {spectral_norm(m), true};
  }
  if (t.max_abs() == 0.0) return {0.0, false};

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t l = t.slots.size();
  std::vector<Vec> tuple(l), best(l);
  double best_val = -1.0;
  for (int k = 0; k < opt.random_tuples; ++k) {
    for (std::size_t s = 0; s < l; ++s) {
      Vec u(t.slots[s]);
      for (int i = 0; i < u.size(); ++i) u(i) = normal(rng);
      const double nu = u.norm();
      tuple[s] = nu > 0 ? Vec(u / nu) : Vec(Vec::Unit(t.slots[s], 0));
    }
    const double v = t.apply(tuple).norm();
    if (v > best_val) {
      best_val = v;
      best = tuple;
    }
  }
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    const double before = best_val;
    for (std::size_t s = 0; s < l; ++s) {
      const Mat m = t.partial(s, best);
      Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinV);
      if (svd.singularValues()(0) <= 0.0) continue;
      best[s] = svd.matrixV().col(0);
      best_val = std::max(best_val, svd.singularValues()(0));
    }
    if (best_val - before <= 1e-15 * std::max(1.0, best_val)) break;
  }
  return {best_val, false};
}

}  // namespace diffw
