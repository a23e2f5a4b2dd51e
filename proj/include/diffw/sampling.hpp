#pragma once

// Seeded random samples used by the verification suites.

#include "diffw/actions.hpp"

#include <random>

namespace diffw {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec random_vector(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

inline Vec random_unit_vector(Rng& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
  } while (v.norm() < 1e-8);
  return v.normalized();
}

/// Uniform entries, rescaled to spectral norm `norm`.
inline Mat random_matrix(Rng& rng, int rows, int cols, double norm) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, -1.0, 1.0);
  const double s = spectral_norm(m);
  return s > 0 ? Mat(m * (norm / s)) : m;
}

struct BumpSampleOptions {
  int bumps = 2;
  double center_box = 1.5;
  double sigma_min = 0.6;
  double sigma_max = 1.2;
  double lip_min = 0.2;
  double lip_max = 0.8;
};

/// Unscaled sum of Gaussian bumps with random centres, widths and amplitudes.
inline SmoothMap random_bump_field(Rng& rng, int n, int rows, const BumpSampleOptions& opt = {}) {
  SmoothMap acc;
  for (int b = 0; b < opt.bumps; ++b) {
    SmoothMap g = gaussian_bump(random_vector(rng, n, -opt.center_box, opt.center_box),
                                uniform(rng, opt.sigma_min, opt.sigma_max), random_vector(rng, rows), rows);
    acc = acc.valid() ? acc + g : g;
  }
  return acc;
}

/// Sum of Gaussian bumps rescaled so that ||phi||_{1,1} on the grid is a
/// uniform draw from [lip_min, lip_max].
inline ChartDiffeo random_bump_diffeo(Rng& rng, const SampleDomain& dom, const BumpSampleOptions& opt = {}) {
  const int n = dom.dimension;
  const SmoothMap raw = random_bump_field(rng, n, n, opt);
  const double lip = seminorm(raw, 1, dom);
  const double target = uniform(rng, opt.lip_min, opt.lip_max);
  return ChartDiffeo(scaled(target / lip, raw), dom);
}

inline std::vector<ChartDiffeo> random_bump_diffeos(std::size_t count, const SampleDomain& dom, std::uint64_t seed,
                                                    const BumpSampleOptions& opt = {}) {
  Rng rng(seed);
  std::vector<ChartDiffeo> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_bump_diffeo(rng, dom, opt));
  return out;
}

/// so(3)-valued Gaussian field x -> hat(w) exp(-|x - c|^2 / s^2) with
/// ||w|| = angle, so every value is a rotation by at most `angle`.
inline SmoothMap random_so3_field(Rng& rng, int dim, double angle) {
  const Vec w = random_unit_vector(rng, 3) * angle;
  const Mat k = hat3(w);
  Vec amp(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) amp(3 * i + j) = k(i, j);
  return gaussian_bump(random_vector(rng, dim, -1.5, 1.5), uniform(rng, 0.6, 1.0), amp, 3);
}

}  // namespace diffw
