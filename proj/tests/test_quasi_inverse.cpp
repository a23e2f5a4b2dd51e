#include "oracles.hpp"

#include <diffw/suites.hpp>
#include <gtest/gtest.h>

using namespace diffw;

TEST(QuasiInverse, ZeroIsTheUnit) {
  EXPECT_EQ(quasi_invert(0.0), 0.0);
  EXPECT_EQ(quasi_invert(Mat(Mat::Zero(3, 3))).cwiseAbs().maxCoeff(), 0.0);
}

TEST(QuasiInverse, ScalarHalf) {
  const double y = quasi_invert(0.5);
  EXPECT_NEAR(y, -1.0, 1e-12);
  EXPECT_NEAR(0.5 + y - 0.5 * y, 0.0, 1e-12);
}

TEST(QuasiInverse, ScalarClosedForm) {
  for (double x = -0.95; x < 0.96; x += 0.05) EXPECT_NEAR(quasi_invert(x), x / (x - 1.0), 1e-11) << x;
}

TEST(QuasiInverse, MatricesAgainstUnitalBridge) {
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const Mat a = random_matrix(rng, n, n, uniform(rng, 0.0, 0.9));
    // (A - I)^{-1} through an independent LU solve
    const Mat bridge = (a - Mat::Identity(n, n)).fullPivLu().solve(Mat::Identity(n, n)) + Mat::Identity(n, n);
    const Mat q = quasi_invert(a);
    ASSERT_LT((q - bridge).cwiseAbs().maxCoeff(), 1e-10) << "n = " << n;
    EXPECT_LT(check_quasi_identity(a, q), QuasiInverseOptions{}.residual_tol);
  }
}

TEST(QuasiInverse, OutsideUnitBallIsRefused) {
  EXPECT_THROW(quasi_invert(1.0), NotQuasiInvertibleBySeries);
  EXPECT_THROW(quasi_invert(-2.0), NotQuasiInvertibleBySeries);
  // 2 I is quasi-invertible (QI = 2 I), but not by the series.
  EXPECT_THROW(quasi_invert(Mat(2.0 * Mat::Identity(2, 2))), NotQuasiInvertibleBySeries);
  EXPECT_THROW(quasi_invert(Mat(Mat::Zero(2, 3))), DimensionMismatch);
  EXPECT_THROW(quasi_invert(Mat(Mat::Zero(9, 9))), DimensionMismatch);
}

TEST(QuasiInverse, TruncationHonoursSeriesTolerance) {
  QuasiInverseOptions loose;
  loose.series_tol = 1e-3;
  const double x = 0.8;
  const double exact = x / (x - 1.0);
  EXPECT_LT(std::abs(quasi_invert(x, loose) - exact), 1e-3);
  EXPECT_GT(std::abs(quasi_invert(x, loose) - exact), 1e-9);
}

TEST(QuasiIdentity, Examples) {
  EXPECT_EQ(check_quasi_identity(0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(check_quasi_identity(0.5, -0.5), 0.25);
  const Mat a = Mat::Identity(2, 2) * 0.3;
  EXPECT_THROW(check_quasi_identity(AlgebraElement(0.5), AlgebraElement(a)), DimensionMismatch);
}

TEST(QuasiInverse, NoncommutingPairSatisfiesBothSides) {
  Mat a(2, 2);
  a << 0.1, 0.6, -0.2, 0.3;
  const Mat q = quasi_invert(a);
  EXPECT_LT(spectral_norm(a + q - a * q), 1e-12);
  EXPECT_LT(spectral_norm(q + a - q * a), 1e-12);
}

TEST(QuasiInverse, PointwiseOnMatrixField) {
  const SampleDomain dom = SampleDomain::defaults(1);
  Vec amp(4);
  amp << 0.3, -0.5, 0.2, 0.4;
  const MatrixField x{gaussian_bump(Vec::Zero(1), 1.5, amp, 2), dom};
  const double nb = algebra_norm(x);
  // The sampled norm is a lower bound for the true sup; at the peak it is exact.
  EXPECT_NEAR(nb, spectral_norm(x.map.matrix_value(Vec::Zero(1))), 1e-15);
  const MatrixField y = quasi_invert(x);
  EXPECT_LT(check_quasi_identity(x, y), 1e-10);
  for (double p : {-2.0, 0.0, 0.77}) {
    const Mat m = x.map.matrix_value(Vec::Constant(1, p));
    const Mat bridge = (m - Mat::Identity(2, 2)).inverse() + Mat::Identity(2, 2);
    EXPECT_LT((y.map.matrix_value(Vec::Constant(1, p)) - bridge).cwiseAbs().maxCoeff(), 1e-10);
  }
  // Derivatives of the pointwise quasi-inverse come from differences.
  const Vec p = Vec::Constant(1, 0.4);
  const auto qi_of = [&](const Vec& z) {
    const Mat m = x.map.matrix_value(z);
    return flatten_row_major(Mat((m - Mat::Identity(2, 2)).inverse() + Mat::Identity(2, 2)));
  };
  EXPECT_LT((y.map.jacobian(p) - oracle::jacobian(qi_of, p)).norm(), 1e-8);
}

TEST(QuasiInverse, MatrixFieldAboveUnitNormIsRefused) {
  const MatrixField x{gaussian_bump(Vec::Zero(1), 1.0, Vec::Constant(1, 1.2), 1), SampleDomain::defaults(1)};
  EXPECT_THROW(quasi_invert(x), NotQuasiInvertibleBySeries);
}

TEST(QuasiInverse, VariantDispatch) {
  const AlgebraElement s = 0.25;
  EXPECT_NEAR(std::get<double>(quasi_invert(s)), 0.25 / (0.25 - 1.0), 1e-12);
  Mat m(2, 2);
  m << 0.2, 0.1, 0.0, -0.3;
  const AlgebraElement e = m;
  const AlgebraElement q = quasi_invert(e);
  EXPECT_LT(check_quasi_identity(e, q), 1e-12);
  EXPECT_DOUBLE_EQ(algebra_norm(e), spectral_norm(m));
}

TEST(QuasiInverse, ContinuityOnTheBall) {
  // QI is Lipschitz on ||x|| <= r with constant 1/(1-r)^2.
  Rng rng(2);
  const double r = 0.7;
  for (int k = 0; k < 50; ++k) {
    const Mat a = random_matrix(rng, 3, 3, uniform(rng, 0.0, r));
    Mat b = a + random_matrix(rng, 3, 3, 1e-3);
    if (spectral_norm(b) > r) continue;
    EXPECT_LE(spectral_norm(quasi_invert(a) - quasi_invert(b)), spectral_norm(a - b) / ((1 - r) * (1 - r)) + 1e-12);
  }
}
