#include "oracles.hpp"

#include <diffw/suites.hpp>
#include <gtest/gtest.h>

using namespace diffw;

namespace {

SampleDomain line() { return SampleDomain::defaults(1); }

SmoothMap gauss1() { return gaussian_bump(Vec::Zero(1), 1.0, Vec::Ones(1)); }

}  // namespace

TEST(Weight, ConstantOneIsExactlyOne) {
  const Weight one = Weight::one();
  for (const auto& x : SampleDomain::defaults(2).grid()) ASSERT_EQ(one(x), 1.0);
  EXPECT_TRUE(one.is_constant_one());
}

TEST(Weight, PolynomialKinds) {
  Vec x(2);
  x << 3.0, 4.0;
  EXPECT_DOUBLE_EQ(Weight::norm_power(2)(x), 25.0);
  EXPECT_DOUBLE_EQ(Weight::poly_shifted(2)(x), 36.0);
  EXPECT_DOUBLE_EQ(Weight::norm_power(0)(x), 1.0);
  EXPECT_THROW(Weight::norm_power(-1), std::invalid_argument);
}

TEST(Weight, NonFiniteCustomWeightIsRejected) {
  const Weight bad = Weight::custom("inf", [](const Vec&) { return std::numeric_limits<double>::infinity(); });
  EXPECT_THROW(bad(Vec::Zero(1)), std::domain_error);
}

TEST(WeightFamily, FromConfig) {
  const auto j = nlohmann::json::parse(R"([{"kind": "constant_one"}, {"kind": "norm_power", "degree": 2},
                                            {"kind": "poly_shifted", "degree": 3}])");
  const auto w = weight_family_from_json(j);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_TRUE(w.contains_one());
  EXPECT_EQ(w.members()[1].degree(), 2);
  EXPECT_EQ(w.members()[2].kind(), WeightKind::poly_shifted);
  EXPECT_THROW(weight_from_json(nlohmann::json::parse(R"({"kind": "cubic"})")), std::invalid_argument);
  EXPECT_FALSE(WeightFamily({Weight::norm_power(1)}).contains_one());
}

TEST(SampleDomain, DefaultsAndValidation) {
  EXPECT_EQ(SampleDomain::defaults(1).grid().size(), 201u);
  EXPECT_EQ(SampleDomain::defaults(2).grid().size(), 61u * 61u);
  EXPECT_EQ(SampleDomain::defaults(3).grid().size(), 25u * 25u * 25u);
  EXPECT_THROW(SampleDomain::defaults(4), std::invalid_argument);
  auto d = line();
  d.tail_radii = {2.0, 9.0};
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d.tail_radii = {4.0, 2.0};
  EXPECT_THROW(d.validate(), std::invalid_argument);
  const auto pts = line().grid();
  EXPECT_DOUBLE_EQ(pts.front()(0), -8.0);
  EXPECT_DOUBLE_EQ(pts.back()(0), 8.0);
}

TEST(SampleDomain, RefinedGridIsSuperset) {
  const auto coarse = SampleDomain::defaults(2);
  const auto fine = coarse.refined().grid();
  for (const auto& x : coarse.grid()) {
    const bool found = std::any_of(fine.begin(), fine.end(), [&](const Vec& y) { return (x - y).norm() < 1e-12; });
    ASSERT_TRUE(found);
  }
}

TEST(Seminorm, ZeroMapIsZero) {
  for (int l = 0; l <= 3; ++l) EXPECT_EQ(seminorm(zero_map(2, 2), Weight::poly_shifted(3), l, SampleDomain::defaults(2)), 0.0);
}

TEST(Seminorm, IdentityHasUnitDerivative) { EXPECT_NEAR(seminorm(identity_map(1), 1, line()), 1.0, 1e-15); }

TEST(Seminorm, GaussianDerivativeAgainstDenseOracle) {
  const double dense =
      oracle::dense_sup([](double x) { return 2.0 * x * std::exp(-x * x); }, -8.0, 8.0, 1000001);
  EXPECT_NEAR(dense, std::sqrt(2.0 / std::exp(1.0)), 1e-10);
  auto fine = line();
  fine.points_per_axis = 20001;
  EXPECT_NEAR(seminorm(gauss1(), 1, fine), dense, 1e-4);
  // The default grid samples a subset of points, so it can only undershoot.
  const double coarse = seminorm(gauss1(), 1, line());
  EXPECT_LE(coarse, dense + 1e-12);
  EXPECT_NEAR(coarse, dense, 5e-4);
}

TEST(Seminorm, WeightedValueMatchesPointwiseOracle) {
  const SmoothMap g = gaussian_bump(Vec::Constant(1, 0.5), 1.3, Vec::Constant(1, 2.0));
  const Weight f = Weight::norm_power(3);
  double expect = 0.0;
  for (const auto& x : line().grid()) {
    const auto fx = [&](const oracle::Vec& p) -> oracle::Vec { return g(p); };
    expect = std::max(expect, std::pow(std::abs(x(0)), 3) * oracle::jacobian(fx, x).norm());
  }
  EXPECT_NEAR(seminorm(g, f, 1, line()), expect, 1e-8 * expect);
}

TEST(Seminorm, UnsupportedOrderThrows) {
  const SmoothMap black = fd_wrapped([](const Vec& x) { return Vec(x.array().sin()); }, 1, 1);
  EXPECT_NO_THROW(seminorm(black, 2, line()));
  EXPECT_THROW(seminorm(black, 3, line()), UnsupportedOrder);
  EXPECT_THROW(seminorm(gauss1(), 4, line()), UnsupportedOrder);
}

TEST(Seminorm, MonotoneInWeight) {
  Rng rng(11);
  const auto dom = SampleDomain::defaults(2);
  for (int k = 0; k < 5; ++k) {
    const SmoothMap g = random_bump_field(rng, 2, 2);
    for (int l = 0; l <= 2; ++l) {
      EXPECT_LE(seminorm(g, Weight::norm_power(1), l, dom), seminorm(g, Weight::poly_shifted(1), l, dom));
      EXPECT_LE(seminorm(g, Weight::one(), l, dom), seminorm(g, Weight::poly_shifted(2), l, dom));
    }
  }
}

TEST(Seminorm, HomogeneityAndTriangleInequality) {
  Rng rng(12);
  const auto dom = SampleDomain::defaults(2);
  for (int k = 0; k < 10; ++k) {
    const SmoothMap a = random_bump_field(rng, 2, 2), b = random_bump_field(rng, 2, 2);
    const double c = uniform(rng, -4.0, 4.0);
    const Weight f = Weight::poly_shifted(k % 3);
    for (int l = 0; l <= 1; ++l) {
      const double sa = seminorm(a, f, l, dom), sb = seminorm(b, f, l, dom);
      EXPECT_NEAR(seminorm(c * a, f, l, dom), std::abs(c) * sa, 1e-13 * std::abs(c) * sa);
      EXPECT_LE(seminorm(a + b, f, l, dom), (sa + sb) * (1 + 1e-14));
    }
  }
}

TEST(Seminorm, RefinementNeverDecreases) {
  Rng rng(13);
  for (int n : {1, 2}) {
    const auto dom = SampleDomain::defaults(n);
    for (int k = 0; k < 3; ++k) {
      const SmoothMap g = random_bump_field(rng, n, n);
      for (int l = 0; l <= 1; ++l)
        EXPECT_LE(seminorm(g, Weight::norm_power(2), l, dom), seminorm(g, Weight::norm_power(2), l, dom.refined()));
    }
  }
}

TEST(Decay, GaussianBeatsPolynomials) {
  const WeightFamily w({Weight::one(), Weight::norm_power(2), Weight::norm_power(4)});
  const auto rep = is_decaying(gauss1(), w, 2, line());
  EXPECT_TRUE(rep.decaying);
  ASSERT_EQ(rep.records.size(), 9u);
  for (const auto& r : rep.records) {
    EXPECT_EQ(r.radii, line().tail_radii);
    for (std::size_t i = 1; i < r.tail.size(); ++i) EXPECT_LE(r.tail[i], r.tail[i - 1]);
  }
}

TEST(Decay, ConstantAndSineDoNotDecay) {
  const WeightFamily one({Weight::one()});
  const auto c = is_decaying(constant_map(1, Vec::Constant(1, 0.3)), one, 1, line());
  EXPECT_FALSE(c.decaying);
  EXPECT_NEAR(c.records[0].tail.back(), 0.3, 1e-15);
  EXPECT_FALSE(is_decaying(sine_profile(Vec::Ones(1), Vec::Ones(1)), one, 2, line()).decaying);
}

TEST(Decay, ReportSerialisesTailTable) {
  const auto rep = is_decaying(gauss1(), WeightFamily::norm_powers(1), 1, line());
  const nlohmann::json j = rep;
  ASSERT_TRUE(j.contains("records"));
  for (const auto& r : j["records"]) {
    for (const char* key : {"weight", "order", "value", "radii"}) EXPECT_TRUE(r.contains(key)) << key;
  }
}

TEST(Decay, ClosedUnderSumsAndImpliesFiniteSeminorms) {
  Rng rng(14);
  const auto dom = SampleDomain::defaults(2);
  const auto w = WeightFamily::norm_powers(3);
  BumpSampleOptions narrow;
  narrow.sigma_max = 0.8;
  for (int k = 0; k < 4; ++k) {
    const SmoothMap a = random_bump_field(rng, 2, 2, narrow), b = random_bump_field(rng, 2, 2, narrow);
    ASSERT_TRUE(is_decaying(a, w, 2, dom).decaying);
    ASSERT_TRUE(is_decaying(b, w, 2, dom).decaying);
    EXPECT_TRUE(is_decaying(a + b, w, 2, dom).decaying);
    for (const auto& f : w.members())
      for (int l = 0; l <= 2; ++l) EXPECT_TRUE(std::isfinite(seminorm(a, f, l, dom)));
  }
}

TEST(Decay, OrderAboveTwoIsRejected) {
  EXPECT_THROW(is_decaying(gauss1(), WeightFamily::norm_powers(1), 3, line()), UnsupportedOrder);
}

TEST(Bcr, ConstantFamilyFailsW3) {
  const auto r = bcr_check(WeightFamily({Weight::one()}), line());
  EXPECT_TRUE(r.w1);
  EXPECT_TRUE(r.w2);
  EXPECT_FALSE(r.w3);
}

TEST(Bcr, ShiftedPolynomialsHaveSuccessorWitnesses) {
  const int top = 4;
  const auto r = bcr_check(WeightFamily::shifted_polynomials(top), line());
  EXPECT_TRUE(r.w1);
  EXPECT_TRUE(r.w2);
  for (int d = 0; d < top; ++d) {
    ASSERT_TRUE(r.w3_witness[static_cast<std::size_t>(d)].has_value()) << d;
    EXPECT_EQ(*r.w3_witness[static_cast<std::size_t>(d)], static_cast<std::size_t>(d + 1));
    // ratio 1/(1+|x|) sampled at the tail radii
    const auto& tail = r.w3_ratio_tail[static_cast<std::size_t>(d)];
    for (std::size_t i = 0; i < tail.size(); ++i) EXPECT_NEAR(tail[i], 1.0 / (1.0 + r.radii[i]), 0.02);
  }
  // The top degree has no successor in a finite family.
  EXPECT_FALSE(r.w3_witness.back().has_value());
  EXPECT_FALSE(r.w3);
}

TEST(Bcr, TopDegreeAloneFailsW3) {
  const auto r = bcr_check(WeightFamily({Weight::poly_shifted(3)}), line());
  EXPECT_FALSE(r.w3);
  EXPECT_FALSE(r.w2);
  ASSERT_EQ(r.w3_ratio_tail.size(), 1u);
  for (double v : r.w3_ratio_tail[0]) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Bcr, NormPowersFailW2) {
  // |x|^d vanishes at the origin, so 1 is not pointwise smallest.
  const auto r = bcr_check(WeightFamily::norm_powers(2), line());
  EXPECT_FALSE(r.w2);
}
