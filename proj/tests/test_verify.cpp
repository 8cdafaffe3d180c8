#include "starbody/verify.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

namespace sb = starbody;

namespace {

double ball_volume_oracle(int n) { return std::pow(M_PI, n / 2.0) / boost::math::tgamma(n / 2.0 + 1.0); }

sb::VerifyOptions small_options() {
  sb::VerifyOptions opt;
  opt.q.n_directions = 20000;
  opt.section_directions = 4096;
  opt.panel_size = 32;
  return opt;
}

sb::VerificationReport make(sb::Estimate lhs, sb::Estimate rhs, sb::Relation rel = sb::Relation::le) {
  sb::VerificationReport r;
  r.lhs = lhs;
  r.rhs = rhs;
  r.relation = rel;
  sb::finalize(r);
  return r;
}

}  // namespace

TEST(Finalize, RelativeToleranceForExactSides) {
  EXPECT_TRUE(make(sb::Estimate::exact(1.0), sb::Estimate::exact(1.0 - 5e-10)).pass);
  EXPECT_FALSE(make(sb::Estimate::exact(1.0), sb::Estimate::exact(1.0 - 2e-9)).pass);
  EXPECT_TRUE(make(sb::Estimate::exact(0.5), sb::Estimate::exact(1.0)).pass);
}

TEST(Finalize, ThreeSigmaForEstimates) {
  const sb::Estimate lhs{1.0, 0.1, 100};
  EXPECT_TRUE(make(lhs, sb::Estimate::exact(0.75)).pass);
  const auto r = make(lhs, sb::Estimate::exact(0.65));
  EXPECT_FALSE(r.pass);
  EXPECT_NEAR(r.margin, -3.5, 1e-12);
}

TEST(Finalize, EqualityIsTwoSided) {
  EXPECT_TRUE(make(sb::Estimate::exact(1.0), sb::Estimate::exact(1.0), sb::Relation::eq).pass);
  EXPECT_FALSE(make(sb::Estimate::exact(0.5), sb::Estimate::exact(1.0), sb::Relation::eq).pass);
  EXPECT_TRUE(make({1.1, 0.05, 10}, sb::Estimate::exact(1.0), sb::Relation::eq).pass);
  EXPECT_FALSE(make({1.2, 0.02, 10}, sb::Estimate::exact(1.0), sb::Relation::eq).pass);
}

TEST(Finalize, NonFiniteFails) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(make(sb::Estimate::exact(nan), sb::Estimate::exact(1.0)).pass);
  EXPECT_FALSE(make(sb::Estimate::exact(1.0), sb::Estimate::exact(std::numeric_limits<double>::infinity())).pass);
}

TEST(Cnk, MatchesGammaOracleAndBounds) {
  for (int n = 2; n <= 50; ++n) {
    for (int k = 1; k < n; ++k) {
      const double oracle = std::pow(ball_volume_oracle(n), (n - k) / static_cast<double>(n)) / ball_volume_oracle(n - k);
      const double c = sb::cnk_constant(n, k);
      EXPECT_NEAR(c, oracle, 1e-10 * oracle) << n << " " << k;
      EXPECT_LT(c, 1.0);
      EXPECT_GT(c, std::exp(-0.5 * k));
    }
  }
  EXPECT_NEAR(sb::cnk_constant(2, 1), std::sqrt(M_PI) / 2.0, 1e-14);
  EXPECT_THROW(sb::cnk_constant(3, 3), sb::InvalidInput);
}

TEST(Presets, DovrValues) {
  EXPECT_EQ(sb::dovr_preset(sb::DovrPreset::ball, 7), 1.0);
  EXPECT_NEAR(sb::dovr_preset(sb::DovrPreset::unconditional, 7), std::sqrt(std::exp(1.0)), 1e-15);
  EXPECT_NEAR(sb::dovr_preset(sb::DovrPreset::generic, 9), 3.0, 1e-15);
}

TEST(MilmanPajor, IdentitiesHoldOnBallExactlyAndCubeStatistically) {
  sb::QuadratureSpec q;
  q.n_directions = 100000;
  q.n_interior = 100000;
  for (int k = 1; k < 4; ++k) {
    const auto r = sb::mp_identity_negative(sb::Body::ball(4), k, q);
    EXPECT_NEAR(r.lhs.value, 4.0 / (4 - k) * ball_volume_oracle(4), 1e-10) << k;
    EXPECT_TRUE(sb::mp_identity_negative(sb::Body::cube(4), k, q).pass) << k;
  }
  for (double p : {0.5, 1.0, 3.0}) {
    EXPECT_TRUE(sb::mp_identity_positive(sb::Body::cube(3), p, q).pass) << p;
    EXPECT_TRUE(sb::mp_identity_positive(sb::Body::lp_ball(3, 1.0), p, q).pass) << p;
  }
}

TEST(MilmanPajor, InequalityIsEqualityWhenLEqualsD) {
  sb::QuadratureSpec q;
  q.n_directions = 20000;
  const auto d = sb::Body::ball(4);
  const auto neg = sb::mp_inequality_negative(d, d, sb::Density::uniform(4), 2, q);
  EXPECT_NEAR(neg.lhs.value, 1.0, 1e-10);
  EXPECT_NEAR(neg.rhs.value, 1.0, 1e-10);
  EXPECT_TRUE(neg.pass);
  const auto pos = sb::mp_inequality_positive(sb::Body::cube(4), sb::Body::cube(4), sb::Density::uniform(4), 2.0, q);
  EXPECT_TRUE(pos.pass);
  EXPECT_NEAR(pos.lhs.value, pos.rhs.value, 1e-9);
}

TEST(SectionComparison, BallAgainstItselfGivesStructuralFactor) {
  const auto opt = small_options();
  for (int k = 1; k < 4; ++k) {
    const auto b = sb::Body::ball(4);
    const auto r = sb::verify_theorem1(b, b, sb::Density::uniform(4), sb::Density::uniform(4), k, 1.0, opt);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.measured.at("rhs_over_lhs"), 4.0 / (4 - k), 1e-10) << k;
  }
}

TEST(SectionComparison, UnsatisfiedHypothesisThrows) {
  const auto opt = small_options();
  EXPECT_THROW(sb::verify_corollary_sections(sb::Body::cube(3), sb::Body::ball(3, 0.5), sb::Density::uniform(3), 1, 1.0,
                                             opt),
               sb::InstanceInvalid);
}

TEST(SectionComparison, DominatingScaleSatisfiesHypothesis) {
  const auto opt = small_options();
  const auto cube = sb::Body::cube(3);
  const double c = sb::dominating_section_scale(cube, sb::Density::uniform(3), sb::Body::ball(3),
                                                sb::Density::uniform(3), 1, opt);
  // Coordinate sections have area 4 and none exceeds 4 sqrt(2).
  EXPECT_GT(c, std::sqrt(4.0 / M_PI));
  EXPECT_LT(c, 1.05 * std::sqrt(4.0 * std::sqrt(2.0) / M_PI));
  const auto r = sb::verify_corollary_sections(cube, sb::scale(sb::Body::ball(3), c), sb::Density::uniform(3), 1,
                                               sb::dovr_preset(sb::DovrPreset::unconditional, 3), opt);
  EXPECT_TRUE(r.pass);
}

TEST(Slicing, BallGivesStructuralFactor) {
  const auto opt = small_options();
  const auto r = sb::verify_slicing(sb::Body::ball(5), sb::Density::uniform(5), 2, 1.0, opt);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.rhs.value / r.lhs.value, 5.0 / 3.0, 1e-10);
}

TEST(IsomorphicBp, CubeWithinBound) {
  const auto opt = small_options();
  const auto cube = sb::Body::cube(3);
  const double c = sb::dominating_section_scale(cube, sb::Density::uniform(3), sb::Body::ball(3),
                                                sb::Density::uniform(3), 1, opt);
  const auto r = sb::isomorphic_bp_ratio(cube, sb::scale(sb::Body::ball(3), c), sb::Density::uniform(3), opt);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.rhs.value, std::sqrt(3.0) * 1.5, 1e-15);
}

TEST(MomentComparison, BallAgainstItselfGivesStructuralFactor) {
  const auto opt = small_options();
  const auto b = sb::Body::ball(3);
  for (double p : {1.0, 2.0, 5.0}) {
    const auto r = sb::verify_theorem2(b, b, sb::Density::uniform(3), sb::Density::uniform(3), p, 1.0, opt);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.measured.at("rhs_over_lhs"), (3.0 + p) / 3.0, 1e-10) << p;
  }
}

TEST(MomentComparison, DominatedScaleSatisfiesHypothesis) {
  const auto opt = small_options();
  const auto cube = sb::Body::cube(3);
  const auto ball = sb::Body::ball(3);
  const double t = sb::dominated_moment_scale(cube, ball, sb::Density::uniform(3), sb::Density::uniform(3), 2.0, opt);
  EXPECT_GT(t, 0.0);
  EXPECT_LT(t, 1.0);
  const auto r = sb::verify_theorem2(sb::scale(cube, t), ball, sb::Density::uniform(3), sb::Density::uniform(3), 2.0,
                                     1.0, opt);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(sb::verify_theorem2(cube, ball, sb::Density::uniform(3), sb::Density::uniform(3), 2.0, 1.0, opt),
               sb::InstanceInvalid);
}

TEST(MomentSlicing, BallImpliedConstant) {
  // min_xi int_B <x,xi>^2 = |B| / (n+2), so the ratio is |B|^{-2/n} / (n+2).
  auto opt = small_options();
  opt.q.n_directions = 200000;
  const int n = 4;
  const auto r = sb::moment_slicing_check(sb::Body::ball(n), sb::Density::uniform(n), 2.0, 1.0, opt);
  const double ratio = std::pow(ball_volume_oracle(n), -2.0 / n) / (n + 2.0);
  EXPECT_NEAR(r.measured.at("ratio"), ratio, 0.02 * ratio);
  EXPECT_NEAR(r.measured.at("implied_C"), ratio / 2.0, 0.03 * ratio);
  EXPECT_TRUE(r.pass);
}
