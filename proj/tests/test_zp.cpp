#include "starbody/zp.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

namespace sb = starbody;

namespace {

const sb::Body& unit_cube3() {
  static const sb::Body c = sb::Body::cube(3, 0.5);
  return c;
}

sb::ZpCachePtr cube_cache() {
  static const sb::ZpCachePtr cache = sb::make_zp_cache(unit_cube3(), 200000, 17);
  return cache;
}

// For x uniform on [-1/2, 1/2]: (E|x|^p)^{1/p} = (1/2) (p+1)^{-1/p}.
double cube_axis_support(double p) { return 0.5 * std::pow(p + 1.0, -1.0 / p); }

}  // namespace

TEST(Normalize, CubeAndBall) {
  sb::QuadratureSpec q;
  const auto c = sb::normalize_to_volume_one(sb::Body::cube(3), q);
  EXPECT_NEAR(c.factor, 0.5, 1e-15);
  EXPECT_NEAR(*c.body.exact_volume(), 1.0, 1e-12);
  const auto b = sb::normalize_to_volume_one(sb::Body::ball(4), q);
  EXPECT_NEAR(*b.body.exact_volume(), 1.0, 1e-12);
}

TEST(ZpSupport, CubeAxisMatchesClosedForm) {
  for (double p : {1.0, 2.0, 3.5, 8.0}) {
    const sb::ZpBody z(cube_cache(), p);
    const auto h = z.support(sb::Vector::Unit(3, 0));
    EXPECT_LE(std::abs(h.value - cube_axis_support(p)), 4.0 * h.std_error) << p;
  }
  // p = 1 on the axis gives 1/4.
  EXPECT_NEAR(sb::ZpBody(cube_cache(), 1.0).support(sb::Vector::Unit(3, 1)).value, 0.25, 2e-3);
}

TEST(ZpSupport, DiagonalSecondMoment) {
  // E<x, theta>^2 = |theta|^2 / 12 on the unit cube.
  const sb::ZpBody z(cube_cache(), 2.0);
  const sb::Vector theta = sb::Vector::Ones(3).normalized();
  const auto h = z.support(theta);
  EXPECT_LE(std::abs(h.value - std::sqrt(1.0 / 12.0)), 4.0 * h.std_error);
}

TEST(ZpSupport, HomogeneousInDirection) {
  const sb::ZpBody z(cube_cache(), 3.0);
  const sb::Vector t = (sb::Vector(3) << 0.2, -0.7, 0.4).finished();
  EXPECT_NEAR(z.support(sb::Vector(2.0 * t)).value, 2.0 * z.support(t).value, 1e-12);
  EXPECT_NEAR(z.support(sb::Vector(-t)).value, z.support(t).value, 1e-12);
}

TEST(ZpSupport, MonotoneInPOnSharedCache) {
  // Power means of the empirical measure are nondecreasing in p.
  const auto dirs = sb::sample_sphere(3, 100, 2);
  const std::vector<double> ps = {1.0, 1.5, 2.0, 4.0, 10.0, 20.0, 40.0, 64.0};
  for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
    double prev = 0.0;
    for (double p : ps) {
      const double h = sb::ZpBody(cube_cache(), p).support(dirs.col(j)).value;
      EXPECT_GE(h, prev * (1.0 - 1e-12)) << p;
      prev = h;
    }
    // Bounded by the support of C itself.
    EXPECT_LE(prev, unit_cube3().support(dirs.col(j)) + 1e-12);
  }
}

TEST(ZpSupport, LogSpaceAgreesWithDirectSum) {
  const auto cache = sb::make_zp_cache(unit_cube3(), 4096, 3);
  const sb::Vector theta = (sb::Vector(3) << 0.6, 0.0, 0.8).finished();
  for (double p : {17.0, 33.0, 64.0}) {
    long double s = 0.0L;
    for (Eigen::Index i = 0; i < cache->points.cols(); ++i) {
      s += std::pow(static_cast<long double>(std::abs(cache->points.col(i).dot(theta))), static_cast<long double>(p));
    }
    const double direct = static_cast<double>(std::pow(s / cache->points.cols(), 1.0L / p));
    EXPECT_NEAR(sb::ZpBody(cache, p).support(theta).value, direct, 1e-12 * direct) << p;
  }
}

TEST(ZpSupport, ExponentRange) {
  EXPECT_THROW(sb::ZpBody(cube_cache(), 0.5), sb::InvalidInput);
  EXPECT_THROW(sb::ZpBody(cube_cache(), 65.0), sb::InvalidInput);
  EXPECT_THROW(sb::make_zp_cache(unit_cube3(), 4, 1), sb::InvalidInput);
}

TEST(Isotropic, CubeAndBallConstants) {
  sb::QuadratureSpec q;
  q.n_interior = 200000;
  // L_cube = 12^{-1/2}.
  const auto lc = sb::isotropic_constant(sb::Body::cube(3), q);
  EXPECT_LE(std::abs(lc.value - 1.0 / std::sqrt(12.0)), 4.0 * lc.std_error) << lc.value;
  // L_ball = (n+2)^{-1/2} |B_2^n|^{-1/n}.
  const int n = 4;
  const double vol = std::pow(M_PI, n / 2.0) / boost::math::tgamma(n / 2.0 + 1.0);
  const double oracle = std::pow(n + 2.0, -0.5) * std::pow(vol, -1.0 / n);
  const auto lb = sb::isotropic_constant(sb::Body::ball(n), q);
  EXPECT_LE(std::abs(lb.value - oracle), 4.0 * lb.std_error) << lb.value;
}

TEST(Isotropic, InvariantUnderLinearMaps) {
  sb::Matrix t(3, 3);
  t << 2.0, 0.3, 0.0, 0.0, 1.0, -0.4, 0.1, 0.0, 0.5;
  const auto pts = sb::sample_interior(sb::Body::cube(3), 20000, 4);
  const double det = std::abs(t.determinant());
  const auto a = sb::isotropic_constant(pts, 8.0);
  const auto b = sb::isotropic_constant(sb::Matrix(t * pts), 8.0 * det);
  EXPECT_NEAR(a.value, b.value, 1e-10);
}

TEST(ZpPolarVolume, ZInftyLimitOfCube) {
  // Z_p(C) sits inside C and approaches it as p grows.
  const sb::ZpBody z(sb::make_zp_cache(unit_cube3(), 20000, 6), 64.0);
  const auto dirs = sb::sample_sphere(3, 2000, 5);
  const auto v = sb::zp_polar_volume(z, dirs);
  const double polar_cube = *sb::polar(unit_cube3()).exact_volume();
  EXPECT_GT(v.volume.value, polar_cube);
  EXPECT_LT(v.volume.value, 2.0 * polar_cube);
  EXPECT_GT(v.cache_se, 0.0);
}

TEST(Enclosure, CubeContainedAndRatioAtLeastOne) {
  sb::EnclosureOptions opt;
  opt.cache_size = 50000;
  opt.panel_size = 4000;
  opt.seed = 11;
  for (double p : {1.0, 2.0, 3.0}) {
    const auto r = sb::theorem3_enclosure(sb::Body::cube(3), p, opt);
    EXPECT_LE(r.inclusion_worst, 1.0 + r.inclusion_tol);
    EXPECT_GE(r.ratio.value, 1.0 - 3.0 * r.ratio.std_error);
    EXPECT_NEAR(r.normalized.value, r.ratio.value / std::sqrt((3.0 + p) / p), 1e-12);
    ASSERT_TRUE(r.enclosing.has_value());
    // L contains K: spot-check cube vertices scaled slightly inward.
    EXPECT_LE(r.enclosing->gauge(sb::Vector::Constant(3, 0.99)), 1.0 + 3.0 * r.inclusion_tol);
  }
}

TEST(Enclosure, RejectsNonConvexBody) {
  sb::EnclosureOptions opt;
  EXPECT_THROW(sb::theorem3_enclosure(sb::Body::lp_ball(3, 0.5), 2.0, opt), sb::InvalidInput);
}
