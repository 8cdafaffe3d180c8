#include "starbody/radon.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

namespace sb = starbody;

namespace {

sb::QuadratureSpec spec(std::int64_t n) {
  sb::QuadratureSpec q;
  q.n_directions = n;
  return q;
}

// |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)
double sphere_oracle(int d) { return 2.0 * std::pow(M_PI, d / 2.0) / boost::math::tgamma(d / 2.0); }

bool within(const sb::Estimate& e, double truth, double k) {
  return std::abs(e.value - truth) <= k * e.std_error + 1e-12 * std::abs(truth);
}

}  // namespace

TEST(Radon, ConstantIntegratesToSphereArea) {
  for (int n = 2; n <= 6; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto h = sb::sample_grassmannian(n, k, 1, 3)[0];
      const auto r = sb::radon_transform([](const sb::Vector&) { return 1.0; }, h, spec(1000));
      EXPECT_NEAR(r.value, sphere_oracle(n - k), 1e-12 * sphere_oracle(n - k)) << n << " " << k;
    }
  }
}

TEST(Radon, SecondMomentOfCoordinate) {
  // int_{S ∩ H} theta_1^2 = |S^{d-1}| |P_H e_1|^2 / d.
  const int n = 5;
  const int k = 2;
  const auto h = sb::sample_grassmannian(n, k, 1, 9)[0];
  const double proj = h.frame.row(0).squaredNorm();
  const auto r = sb::radon_transform([](const sb::Vector& t) { return t[0] * t[0]; }, h, spec(200000));
  EXPECT_TRUE(within(r, sphere_oracle(n - k) * proj / (n - k), 3.0)) << r.value;
}

TEST(Radon, DirectionsStayInSubspace) {
  const auto h = sb::sample_grassmannian(6, 2, 1, 4)[0];
  const sb::Matrix proj = sb::Matrix::Identity(6, 6) - h.frame * h.frame.transpose();
  sb::radon_transform_multi(h, 1, spec(500), [&](const sb::Vector& theta, double* out) {
    EXPECT_NEAR(theta.norm(), 1.0, 1e-12);
    EXPECT_LT((proj * theta).norm(), 1e-12);
    out[0] = 0.0;
  });
}

TEST(Section, BallSectionIsLowerDimensionalBall) {
  for (int n = 2; n <= 5; ++n) {
    for (int k = 1; k < n; ++k) {
      const auto h = sb::sample_grassmannian(n, k, 1, 5)[0];
      const double r = 1.3;
      const auto v = sb::section_volume(sb::Body::ball(n, r), h, spec(2000));
      const double oracle = std::pow(M_PI, (n - k) / 2.0) / boost::math::tgamma((n - k) / 2.0 + 1.0) * std::pow(r, n - k);
      EXPECT_NEAR(v.value, oracle, 1e-12 * oracle);
    }
  }
}

TEST(Section, CubeCoordinateAndDiagonalSections) {
  const auto cube = sb::Body::cube(3);
  const auto coord = sb::section_volume(cube, sb::Subspace::hyperplane(sb::Vector::Unit(3, 2)), spec(200000));
  EXPECT_TRUE(within(coord, 4.0, 3.0)) << coord.value;
  // Regular hexagon of side sqrt(2).
  const auto diag = sb::section_volume(cube, sb::Subspace::hyperplane(sb::Vector::Ones(3)), spec(200000));
  EXPECT_TRUE(within(diag, 3.0 * std::sqrt(3.0), 3.0)) << diag.value;
  // Rectangle 2 x 2 sqrt(2).
  const auto edge = sb::section_volume(cube, sb::Subspace::hyperplane(sb::Vector(sb::Vector::Unit(3, 0) + sb::Vector::Unit(3, 1))),
                                       spec(200000));
  EXPECT_TRUE(within(edge, 4.0 * std::sqrt(2.0), 3.0)) << edge.value;
}

TEST(Section, EllipsoidSectionArea) {
  const auto e = sb::Body::ellipsoid((sb::Vector(3) << 1.0, 2.0, 0.5).finished());
  const auto v = sb::section_volume(e, sb::Subspace::hyperplane(sb::Vector::Unit(3, 0)), spec(200000));
  EXPECT_TRUE(within(v, M_PI * 2.0 * 0.5, 3.0)) << v.value;
}

TEST(Section, GaussianMeasureOfBallSection) {
  // mu(R B ∩ H) for f = e^{-|x|^2/2} is (2 pi)^{d/2} P(d/2, R^2/2).
  const int n = 4;
  const int k = 1;
  const double r = 1.2;
  const auto h = sb::sample_grassmannian(n, k, 1, 6)[0];
  const auto m = sb::section_measure(sb::Body::ball(n, r), sb::Density::gaussian(n, 1.0), h, spec(100));
  const int d = n - k;
  const double oracle = std::pow(2.0 * M_PI, d / 2.0) * boost::math::gamma_p(d / 2.0, r * r / 2.0);
  EXPECT_NEAR(m.value, oracle, 1e-10 * oracle);
}

TEST(Section, UniformMeasureEqualsVolume) {
  const auto h = sb::sample_grassmannian(4, 2, 1, 7)[0];
  const auto k = sb::Body::lp_ball(4, 3.0);
  const auto q = spec(5000);
  EXPECT_NEAR(sb::section_measure(k, sb::Density::uniform(4), h, q).value, sb::section_volume(k, h, q).value, 1e-12);
}

TEST(Section, ScalesWithDimensionOfSubspace) {
  // |cK ∩ H| = c^{n-k} |K ∩ H| on shared directions.
  const auto h = sb::sample_grassmannian(5, 2, 1, 8)[0];
  const auto k = sb::Body::cube(5);
  const auto q = spec(5000);
  const double a = sb::section_volume(k, h, q).value;
  const double b = sb::section_volume(sb::scale(k, 1.5), h, q).value;
  EXPECT_NEAR(b, std::pow(1.5, 3) * a, 1e-12 * b);
}

TEST(Extremal, CubeMinimalSectionIsCoordinate) {
  const auto cube = sb::Body::cube(3);
  const auto q = spec(20000);
  const auto lo = sb::extremal_section(cube, sb::Density::uniform(3), 1, q, sb::Extremum::min, 64);
  EXPECT_TRUE(within(lo.value, 4.0, 4.0)) << lo.value.value;
  const auto hi = sb::extremal_section(cube, sb::Density::uniform(3), 1, q, sb::Extremum::max, 64);
  EXPECT_LE(hi.value.value, 4.0 * std::sqrt(2.0) + 4.0 * hi.value.std_error);
  EXPECT_GT(hi.value.value, lo.value.value);
  EXPECT_EQ(hi.panel_values.size(), 3U + 64U);
}

TEST(Extremal, EmptyPanelIsInvalid) {
  EXPECT_THROW(sb::extremal_section(sb::Body::ball(3), sb::Density::uniform(3), std::vector<sb::Subspace>{}, spec(10),
                                    sb::Extremum::max),
               sb::InvalidInput);
}
