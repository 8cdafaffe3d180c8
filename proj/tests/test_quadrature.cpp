#include "starbody/density.hpp"
#include "starbody/parallel.hpp"
#include "starbody/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>

namespace sb = starbody;

TEST(GaussLegendre, MatchesBoostNodes) {
  const sb::GaussLegendre gl(20);
  const auto& abscissa = boost::math::quadrature::gauss<double, 20>::abscissa();
  const auto& weights = boost::math::quadrature::gauss<double, 20>::weights();
  // Boost stores the non-negative half.
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    const double x = abscissa[i];
    bool found = false;
    for (int j = 0; j < gl.order(); ++j) {
      if (std::abs(gl.nodes[j] - x) < 1e-14) {
        EXPECT_NEAR(gl.weights[j], weights[i], 1e-14);
        found = true;
      }
    }
    EXPECT_TRUE(found) << x;
  }
}

TEST(GaussLegendre, ExactForPolynomials) {
  const sb::GaussLegendre gl(8);
  for (int d = 0; d <= 15; ++d) {
    double s = 0.0;
    for (int j = 0; j < gl.order(); ++j) s += gl.weights[j] * std::pow(gl.nodes[j], d);
    EXPECT_NEAR(s, d % 2 == 0 ? 2.0 / (d + 1) : 0.0, 1e-14) << d;
  }
}

TEST(Sphere, SamplesHaveUnitNorm) {
  for (auto scheme : {sb::Scheme::monte_carlo, sb::Scheme::antithetic_mc}) {
    const auto s = sb::sample_sphere(5, 10001, 11, scheme);
    for (Eigen::Index j = 0; j < s.cols(); ++j) EXPECT_NEAR(s.col(j).norm(), 1.0, 1e-12);
  }
}

TEST(Sphere, AntitheticPairsAndOddCountsRoundUp) {
  const auto s = sb::sample_sphere(3, 7, 1, sb::Scheme::antithetic_mc);
  ASSERT_EQ(s.cols(), 8);
  for (Eigen::Index j = 0; j < s.cols(); j += 2) EXPECT_EQ(s.col(j), sb::Vector(-s.col(j + 1)));
}

TEST(Sphere, SecondMomentIsIsotropic) {
  // E[theta theta'] = I / n.
  const int n = 4;
  const auto s = sb::sample_sphere(n, 200000, 5);
  const sb::Matrix m = s * s.transpose() / static_cast<double>(s.cols());
  EXPECT_LT((m - sb::Matrix::Identity(n, n) / n).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Determinism, ResultsIndependentOfWorkerCount) {
  const sb::ThreadPool pool(4);
  const auto k = sb::Body::lp_ball(4, 3.0);
  sb::QuadratureSpec q;
  q.n_directions = 50000;
  q.n_interior = 30000;
  const auto serial = sb::volume_polar(k, q);
  q.exec = &pool;
  const auto parallel = sb::volume_polar(k, q);
  EXPECT_EQ(serial, parallel);
  EXPECT_EQ(sb::sample_interior(k, 30000, 3, nullptr), sb::sample_interior(k, 30000, 3, &pool));
  q.exec = nullptr;
  const auto h1 = sb::mc_volume_hitmiss(k, q);
  q.exec = &pool;
  EXPECT_EQ(h1, sb::mc_volume_hitmiss(k, q));
}

TEST(Determinism, SeedChangesResult) {
  const auto k = sb::Body::cube(3);
  sb::QuadratureSpec q;
  q.n_directions = 1000;
  EXPECT_NE(sb::volume_polar(k, q).value, sb::volume_polar(k, q.with_seed(8)).value);
}

TEST(VolumePolar, WithinThreeSe) {
  sb::QuadratureSpec q;
  q.n_directions = 200000;
  for (const auto& k : {sb::Body::cube(4), sb::Body::lp_ball(3, 1.0), sb::Body::lp_ball(5, 3.0),
                        sb::Body::ellipsoid(sb::Vector::LinSpaced(4, 0.5, 2.0))}) {
    const auto v = sb::volume_polar(k, q);
    EXPECT_GT(v.std_error, 0.0);
    EXPECT_LE(std::abs(v.value - *k.exact_volume()), 3.0 * v.std_error) << k.kind_name();
  }
}

TEST(VolumePolar, BallIsExactWithConstantGauge) {
  sb::QuadratureSpec q;
  q.n_directions = 1000;
  const auto v = sb::volume_polar(sb::Body::ball(5), q);
  EXPECT_NEAR(v.value, 8.0 * M_PI * M_PI / 15.0, 1e-12);
}

TEST(MeasureBody, GaussianOnBallMatchesIncompleteGamma) {
  // int_{R B_2^n} e^{-|x|^2/2} = (2 pi)^{n/2} P(n/2, R^2/2).
  const int n = 3;
  const double r = 1.7;
  sb::QuadratureSpec q;
  q.n_directions = 100;
  const auto m = sb::measure_body(sb::Body::ball(n, r), sb::Density::gaussian(n, 1.0), q);
  const double oracle = std::pow(2.0 * M_PI, n / 2.0) * boost::math::gamma_p(n / 2.0, r * r / 2.0);
  EXPECT_NEAR(m.value, oracle, 1e-10 * oracle);
}

TEST(MeasureBody, UniformDensityGivesVolume) {
  sb::QuadratureSpec q;
  q.n_directions = 20000;
  const auto k = sb::Body::cube(3);
  const double v = sb::volume_polar(k, q).value;
  EXPECT_NEAR(sb::measure_body(k, sb::Density::uniform(3), q).value, v, 1e-12 * v);
}

TEST(Interior, SamplesLieInsideAndHaveBallMoment) {
  // E|X|^2 = n/(n+2) on B_2^n.
  const int n = 5;
  const auto pts = sb::sample_interior(sb::Body::ball(n), 100000, 4);
  double s = 0.0;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    ASSERT_LE(pts.col(j).norm(), 1.0 + 1e-12);
    s += pts.col(j).squaredNorm();
  }
  EXPECT_NEAR(s / pts.cols(), n / (n + 2.0), 5e-3);
}

TEST(Interior, CrossPolytopeSecondMoment) {
  // E[x_1^2] = 2 / ((n+1)(n+2)).
  const int n = 3;
  const auto cross = sb::Body::polytope_v((sb::Matrix(3, 6) << 1, -1, 0, 0, 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0, 1, -1)
                                              .finished());
  const auto pts = sb::sample_interior(cross, 100000, 5);
  double s = 0.0;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    ASSERT_LE(cross.gauge(pts.col(j)), 1.0 + 1e-12);
    s += pts(0, j) * pts(0, j);
  }
  EXPECT_NEAR(s / pts.cols(), 2.0 / ((n + 1.0) * (n + 2.0)), 3e-3);
}

TEST(HitMiss, AgreesWithPolarFormula) {
  sb::QuadratureSpec q;
  q.n_directions = 200000;
  q.n_interior = 400000;
  const auto k = sb::Body::lp_ball(3, 1.5);
  const auto a = sb::volume_polar(k, q);
  const auto b = sb::mc_volume_hitmiss(k, q);
  EXPECT_TRUE(sb::agrees(a, b, 3.0)) << a.value << " " << b.value;
}

TEST(Grassmannian, FramesOrthonormalAndHaar) {
  // E |P_H e_1|^2 = (n-k)/n.
  const int n = 5;
  const int k = 2;
  const auto hs = sb::sample_grassmannian(n, k, 4000, 3);
  double s = 0.0;
  for (const auto& h : hs) {
    EXPECT_LT((h.frame.transpose() * h.frame - sb::Matrix::Identity(n - k, n - k)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(h.codim, k);
    s += h.frame.row(0).squaredNorm();
  }
  EXPECT_NEAR(s / hs.size(), (n - k) / static_cast<double>(n), 0.01);
}

TEST(Grassmannian, CoordinatePanelCount) {
  EXPECT_EQ(sb::coordinate_subspaces(5, 2).size(), 10U);
  EXPECT_EQ(sb::subspace_panel(4, 1, 7, 1).size(), 11U);
  EXPECT_THROW(sb::sample_grassmannian(3, 3, 1, 1), sb::InvalidInput);
}

TEST(Subspace, FrameValidation) {
  sb::Matrix f(3, 2);
  f << 1, 0, 0, 1, 0, 0;
  EXPECT_NO_THROW(sb::Subspace::from_frame(f));
  f(2, 1) = 0.1;
  EXPECT_THROW(sb::Subspace::from_frame(f), sb::InvalidInput);
  const auto h = sb::Subspace::hyperplane(sb::Vector::Ones(4));
  EXPECT_LT((h.frame.transpose() * sb::Vector::Ones(4)).norm(), 1e-12);
}

TEST(Scheme, ParsesNamesAndRejectsOthers) {
  EXPECT_EQ(sb::scheme_from_string("mc"), sb::Scheme::monte_carlo);
  EXPECT_EQ(sb::scheme_from_string("antithetic_mc"), sb::Scheme::antithetic_mc);
  EXPECT_THROW(sb::scheme_from_string("qmc"), sb::InvalidInput);
}
