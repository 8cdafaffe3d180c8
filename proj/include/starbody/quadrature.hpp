#pragma once

#include "starbody/body.hpp"
#include "starbody/core.hpp"
#include "starbody/density.hpp"
#include "starbody/estimate.hpp"
#include "starbody/parallel.hpp"
#include "starbody/rng.hpp"
#include "starbody/special.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace starbody {

enum class Scheme { monte_carlo, antithetic_mc };

inline std::string to_string(Scheme s) { return s == Scheme::monte_carlo ? "monte_carlo" : "antithetic_mc"; }

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "monte_carlo" || s == "mc") return Scheme::monte_carlo;
  if (s == "antithetic_mc" || s == "antithetic") return Scheme::antithetic_mc;
  throw InvalidInput("unknown quadrature scheme '" + s + "'");
}

/// Sample counts, seed and scheme for one evaluation. The executor only
/// decides where blocks run; it never changes results.
struct QuadratureSpec {
  std::int64_t n_directions = 100000;
  int n_radial = 32;
  std::int64_t n_interior = 200000;
  std::uint64_t seed = 7;
  Scheme scheme = Scheme::antithetic_mc;
  const Executor* exec = nullptr;

  void validate() const {
    require(n_directions >= 1 && n_radial >= 1 && n_interior >= 1, "quadrature: all counts must be >= 1");
  }

  QuadratureSpec with_seed(std::uint64_t s) const {
    QuadratureSpec q = *this;
    q.seed = s;
    return q;
  }
};

// ---- spheres --------------------------------------------------------------

namespace detail {

inline void gaussian_unit(Engine& eng, std::normal_distribution<double>& normal, Eigen::Ref<Vector> out) {
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal(eng);
    norm2 = out.squaredNorm();
  } while (norm2 == 0.0);
  out /= std::sqrt(norm2);
}

/// Directions [first, first + count) of the stream, written into `out`.
inline void sphere_block(int n, std::uint64_t seed, Stream stream, std::size_t block, std::size_t count, Scheme scheme,
                         Matrix& out) {
  out.resize(n, static_cast<Eigen::Index>(count));
  auto eng = make_engine(seed, stream, block);
  std::normal_distribution<double> normal;
  if (scheme == Scheme::monte_carlo) {
    for (std::size_t j = 0; j < count; ++j) gaussian_unit(eng, normal, out.col(static_cast<Eigen::Index>(j)));
    return;
  }
  for (std::size_t j = 0; j < count; j += 2) {
    gaussian_unit(eng, normal, out.col(static_cast<Eigen::Index>(j)));
    if (j + 1 < count) out.col(static_cast<Eigen::Index>(j + 1)) = -out.col(static_cast<Eigen::Index>(j));
  }
}

inline std::int64_t effective_count(std::int64_t count, Scheme scheme) {
  return scheme == Scheme::antithetic_mc ? count + (count % 2) : count;
}

}  // namespace detail

/// i.i.d. uniform points of S^{n-1} as columns; the antithetic scheme emits
/// (theta, -theta) pairs (an odd count is rounded up).
inline Matrix sample_sphere(int n, std::int64_t count, std::uint64_t seed, Scheme scheme = Scheme::monte_carlo,
                            Stream stream = Stream::sphere) {
  require(n >= 1 && count >= 1, "sample_sphere: need n >= 1 and count >= 1");
  const auto total = static_cast<std::size_t>(detail::effective_count(count, scheme));
  Matrix out(n, static_cast<Eigen::Index>(total));
  Matrix block;
  for (std::size_t b = 0; b < block_count(total); ++b) {
    const std::size_t first = b * kBlockSize;
    const std::size_t len = std::min(kBlockSize, total - first);
    detail::sphere_block(n, seed, stream, b, len, scheme, block);
    out.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(len)) = block;
  }
  return out;
}

/// Monte-Carlo means over uniform directions of several integrands at once.
/// fn(theta, out) writes `m` values; result i estimates scale * E[out_i].
/// Antithetic pairs are averaged into one sampling unit.
template <class Fn>
std::vector<Estimate> sphere_means(int n, std::size_t m, const QuadratureSpec& q, double scale, Fn&& fn,
                                   Stream stream = Stream::sphere) {
  q.validate();
  const auto total = static_cast<std::size_t>(detail::effective_count(q.n_directions, q.scheme));
  const bool paired = q.scheme == Scheme::antithetic_mc;
  auto blocks = map_indexed(q.exec, block_count(total), [&](std::size_t b) {
    const std::size_t first = b * kBlockSize;
    const std::size_t len = std::min(kBlockSize, total - first);
    Matrix dirs;
    detail::sphere_block(n, q.seed, stream, b, len, q.scheme, dirs);
    std::vector<MeanAccumulator> acc(m);
    std::vector<double> out(m);
    std::vector<double> prev(m);
    Vector theta(n);
    for (std::size_t j = 0; j < len; ++j) {
      theta = dirs.col(static_cast<Eigen::Index>(j));
      fn(static_cast<const Vector&>(theta), out.data());
      if (!paired) {
        for (std::size_t i = 0; i < m; ++i) acc[i].add(out[i]);
      } else if (j % 2 == 0) {
        prev = out;
      } else {
        for (std::size_t i = 0; i < m; ++i) acc[i].add(0.5 * (prev[i] + out[i]));
      }
    }
    return acc;
  });
  std::vector<MeanAccumulator> total_acc(m);
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < m; ++i) total_acc[i].merge(b[i]);
  }
  std::vector<Estimate> est(m);
  for (std::size_t i = 0; i < m; ++i) {
    est[i] = total_acc[i].estimate(scale);
    est[i].n_samples = static_cast<std::int64_t>(total);
  }
  return est;
}

template <class Fn>
Estimate sphere_mean(int n, const QuadratureSpec& q, double scale, Fn&& fn, Stream stream = Stream::sphere) {
  return sphere_means(
      n, 1, q, scale, [&](const Vector& theta, double* out) { out[0] = fn(theta); }, stream)[0];
}

// ---- subspaces ------------------------------------------------------------

/// Element of Gr_{n-k}: an n x (n-k) frame with orthonormal columns.
struct Subspace {
  Matrix frame;
  int codim = 0;

  int ambient_dim() const { return static_cast<int>(frame.rows()); }
  int dim() const { return static_cast<int>(frame.cols()); }

  static Subspace from_frame(const Matrix& frame, double tol = 1e-10) {
    const auto n = frame.rows();
    const auto d = frame.cols();
    require(n >= 2 && d >= 1 && d < n, "subspace: frame must be n x d with 1 <= d < n");
    const double err = (frame.transpose() * frame - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    require(err <= tol, "subspace: frame columns are not orthonormal");
    return Subspace{frame, static_cast<int>(n - d)};
  }

  /// Orthonormalizes an arbitrary full-rank n x d matrix (QR, sign-fixed so
  /// that Gaussian inputs give Haar-distributed frames).
  static Subspace orthonormalize(const Matrix& m) {
    const auto n = m.rows();
    const auto d = m.cols();
    require(n >= 2 && d >= 1 && d < n, "subspace: need 1 <= d < n");
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(n, d);
    const Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < d; ++i) {
      require(std::abs(r(i, i)) > 1e-12, "subspace: matrix is rank deficient");
      if (r(i, i) < 0.0) q.col(i) = -q.col(i);
    }
    return Subspace{q, static_cast<int>(n - d)};
  }

  /// The hyperplane xi^perp.
  static Subspace hyperplane(const Vector& xi) {
    const auto n = xi.size();
    require(n >= 2 && xi.norm() > 0.0, "hyperplane: need nonzero normal in n >= 2");
    Eigen::HouseholderQR<Matrix> qr(Matrix(xi / xi.norm()));
    Matrix full = qr.householderQ() * Matrix::Identity(n, n);
    return Subspace{full.rightCols(n - 1), 1};
  }
};

/// Haar-uniform elements of Gr_{n-k}: each frame orthonormalizes an
/// independent Gaussian n x (n-k) matrix.
inline std::vector<Subspace> sample_grassmannian(int n, int k, std::int64_t count, std::uint64_t seed) {
  require(k >= 1 && k <= n - 1, "sample_grassmannian: need 1 <= k <= n-1");
  require(count >= 0, "sample_grassmannian: negative count");
  std::vector<Subspace> out;
  out.reserve(static_cast<std::size_t>(count));
  std::normal_distribution<double> normal;
  Matrix g(n, n - k);
  for (std::int64_t i = 0; i < count; ++i) {
    auto eng = make_engine(seed, Stream::grassmannian, static_cast<std::uint64_t>(i));
    do {
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(eng);
      }
    } while (Eigen::FullPivLU<Matrix>(g).rank() < n - k);
    out.push_back(Subspace::orthonormalize(g));
  }
  return out;
}

/// Every coordinate subspace span{e_i : i in S}, |S| = n - k.
inline std::vector<Subspace> coordinate_subspaces(int n, int k) {
  require(k >= 1 && k <= n - 1, "coordinate_subspaces: need 1 <= k <= n-1");
  std::vector<Subspace> out;
  for_each_combination(n, n - k, [&](const std::vector<int>& idx) {
    Matrix f = Matrix::Zero(n, n - k);
    for (int c = 0; c < n - k; ++c) f(idx[static_cast<std::size_t>(c)], c) = 1.0;
    out.push_back(Subspace{f, k});
  });
  return out;
}

/// The "for every H" proxy: coordinate subspaces followed by `n_random`
/// sampled ones.
inline std::vector<Subspace> subspace_panel(int n, int k, std::int64_t n_random, std::uint64_t seed,
                                            bool include_coordinate = true) {
  std::vector<Subspace> panel;
  if (include_coordinate) panel = coordinate_subspaces(n, k);
  auto random = sample_grassmannian(n, k, n_random, seed);
  panel.insert(panel.end(), random.begin(), random.end());
  return panel;
}

// ---- volumes and measures -------------------------------------------------

/// |K| = (1/n) int_{S^{n-1}} ||theta||_K^{-n} dtheta.
inline Estimate volume_polar(const Body& body, const QuadratureSpec& q) {
  const int n = body.dim();
  return sphere_mean(n, q, sphere_area(n) / n, [&](const Vector& theta) {
    const double g = body.gauge_unchecked(theta);
    if (!(g > 0.0) || !std::isfinite(g)) throw NumericalFailure("volume_polar: gauge evaluation failed");
    return std::pow(g, -n);
  });
}

/// mu(K) = int_{S^{n-1}} int_0^{1/||theta||_K} r^{n-1} f(r theta) dr dtheta,
/// radial integral by Gauss-Legendre.
inline Estimate measure_body(const Body& body, const Density& f, const QuadratureSpec& q) {
  const int n = body.dim();
  require(f.dim() == n, "measure_body: density dimension mismatch");
  const GaussLegendre gl(q.n_radial);
  return sphere_mean(n, q, sphere_area(n), [&](const Vector& theta) {
    return f.radial_integral(theta, 1.0 / body.gauge_unchecked(theta), n, gl);
  });
}

// ---- interior sampling ----------------------------------------------------

enum class InteriorMethod { automatic, rejection_only };

namespace detail {

/// Uniform point of B_p^n (finite p): generalized-Gaussian coordinates over an
/// independent exponential, then radial normalization.
inline void lp_ball_point(Engine& eng, double p, double radius, Eigen::Ref<Vector> out) {
  std::gamma_distribution<double> gamma(1.0 / p, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  double s = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double g = gamma(eng);
    const double y = std::pow(g, 1.0 / p);
    out[i] = coin(eng) == 0 ? -y : y;
    s += g;  // |y|^p
  }
  s += expo(eng);
  out *= radius / std::pow(s, 1.0 / p);
}

inline void ball_point(Engine& eng, std::normal_distribution<double>& normal,
                       std::uniform_real_distribution<double>& unif, Eigen::Ref<Vector> out) {
  gaussian_unit(eng, normal, out);
  out *= std::pow(unif(eng), 1.0 / static_cast<double>(out.size()));
}

inline bool exact_sampler_available(const Body& body) {
  if (const auto* lp = body.as<kinds::LpBall>()) return lp->p > 0.0;
  if (body.as<kinds::Ellipsoid>() != nullptr) return true;
  if (const auto* v = body.as<kinds::PolytopeV>()) return v->simplicial;
  if (const auto* li = body.as<kinds::LinearImage>()) return exact_sampler_available(*li->base);
  if (const auto* sc = body.as<kinds::Scaled>()) return exact_sampler_available(*sc->base);
  return false;
}

/// Exact uniform sampler for kinds with a direct construction.
inline void exact_block(const Body& body, Engine& eng, Matrix& out) {
  const int n = body.dim();
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (const auto* lp = body.as<kinds::LpBall>()) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (std::isinf(lp->p)) {
        for (int i = 0; i < n; ++i) out(i, j) = lp->radius * (2.0 * unif(eng) - 1.0);
      } else if (lp->p == 2.0) {
        ball_point(eng, normal, unif, out.col(j));
        out.col(j) *= lp->radius;
      } else {
        lp_ball_point(eng, lp->p, lp->radius, out.col(j));
      }
    }
  } else if (const auto* el = body.as<kinds::Ellipsoid>()) {
    Vector u(n);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      ball_point(eng, normal, unif, u);
      out.col(j) = el->factor * u;
    }
  } else if (const auto* v = body.as<kinds::PolytopeV>()) {
    // Cone over a uniformly chosen facet (by volume), then Dirichlet weights.
    std::vector<double> cumulative(v->cone_volumes.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cumulative.size(); ++i) cumulative[i] = (acc += v->cone_volumes[i]);
    std::exponential_distribution<double> expo(1.0);
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double u = unif(eng) * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const auto f = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                                      static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
      double total = expo(eng);
      Vector w(n);
      for (int i = 0; i < n; ++i) total += (w[i] = expo(eng));
      out.col(j).setZero();
      const auto& fv = v->facet_vertices[f];
      for (int i = 0; i < n; ++i) out.col(j) += (w[i] / total) * v->vertices.col(fv[static_cast<std::size_t>(i)]);
    }
  } else if (const auto* li = body.as<kinds::LinearImage>()) {
    exact_block(*li->base, eng, out);
    out = li->map * out;
  } else if (const auto* sc = body.as<kinds::Scaled>()) {
    exact_block(*sc->base, eng, out);
    out *= sc->factor;
  }
}

struct RejectionPlan {
  bool polar = false;
  Vector half_widths;
  double acceptance = 0.0;
};

inline constexpr double kMinAcceptance = 1e-3;
inline constexpr std::size_t kPilotCandidates = 1U << 14U;

inline RejectionPlan plan_rejection(const Body& body, std::uint64_t seed) {
  const int n = body.dim();
  RejectionPlan plan;
  plan.half_widths = body.bounding_half_widths();
  auto eng = make_engine(seed, Stream::pilot, 1);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector x(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < kPilotCandidates; ++i) {
    for (int c = 0; c < n; ++c) x[c] = plan.half_widths[c] * unif(eng);
    hits += body.gauge_unchecked(x) <= 1.0 ? 1U : 0U;
  }
  plan.acceptance = static_cast<double>(hits) / kPilotCandidates;
  if (plan.acceptance >= kMinAcceptance) return plan;

  // Polar scheme: accept a direction with probability (rho(theta) / R)^n.
  std::normal_distribution<double> normal;
  const double big_r = body.outer_radius();
  double mean_accept = 0.0;
  for (std::size_t i = 0; i < kPilotCandidates; ++i) {
    gaussian_unit(eng, normal, x);
    mean_accept += std::pow(1.0 / (body.gauge_unchecked(x) * big_r), n);
  }
  mean_accept /= kPilotCandidates;
  if (mean_accept < kMinAcceptance) {
    throw NumericalFailure("sample_interior: acceptance collapsed for both box and polar rejection");
  }
  plan.polar = true;
  plan.acceptance = mean_accept;
  return plan;
}

inline void rejection_block(const Body& body, const RejectionPlan& plan, Engine& eng, Matrix& out) {
  const int n = body.dim();
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const double big_r = body.outer_radius();
  const auto max_attempts = static_cast<std::int64_t>(50.0 * static_cast<double>(out.cols()) / plan.acceptance) + 1000;
  std::int64_t attempts = 0;
  Vector x(n);
  for (Eigen::Index j = 0; j < out.cols();) {
    if (++attempts > max_attempts) throw NumericalFailure("sample_interior: rejection sampler stalled");
    if (!plan.polar) {
      for (int c = 0; c < n; ++c) x[c] = plan.half_widths[c] * sym(eng);
      if (body.gauge_unchecked(x) <= 1.0) out.col(j++) = x;
    } else {
      gaussian_unit(eng, normal, x);
      const double rho = 1.0 / body.gauge_unchecked(x);
      if (unif(eng) < std::pow(rho / big_r, n)) out.col(j++) = rho * std::pow(unif(eng), 1.0 / n) * x;
    }
  }
}

}  // namespace detail

/// Uniform points of the body as columns. Kinds with a direct construction
/// (l_p balls, ellipsoids, simplicial V-polytopes and their linear images) are
/// sampled exactly; others by rejection from the support-derived bounding box,
/// falling back to polar rejection when box acceptance is below 1e-3.
inline Matrix sample_interior(const Body& body, std::int64_t count, std::uint64_t seed, const Executor* exec = nullptr,
                              InteriorMethod method = InteriorMethod::automatic) {
  require(count >= 1, "sample_interior: count must be >= 1");
  const int n = body.dim();
  const auto total = static_cast<std::size_t>(count);
  const bool exact = method == InteriorMethod::automatic && detail::exact_sampler_available(body);
  detail::RejectionPlan plan;
  if (!exact) plan = detail::plan_rejection(body, seed);
  auto blocks = map_indexed(exec, block_count(total), [&](std::size_t b) {
    const std::size_t len = std::min(kBlockSize, total - b * kBlockSize);
    Matrix out(n, static_cast<Eigen::Index>(len));
    auto eng = make_engine(seed, Stream::interior, b);
    if (exact) {
      detail::exact_block(body, eng, out);
    } else {
      detail::rejection_block(body, plan, eng, out);
    }
    return out;
  });
  Matrix all(n, static_cast<Eigen::Index>(total));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    all.middleCols(static_cast<Eigen::Index>(b * kBlockSize), blocks[b].cols()) = blocks[b];
  }
  return all;
}

/// Hit-or-miss volume in the support-derived bounding box, using
/// q.n_interior candidates.
inline Estimate mc_volume_hitmiss(const Body& body, const QuadratureSpec& q) {
  q.validate();
  const int n = body.dim();
  const Vector w = body.bounding_half_widths();
  const double box = std::pow(2.0, n) * w.prod();
  const auto total = static_cast<std::size_t>(q.n_interior);
  auto hits = map_indexed(q.exec, block_count(total), [&](std::size_t b) {
    const std::size_t len = std::min(kBlockSize, total - b * kBlockSize);
    auto eng = make_engine(q.seed, Stream::hitmiss, b);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    Vector x(n);
    std::int64_t h = 0;
    for (std::size_t j = 0; j < len; ++j) {
      for (int c = 0; c < n; ++c) x[c] = w[c] * sym(eng);
      h += body.gauge_unchecked(x) <= 1.0 ? 1 : 0;
    }
    return h;
  });
  std::int64_t h = 0;
  for (auto v : hits) h += v;
  const double frac = static_cast<double>(h) / static_cast<double>(total);
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(total)),
          static_cast<std::int64_t>(total)};
}

}  // namespace starbody
