#pragma once

#include "starbody/body.hpp"
#include "starbody/estimate.hpp"
#include "starbody/parallel.hpp"
#include "starbody/quadrature.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace starbody {

inline constexpr double kMinZpExponent = 1.0;
inline constexpr double kMaxZpExponent = 64.0;
inline constexpr double kLogSpaceAbove = 16.0;
inline constexpr int kCacheBatches = 8;

// ---- volume normalization -------------------------------------------------

struct NormalizedBody {
  Body body;
  double factor = 1.0;  // body = factor * original
  Estimate original_volume;
};

/// Returns |K|^{-1/n} K. The exact volume is used when the kind has one,
/// otherwise the polar-formula estimate.
inline NormalizedBody normalize_to_volume_one(const Body& body, const QuadratureSpec& q) {
  const int n = body.dim();
  Estimate vol;
  if (auto v = body.exact_volume()) {
    vol = Estimate::exact(*v);
  } else {
    vol = volume_polar(body, q);
  }
  if (!(vol.value > 0.0) || !std::isfinite(vol.value)) {
    throw NumericalFailure("normalize_to_volume_one: volume estimate is not positive");
  }
  const double factor = std::pow(vol.value, -1.0 / n);
  return {scale(body, factor), factor, vol};
}

// ---- sample cache ---------------------------------------------------------

/// Uniform interior samples of a volume-one body C, shared across directions
/// and exponents.
struct ZpCache {
  Matrix points;  // n x N
  std::uint64_t seed = 0;
  double volume = 1.0;

  int dim() const { return static_cast<int>(points.rows()); }
  std::int64_t size() const { return points.cols(); }
};

using ZpCachePtr = std::shared_ptr<const ZpCache>;

inline ZpCachePtr make_zp_cache(const Body& c, std::int64_t count, std::uint64_t seed, const Executor* exec = nullptr,
                                double volume = 1.0) {
  require(count >= 2 * kCacheBatches, "zp cache: need at least 16 interior samples");
  auto cache = std::make_shared<ZpCache>();
  cache->points = sample_interior(c, count, derive_seed(seed, Stream::zp_cache), exec);
  cache->seed = seed;
  cache->volume = volume;
  return cache;
}

// ---- Z_p bodies -----------------------------------------------------------

/// Z_p(C) given through its support function
/// h(theta) = (|C| mean_x |<x, theta>|^p)^{1/p} over the cached samples.
class ZpBody {
 public:
  struct Batch {
    Vector h;        // support values
    Vector se;       // delta-method standard errors
    Matrix batch_h;  // kCacheBatches x m, support from each cache batch
  };

  ZpBody(ZpCachePtr cache, double p) : cache_(std::move(cache)), p_(p) {
    require(static_cast<bool>(cache_) && cache_->size() > 0, "zp: empty sample cache");
    require(p >= kMinZpExponent && p <= kMaxZpExponent, "zp: p must lie in [1, 64]");
    if (std::round(p) == p && p <= kLogSpaceAbove) int_exp_ = static_cast<unsigned>(p);
  }

  int dim() const { return cache_->dim(); }
  double p() const { return p_; }
  const ZpCache& cache() const { return *cache_; }
  const ZpCachePtr& cache_ptr() const { return cache_; }

  Estimate support(const Vector& theta) const {
    require_dim(theta.size(), dim(), "zp_support");
    const Batch b = support_batch(Matrix(theta), nullptr);
    return {b.h[0], b.se[0], cache_->size()};
  }

  double support_value(const Vector& theta) const { return support(theta).value; }

  /// Support values for every column of `thetas`.
  Batch support_batch(const Matrix& thetas, const Executor* exec) const {
    require_dim(thetas.rows(), dim(), "zp support batch");
    constexpr Eigen::Index kChunk = 64;
    const Eigen::Index m = thetas.cols();
    const auto n_chunks = static_cast<std::size_t>((m + kChunk - 1) / kChunk);
    Batch out{Vector(m), Vector(m), Matrix(kCacheBatches, m)};
    map_indexed(exec, n_chunks, [&](std::size_t c) {
      const Eigen::Index first = static_cast<Eigen::Index>(c) * kChunk;
      const Eigen::Index len = std::min(kChunk, m - first);
      const Matrix g = cache_->points.transpose() * thetas.middleCols(first, len);
      Vector t(g.rows());
      for (Eigen::Index j = 0; j < len; ++j) evaluate_column(g.col(j), t, out, first + j);
      return 0;
    });
    return out;
  }

 private:
  void evaluate_column(const Eigen::Ref<const Vector>& dots, Vector& t, Batch& out, Eigen::Index col) const {
    const Eigen::Index n_pts = dots.size();
    double scale = 1.0;
    const bool log_space = p_ > kLogSpaceAbove;
    if (log_space) {
      scale = dots.cwiseAbs().maxCoeff();
      if (scale == 0.0) scale = 1.0;
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n_pts; ++i) {
      const double a = std::abs(dots[i]) / scale;
      if (log_space) {
        t[i] = a == 0.0 ? 0.0 : std::exp(p_ * std::log(a));
      } else if (int_exp_ != 0U) {
        t[i] = int_pow(a);
      } else {
        t[i] = std::pow(a, p_);
      }
      sum += t[i];
    }
    const double mean = sum / static_cast<double>(n_pts);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n_pts; ++i) ss += (t[i] - mean) * (t[i] - mean);
    const double se_mean = n_pts > 1 ? std::sqrt(ss / static_cast<double>(n_pts - 1) / static_cast<double>(n_pts)) : 0.0;
    const double vol_root = std::pow(cache_->volume, 1.0 / p_);
    const double h = scale * vol_root * std::pow(mean, 1.0 / p_);
    out.h[col] = h;
    out.se[col] = mean > 0.0 ? h / p_ * se_mean / mean : 0.0;
    for (int b = 0; b < kCacheBatches; ++b) {
      const Eigen::Index lo = n_pts * b / kCacheBatches;
      const Eigen::Index hi = n_pts * (b + 1) / kCacheBatches;
      double s = 0.0;
      for (Eigen::Index i = lo; i < hi; ++i) s += t[i];
      out.batch_h(b, col) = scale * vol_root * std::pow(s / static_cast<double>(hi - lo), 1.0 / p_);
    }
  }

  double int_pow(double a) const {
    double acc = 1.0;
    for (unsigned e = int_exp_; e != 0U; e >>= 1U, a *= a) {
      if ((e & 1U) != 0U) acc *= a;
    }
    return acc;
  }

  ZpCachePtr cache_;
  double p_;
  unsigned int_exp_ = 0;
};

inline Estimate zp_support(const ZpBody& z, const Vector& theta) { return z.support(theta); }

namespace detail {

struct VectorHash {
  std::size_t operator()(const std::vector<double>& v) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (double x : v) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &x, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Support of Z_p(C) as a gauge evaluator, memoized by the exact direction.
class ZpSupportEvaluator final : public SupportEvaluator {
 public:
  static constexpr std::size_t kMemoCapacity = 1U << 16U;

  explicit ZpSupportEvaluator(std::shared_ptr<const ZpBody> z) : z_(std::move(z)) {}

  double operator()(const Vector& theta) const override {
    std::vector<double> key(theta.data(), theta.data() + theta.size());
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    const double h = z_->support_value(theta);
    std::lock_guard<std::mutex> lock(mu_);
    if (memo_.size() < kMemoCapacity) memo_.emplace(std::move(key), h);
    return h;
  }

  std::string describe() const override { return "zp_support(p=" + std::to_string(z_->p()) + ")"; }

  const ZpBody& zp() const { return *z_; }

 private:
  std::shared_ptr<const ZpBody> z_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::vector<double>, double, detail::VectorHash> memo_;
};

/// Z_p°(C): the support-defined body whose gauge is h_{Z_p(C)}.
inline Body zp_polar_body(const ZpBody& z, double inner_radius, double outer_radius, bool symmetric = true) {
  auto eval = std::make_shared<ZpSupportEvaluator>(std::make_shared<const ZpBody>(z));
  return Body::support_defined(z.dim(), eval, BodyFlags{symmetric, true, false}, inner_radius, outer_radius);
}

/// Radii of Z_p°(C) for a C of known support: Z_p(C) ⊆ C gives the inner
/// radius 1 / outer_radius(C); the outer radius is measured on a panel.
inline Body zp_polar_body(const ZpBody& z, const Body& c, const Matrix& panel) {
  const auto b = z.support_batch(panel, nullptr);
  const double h_min = b.h.minCoeff();
  require(h_min > 0.0, "zp_polar_body: degenerate support on the panel");
  const double outer = 2.0 / h_min;
  return zp_polar_body(z, std::min(1.0 / c.outer_radius(), outer), outer, c.flags().symmetric);
}

struct ZpVolume {
  Estimate volume;
  double direction_se = 0.0;
  double cache_se = 0.0;
  ZpBody::Batch support;  // per panel direction
};

/// |Z_p°(C)| = (1/n) int_S h_{Z_p(C)}^{-n} over a panel of uniform directions.
/// The standard error combines direction sampling with a batch-means estimate
/// of the cache error.
inline ZpVolume zp_polar_volume(const ZpBody& z, const Matrix& directions, const Executor* exec = nullptr) {
  const int n = z.dim();
  ZpVolume out;
  out.support = z.support_batch(directions, exec);
  const double c = sphere_area(n) / n;
  MeanAccumulator acc;
  for (Eigen::Index j = 0; j < out.support.h.size(); ++j) acc.add(std::pow(out.support.h[j], -n));
  const Estimate dir = acc.estimate(c);
  MeanAccumulator batches;
  for (int b = 0; b < kCacheBatches; ++b) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < out.support.batch_h.cols(); ++j) s += std::pow(out.support.batch_h(b, j), -n);
    batches.add(c * s / static_cast<double>(out.support.batch_h.cols()));
  }
  out.direction_se = dir.std_error;
  out.cache_se = std::sqrt(batches.variance() / kCacheBatches);
  out.volume = {dir.value, std::hypot(out.direction_se, out.cache_se), dir.n_samples};
  return out;
}

inline ZpVolume zp_polar_volume(const ZpBody& z, const QuadratureSpec& q) {
  const Matrix dirs = sample_sphere(z.dim(), q.n_directions, q.seed, Scheme::monte_carlo, Stream::panel);
  return zp_polar_volume(z, dirs, q.exec);
}

// ---- isotropic constant ---------------------------------------------------

/// L_C = (|Z_2(C)| / |B_2^n|)^{1/n}, written scale-free as
/// det(E xx')^{1/(2n)} |C|^{-1/n}. The error comes from 16 batch means.
inline Estimate isotropic_constant(const Matrix& samples, double volume = 1.0) {
  const auto n = samples.rows();
  const auto m = samples.cols();
  constexpr int kBatches = 16;
  require(m >= 4 * kBatches, "isotropic_constant: too few samples");
  auto value_of = [&](Eigen::Index lo, Eigen::Index hi) {
    const auto block = samples.middleCols(lo, hi - lo);
    const Matrix cov = block * block.transpose() / static_cast<double>(hi - lo);
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalFailure("isotropic_constant: covariance is not positive definite");
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return std::exp(logdet / (2.0 * static_cast<double>(n))) * std::pow(volume, -1.0 / static_cast<double>(n));
  };
  MeanAccumulator batches;
  for (int b = 0; b < kBatches; ++b) batches.add(value_of(m * b / kBatches, m * (b + 1) / kBatches));
  return {value_of(0, m), std::sqrt(batches.variance() / kBatches), m};
}

inline Estimate isotropic_constant(const Body& c, const QuadratureSpec& q) {
  const auto norm = normalize_to_volume_one(c, q);
  return isotropic_constant(sample_interior(norm.body, q.n_interior, derive_seed(q.seed, Stream::zp_cache), q.exec));
}

// ---- d_ovr enclosure ------------------------------------------------------

struct EnclosureOptions {
  std::int64_t cache_size = 200000;
  std::int64_t panel_size = 10000;
  std::uint64_t seed = 7;
  QuadratureSpec volume_quadrature;  // for |K| when no closed form exists
  const Executor* exec = nullptr;
};

struct EnclosureResult {
  int n = 0;
  double p = 0.0;
  std::optional<Body> enclosing;  // L = |K°|^{-1/n} Z_p°(C)
  Estimate ratio;           // (|L| / |K|)^{1/n}
  Estimate normalized;      // ratio / sqrt((n + p) / p)
  Estimate volume_k;
  Estimate volume_k_polar;
  Estimate volume_zp_polar;
  Estimate volume_l;
  double inclusion_worst = 0.0;  // max over the panel of radial_K / radial_L
  double inclusion_tol = 0.0;
  double c0 = 0.0;  // min over the panel of h_{Z_p(C)} / h_C
  double c0_se = 0.0;
  std::int64_t panel_size = 0;
  std::int64_t cache_size = 0;
  std::uint64_t seed = 0;
};

/// Builds C = K° / |K°|^{1/n} and L = |K°|^{-1/n} Z_p°(C), then measures the
/// inclusion K ⊆ L and the volume ratio on one shared direction panel.
inline EnclosureResult theorem3_enclosure(const Body& k, double p, const EnclosureOptions& opt,
                                          ZpCachePtr cache = nullptr) {
  require(k.flags().symmetric && k.flags().convex, "theorem3_enclosure: K must be symmetric and convex");
  require(k.has_exact_polar(), "theorem3_enclosure: K needs an exact polar body");
  require(opt.panel_size >= 2, "theorem3_enclosure: panel too small");
  const int n = k.dim();
  EnclosureResult r;
  r.n = n;
  r.p = p;
  r.seed = opt.seed;

  const Body k_polar = polar(k);
  QuadratureSpec vq = opt.volume_quadrature;
  vq.exec = opt.exec;
  if (auto v = k_polar.exact_volume()) {
    r.volume_k_polar = Estimate::exact(*v);
  } else {
    r.volume_k_polar = volume_polar(k_polar, vq.with_seed(derive_seed(opt.seed, Stream::sphere, 1)));
  }
  if (auto v = k.exact_volume()) {
    r.volume_k = Estimate::exact(*v);
  } else {
    r.volume_k = volume_polar(k, vq.with_seed(derive_seed(opt.seed, Stream::sphere, 2)));
  }
  const double s = std::pow(r.volume_k_polar.value, -1.0 / n);
  const Body c = scale(k_polar, s);
  if (!cache) cache = make_zp_cache(c, opt.cache_size, opt.seed, opt.exec);
  require(cache->dim() == n, "theorem3_enclosure: cache dimension mismatch");
  const ZpBody z(cache, p);
  r.cache_size = cache->size();

  const Matrix panel = sample_sphere(n, opt.panel_size, opt.seed, Scheme::monte_carlo, Stream::panel);
  r.panel_size = panel.cols();
  const ZpVolume zv = zp_polar_volume(z, panel, opt.exec);
  r.volume_zp_polar = zv.volume;

  // K ⊆ L  <=>  h_{Z_p(C)} <= h_C on every direction.
  double worst = 0.0;
  double worst_rel_se = 0.0;
  double c0 = std::numeric_limits<double>::infinity();
  double c0_se = 0.0;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    const double h_c = c.support_unchecked(panel.col(j));
    const double ratio = zv.support.h[j] / h_c;
    if (ratio > worst) {
      worst = ratio;
      worst_rel_se = zv.support.se[j] / zv.support.h[j];
    }
    if (ratio < c0) {
      c0 = ratio;
      c0_se = zv.support.se[j] / h_c;
    }
  }
  r.inclusion_worst = worst;
  r.inclusion_tol = std::max(kDualityTol, 3.0 * worst_rel_se);
  r.c0 = c0;
  r.c0_se = c0_se;
  if (worst > 1.0 + r.inclusion_tol) {
    throw NumericalFailure("theorem3_enclosure: inclusion K in L violated (worst ratio " + std::to_string(worst) + ")");
  }

  const Body zp_polar = zp_polar_body(z, 1.0 / c.outer_radius(), 2.0 / zv.support.h.minCoeff(), true);
  r.enclosing = scale(zp_polar, 1.0 / s);
  r.volume_l = quotient(r.volume_zp_polar, r.volume_k_polar);
  r.ratio = power(quotient(r.volume_l, r.volume_k), 1.0 / n);
  r.normalized = scaled(r.ratio, 1.0 / std::sqrt((n + p) / p));
  return r;
}

/// Certified upper bound on d_ovr(K, L_p^n): the enclosure ratio.
inline Estimate dovr_upper_bound(const Body& k, double p, const EnclosureOptions& opt) {
  return theorem3_enclosure(k, p, opt).ratio;
}

// ---- bound checks ---------------------------------------------------------

struct BoundChecks {
  int n = 0;
  double p = 0.0;
  Estimate incl_c;        // (a) min c with Z_p ⊆ c p Z_2
  Estimate lz;            // (b) |Z_p°|^{1/n} n sqrt(p / (n + p))
  std::optional<Estimate> km;  // (c) |Z_p°|^{1/n} n L_C sqrt(p / n), p <= sqrt(n)
  Estimate bm;            // (d) |C°|^{1/n} n
  Estimate isotropic;
  Estimate zp_polar_volume;
};

/// Measurements for a volume-one body C against the classical bounds.
inline BoundChecks bound_checks(const Body& c, double p, const EnclosureOptions& opt, ZpCachePtr cache = nullptr) {
  const int n = c.dim();
  BoundChecks r;
  r.n = n;
  r.p = p;
  if (!cache) cache = make_zp_cache(c, opt.cache_size, opt.seed, opt.exec);
  const ZpBody zp(cache, p);
  const ZpBody z2(cache, 2.0);
  const Matrix panel = sample_sphere(n, opt.panel_size, opt.seed, Scheme::monte_carlo, Stream::panel);
  const ZpVolume zv = zp_polar_volume(zp, panel, opt.exec);
  const auto b2 = z2.support_batch(panel, opt.exec);
  r.zp_polar_volume = zv.volume;

  double worst = -1.0;
  double worst_se = 0.0;
  for (Eigen::Index j = 0; j < panel.cols(); ++j) {
    const double v = zv.support.h[j] / (p * b2.h[j]);
    if (v > worst) {
      worst = v;
      worst_se = p == 2.0 ? 0.0 : std::hypot(zv.support.se[j] / zv.support.h[j], b2.se[j] / b2.h[j]) * v;
    }
  }
  r.incl_c = {worst, worst_se, panel.cols()};

  const Estimate root = power(zv.volume, 1.0 / n);
  r.lz = scaled(root, n * std::sqrt(p / (n + p)));
  r.isotropic = isotropic_constant(cache->points, cache->volume);
  if (p <= std::sqrt(static_cast<double>(n))) r.km = scaled(product(root, r.isotropic), n * std::sqrt(p / n));

  const Body c_polar = polar(c);
  Estimate vol_polar;
  if (auto v = c_polar.exact_volume()) {
    vol_polar = Estimate::exact(*v);
  } else {
    QuadratureSpec vq = opt.volume_quadrature;
    vq.exec = opt.exec;
    vol_polar = volume_polar(c_polar, vq.with_seed(derive_seed(opt.seed, Stream::sphere, 3)));
  }
  r.bm = scaled(power(vol_polar, 1.0 / n), n);
  return r;
}

}  // namespace starbody
