#pragma once

#include "starbody/body.hpp"
#include "starbody/density.hpp"
#include "starbody/estimate.hpp"
#include "starbody/quadrature.hpp"
#include "starbody/radon.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace starbody {

using Json = nlohmann::json;

// ---- reports --------------------------------------------------------------

/// `le` checks lhs <= rhs; `eq` checks |lhs - rhs| within tolerance.
enum class Relation { le, eq };

inline std::string to_string(Relation r) { return r == Relation::le ? "le" : "eq"; }

struct VerificationReport {
  std::string name;
  std::string check;
  int n = 0;
  double k_or_p = 0.0;
  Estimate lhs;
  Estimate rhs;
  double margin = 0.0;
  bool pass = false;
  Relation relation = Relation::le;
  std::uint64_t seed = 0;
  Json inputs = Json::object();
  Json evidence = Json::object();
  std::map<std::string, double> measured;
  std::vector<std::string> notes;
};

inline constexpr double kPassRelTol = 1e-9;
inline constexpr double kPassSigmas = 3.0;

/// pass <=> lhs <= rhs + max(1e-9 |rhs|, 3 combined SE); equality checks are
/// two-sided. margin is (rhs - lhs) in combined SE, or relative to |rhs| when
/// both sides are exact.
inline void finalize(VerificationReport& r) {
  const double scale = std::max(std::abs(r.lhs.value), std::abs(r.rhs.value));
  double se = combined_se(r.lhs, r.rhs);
  if (se <= kExactTol * scale) se = 0.0;  // rounding-level spread of constant integrands
  const double tol = std::max(kPassRelTol * std::abs(r.rhs.value), kPassSigmas * se);
  const double diff = r.rhs.value - r.lhs.value;
  if (r.relation == Relation::le) {
    r.pass = r.lhs.value <= r.rhs.value + tol;
  } else {
    const double eq_tol = std::max(tol, kExactTol * scale);
    r.pass = std::abs(diff) <= eq_tol;
  }
  if (se > 0.0) {
    r.margin = diff / se;
  } else {
    r.margin = r.rhs.value != 0.0 ? diff / std::abs(r.rhs.value) : diff;
  }
  if (!std::isfinite(r.lhs.value) || !std::isfinite(r.rhs.value)) r.pass = false;
}

// ---- options --------------------------------------------------------------

/// Quadrature for body integrals plus the size of the hypothesis panels.
struct VerifyOptions {
  QuadratureSpec q;
  std::int64_t section_directions = 16384;
  std::int64_t panel_size = 256;
  bool coordinate_panel = true;

  QuadratureSpec section_quadrature() const {
    QuadratureSpec s = q;
    s.n_directions = section_directions;
    s.seed = derive_seed(q.seed, Stream::subspace_directions);
    return s;
  }

  std::uint64_t panel_seed() const { return derive_seed(q.seed, Stream::grassmannian); }
};

// ---- constants ------------------------------------------------------------

/// c_{n,k} = |B_2^n|^{(n-k)/n} / |B_2^{n-k}|, in log-gamma arithmetic.
inline double cnk_constant(int n, int k) {
  require(n >= 2 && k >= 1 && k < n, "cnk_constant: need 1 <= k < n");
  const double log_c = (n - k) / static_cast<double>(n) * log_unit_ball_volume(n) - log_unit_ball_volume(n - k);
  const double c = std::exp(log_c);
  if (!(c > std::exp(-0.5 * k) && c < 1.0)) {
    throw NumericalFailure("cnk_constant: bound e^{-k/2} < c_{n,k} < 1 violated");
  }
  return c;
}

/// Built-in certified bounds on d_ovr(K, BP_k^n).
enum class DovrPreset { ball, unconditional, generic };

inline double dovr_preset(DovrPreset p, int n) {
  switch (p) {
    case DovrPreset::ball:
      return 1.0;
    case DovrPreset::unconditional:
      return std::sqrt(std::exp(1.0));
    case DovrPreset::generic:
      return std::sqrt(static_cast<double>(n));
  }
  return std::sqrt(static_cast<double>(n));
}

// ---- shared helpers -------------------------------------------------------

namespace detail {

inline Estimate volume_of(const Body& body, const QuadratureSpec& q) {
  if (auto v = body.exact_volume()) return Estimate::exact(*v);
  return volume_polar(body, q);
}

inline bool within_tolerance(const Estimate& lhs, const Estimate& rhs) {
  const double tol = std::max(kPassRelTol * std::abs(rhs.value), kPassSigmas * combined_se(lhs, rhs));
  return lhs.value <= rhs.value + tol;
}

/// Panel verdict for lhs_i <= rhs_i on every panel element.
inline Json panel_evidence(const std::vector<Estimate>& lhs, const std::vector<Estimate>& rhs, std::size_t n_coord,
                           const std::string& what) {
  double min_slack = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double se = combined_se(lhs[i], rhs[i]);
    const double slack = se > 0.0 ? (rhs[i].value - lhs[i].value) / se
                                  : (rhs[i].value - lhs[i].value) / std::max(std::abs(rhs[i].value), 1e-300);
    if (slack < min_slack) {
      min_slack = slack;
      worst = i;
    }
    if (!within_tolerance(lhs[i], rhs[i])) ++violations;
  }
  return Json{{"hypothesis", what},
              {"panel_size", lhs.size()},
              {"coordinate", n_coord},
              {"min_slack", min_slack},
              {"worst_index", worst},
              {"worst_lhs", lhs.empty() ? 0.0 : lhs[worst].value},
              {"worst_rhs", rhs.empty() ? 0.0 : rhs[worst].value},
              {"violations", violations}};
}

inline void require_hypothesis(const Json& evidence) {
  if (evidence.at("violations").get<std::size_t>() != 0) {
    throw InstanceInvalid("hypothesis fails on " + std::to_string(evidence.at("violations").get<std::size_t>()) +
                          " of " + std::to_string(evidence.at("panel_size").get<std::size_t>()) +
                          " panel elements (" + evidence.at("hypothesis").get<std::string>() + ")");
  }
}

inline std::vector<Subspace> section_panel(int n, int k, const VerifyOptions& opt) {
  return subspace_panel(n, k, opt.panel_size, opt.panel_seed(), opt.coordinate_panel);
}

inline std::size_t coordinate_count(int n, int k, const VerifyOptions& opt) {
  return opt.coordinate_panel ? static_cast<std::size_t>(std::llround(binomial(n, n - k))) : 0U;
}

/// Directions xi: +-free coordinate axes followed by sampled unit vectors.
inline Matrix direction_panel(int n, const VerifyOptions& opt) {
  const Matrix random = sample_sphere(n, opt.panel_size, opt.panel_seed(), Scheme::monte_carlo, Stream::panel);
  if (!opt.coordinate_panel) return random;
  Matrix out(n, n + random.cols());
  out.leftCols(n) = Matrix::Identity(n, n);
  out.rightCols(random.cols()) = random;
  return out;
}

/// int_K |<x, xi>|^p g for every panel column, polar formula on shared
/// directions: int_S |<theta, xi>|^p int_0^{rho_K} r^{n+p-1} g(r theta) dr.
inline std::vector<Estimate> directional_moments(const Body& body, const Density& g, double p, const Matrix& xis,
                                                 const QuadratureSpec& q) {
  const int n = body.dim();
  const GaussLegendre gl(q.n_radial);
  const auto m = static_cast<std::size_t>(xis.cols());
  return sphere_means(n, m, q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double radial = g.radial_integral(theta, 1.0 / body.gauge_unchecked(theta), n + p, gl);
    const Vector dots = xis.transpose() * theta;
    for (std::size_t i = 0; i < m; ++i) out[i] = abs_pow(dots[static_cast<Eigen::Index>(i)], p) * radial;
  });
}

inline Estimate power_product(std::initializer_list<std::pair<Estimate, double>> factors, double constant) {
  Estimate acc = Estimate::exact(constant);
  for (const auto& [e, a] : factors) acc = product(acc, power(e, a));
  return acc;
}

}  // namespace detail

// ---- Milman-Pajor ---------------------------------------------------------

/// int_D ||x||_D^{-k} dx against n/(n-k) |D|. The integral runs the polar
/// formula with Gauss-Legendre along rays on the evaluated gauge; the interior
/// route has infinite variance once 2k >= n.
inline VerificationReport mp_identity_negative(const Body& d, int k, const QuadratureSpec& q) {
  const int n = d.dim();
  require(k >= 1 && k < n, "milman_pajor: need 1 <= k < n");
  const GaussLegendre gl(q.n_radial);
  VerificationReport r;
  r.check = "mp_identity_neg";
  r.n = n;
  r.k_or_p = k;
  r.relation = Relation::eq;
  r.seed = q.seed;
  r.lhs = sphere_mean(n, q, sphere_area(n), [&](const Vector& theta) {
    const double rho = 1.0 / d.gauge_unchecked(theta);
    const double half = 0.5 * rho;
    double acc = 0.0;
    for (int j = 0; j < gl.order(); ++j) {
      const double t = half * (gl.nodes[j] + 1.0);
      acc += gl.weights[j] * std::pow(t, n - 1) * std::pow(d.gauge_unchecked(Vector(t * theta)), -k);
    }
    return half * acc;
  });
  r.rhs = scaled(detail::volume_of(d, q), n / static_cast<double>(n - k));
  finalize(r);
  return r;
}

/// int_D ||x||_D^p dx against n/(n+p) |D|, the left side by uniform interior
/// samples (|D| E ||X||^p).
inline VerificationReport mp_identity_positive(const Body& d, double p, const QuadratureSpec& q) {
  const int n = d.dim();
  require(p > 0.0, "milman_pajor: need p > 0");
  const Estimate vol = detail::volume_of(d, q);
  const Matrix pts = sample_interior(d, q.n_interior, q.seed, q.exec);
  MeanAccumulator acc;
  for (Eigen::Index j = 0; j < pts.cols(); ++j) acc.add(abs_pow(d.gauge_unchecked(pts.col(j)), p));
  VerificationReport r;
  r.check = "mp_identity_pos";
  r.n = n;
  r.k_or_p = p;
  r.relation = Relation::eq;
  r.seed = q.seed;
  r.lhs = product(acc.estimate(), vol);
  r.rhs = scaled(vol, n / (n + p));
  finalize(r);
  return r;
}

/// (int_L ||x||_D^{-k} g / int_D ||x||_D^{-k})^{1/(n-k)} <= (int_L g / |D|)^{1/n},
/// all four integrals on shared directions.
inline VerificationReport mp_inequality_negative(const Body& l, const Body& d, const Density& g, int k,
                                                 const QuadratureSpec& q) {
  const int n = d.dim();
  require(l.dim() == n && g.dim() == n, "milman_pajor: dimension mismatch");
  require(k >= 1 && k < n, "milman_pajor: need 1 <= k < n");
  require(d.flags().symmetric && d.flags().convex, "milman_pajor: D must be symmetric convex");
  g.check_normalized(true, q.seed);
  const GaussLegendre gl(q.n_radial);
  const auto e = sphere_means(n, 4, q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double gd = d.gauge_unchecked(theta);
    const double rho_l = 1.0 / l.gauge_unchecked(theta);
    const double rho_d = 1.0 / gd;
    out[0] = std::pow(gd, -k) * g.radial_integral(theta, rho_l, n - k, gl);
    out[1] = std::pow(gd, -k) * std::pow(rho_d, n - k) / (n - k);
    out[2] = g.radial_integral(theta, rho_l, n, gl);
    out[3] = std::pow(rho_d, n) / n;
  });
  VerificationReport r;
  r.check = "mp_inequality_neg";
  r.n = n;
  r.k_or_p = k;
  r.seed = q.seed;
  r.lhs = power(quotient(e[0], e[1]), 1.0 / (n - k));
  r.rhs = power(quotient(e[2], e[3]), 1.0 / n);
  r.measured = {{"int_L_normD_neg_g", e[0].value}, {"int_D_normD_neg", e[1].value}, {"int_L_g", e[2].value},
                {"volume_D", e[3].value}};
  finalize(r);
  return r;
}

/// (int_K g / |D|)^{1/n} <= (int_K ||x||_D^p g / int_D ||x||_D^p)^{1/(n+p)},
/// i.e. the positive-exponent inequality for g~ = g chi_K.
inline VerificationReport mp_inequality_positive(const Body& k_body, const Body& d, const Density& g, double p,
                                                 const QuadratureSpec& q) {
  const int n = d.dim();
  require(k_body.dim() == n && g.dim() == n, "milman_pajor: dimension mismatch");
  require(p > 0.0, "milman_pajor: need p > 0");
  require(d.flags().symmetric && d.flags().convex, "milman_pajor: D must be symmetric convex");
  g.check_normalized(true, q.seed);
  const GaussLegendre gl(q.n_radial);
  const auto e = sphere_means(n, 4, q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double gd = d.gauge_unchecked(theta);
    const double rho_k = 1.0 / k_body.gauge_unchecked(theta);
    const double rho_d = 1.0 / gd;
    out[0] = std::pow(gd, p) * g.radial_integral(theta, rho_k, n + p, gl);
    out[1] = std::pow(gd, p) * std::pow(rho_d, n + p) / (n + p);
    out[2] = g.radial_integral(theta, rho_k, n, gl);
    out[3] = std::pow(rho_d, n) / n;
  });
  VerificationReport r;
  r.check = "mp_inequality_pos";
  r.n = n;
  r.k_or_p = p;
  r.seed = q.seed;
  r.lhs = power(quotient(e[2], e[3]), 1.0 / n);
  r.rhs = power(quotient(e[0], e[1]), 1.0 / (n + p));
  r.measured = {{"int_K_normD_pos_g", e[0].value}, {"int_D_normD_pos", e[1].value}, {"int_K_g", e[2].value},
                {"volume_D", e[3].value}};
  finalize(r);
  return r;
}

// ---- sections ---------------------------------------------------------------

struct SectionPanel {
  std::vector<Subspace> subspaces;
  std::vector<Estimate> lhs;
  std::vector<Estimate> rhs;
  Json evidence;
};

/// mu_1(K ∩ H) and mu_2(L ∩ H) on the panel, with shared in-subspace
/// directions for both sides.
inline SectionPanel section_hypothesis(const Body& k, const Density& f, const Body& l, const Density& g, int codim,
                                       const VerifyOptions& opt) {
  SectionPanel sp;
  sp.subspaces = detail::section_panel(k.dim(), codim, opt);
  const auto sq = opt.section_quadrature();
  sp.lhs = section_measures(k, f, sp.subspaces, sq);
  sp.rhs = section_measures(l, g, sp.subspaces, sq);
  sp.evidence = detail::panel_evidence(sp.lhs, sp.rhs, detail::coordinate_count(k.dim(), codim, opt),
                                       "mu1(K cap H) <= mu2(L cap H)");
  return sp;
}

/// mu_1(K) <= d^k n/(n-k) |K|^{k/n} mu_2(L)^{(n-k)/n}, after checking the
/// section hypothesis on the panel.
inline VerificationReport verify_theorem1(const Body& k, const Body& l, const Density& f, const Density& g, int codim,
                                          double dovr_bound, const VerifyOptions& opt) {
  const int n = k.dim();
  require(l.dim() == n && f.dim() == n && g.dim() == n, "theorem1: dimension mismatch");
  require(codim >= 1 && codim < n, "theorem1: need 0 < k < n");
  require(dovr_bound >= 1.0, "theorem1: d_ovr bound must be >= 1");
  g.check_normalized(true, opt.q.seed);
  VerificationReport r;
  r.check = "theorem1";
  r.n = n;
  r.k_or_p = codim;
  r.seed = opt.q.seed;
  const auto sp = section_hypothesis(k, f, l, g, codim, opt);
  r.evidence = sp.evidence;
  detail::require_hypothesis(r.evidence);

  const GaussLegendre gl(opt.q.n_radial);
  const auto e = sphere_means(n, 3, opt.q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double rho_k = 1.0 / k.gauge_unchecked(theta);
    out[0] = f.radial_integral(theta, rho_k, n, gl);
    out[1] = g.radial_integral(theta, 1.0 / l.gauge_unchecked(theta), n, gl);
    out[2] = std::pow(rho_k, n) / n;
  });
  const Estimate vol_k = k.exact_volume() ? Estimate::exact(*k.exact_volume()) : e[2];
  r.lhs = e[0];
  const double factor = std::pow(dovr_bound, codim) * n / static_cast<double>(n - codim);
  r.rhs = detail::power_product({{vol_k, codim / static_cast<double>(n)}, {e[1], (n - codim) / static_cast<double>(n)}},
                                factor);
  r.measured = {{"mu1_K", e[0].value}, {"mu2_L", e[1].value}, {"volume_K", vol_k.value}, {"dovr_bound", dovr_bound},
                {"structural_factor", n / static_cast<double>(n - codim)}, {"rhs_over_lhs", r.rhs.value / r.lhs.value}};
  finalize(r);
  return r;
}

/// verify_theorem1 with g = 1: mu(K) <= d^k n/(n-k) |L|^{(n-k)/n} |K|^{k/n}.
inline VerificationReport verify_corollary_sections(const Body& k, const Body& l, const Density& f, int codim,
                                                    double dovr_bound, const VerifyOptions& opt) {
  auto r = verify_theorem1(k, l, f, Density::uniform(k.dim()), codim, dovr_bound, opt);
  r.check = "corollary_sections";
  return r;
}

/// mu(K) <= d^k n/(n-k) c_{n,k} max_H mu(K ∩ H) |K|^{k/n}, the maximum taken
/// over the panel.
inline VerificationReport verify_slicing(const Body& k, const Density& f, int codim, double dovr_bound,
                                         const VerifyOptions& opt) {
  const int n = k.dim();
  require(f.dim() == n, "slicing: dimension mismatch");
  require(codim >= 1 && codim < n, "slicing: need 0 < k < n");
  const auto panel = detail::section_panel(n, codim, opt);
  const auto ext = extremal_section(k, f, panel, opt.section_quadrature(), Extremum::max);
  const double c = cnk_constant(n, codim);
  const GaussLegendre gl(opt.q.n_radial);
  const auto e = sphere_means(n, 2, opt.q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double rho = 1.0 / k.gauge_unchecked(theta);
    out[0] = f.radial_integral(theta, rho, n, gl);
    out[1] = std::pow(rho, n) / n;
  });
  const Estimate vol_k = k.exact_volume() ? Estimate::exact(*k.exact_volume()) : e[1];
  VerificationReport r;
  r.check = "slicing";
  r.n = n;
  r.k_or_p = codim;
  r.seed = opt.q.seed;
  r.lhs = e[0];
  const double factor = std::pow(dovr_bound, codim) * n / static_cast<double>(n - codim) * c;
  r.rhs = detail::power_product({{ext.value, 1.0}, {vol_k, codim / static_cast<double>(n)}}, factor);
  r.evidence = Json{{"panel_size", panel.size()},
                    {"coordinate", detail::coordinate_count(n, codim, opt)},
                    {"argmax_index", ext.index},
                    {"max_section", ext.value.value},
                    {"max_section_se", ext.value.std_error}};
  r.measured = {{"cnk", c}, {"max_section", ext.value.value}, {"volume_K", vol_k.value}, {"dovr_bound", dovr_bound}};
  finalize(r);
  return r;
}

/// Measured mu(K) / (|L|^{(n-1)/n} |K|^{1/n}) under mu(K ∩ xi^perp) <=
/// |L ∩ xi^perp| on the panel, checked against sqrt(n) n/(n-1), the bound
/// implied by d_ovr(K, BP_1^n) <= sqrt(n).
inline VerificationReport isomorphic_bp_ratio(const Body& k, const Body& l, const Density& f,
                                              const VerifyOptions& opt) {
  const int n = k.dim();
  require(l.dim() == n && f.dim() == n, "isomorphic_bp_ratio: dimension mismatch");
  require(k.flags().symmetric && k.flags().convex && l.flags().symmetric && l.flags().convex,
          "isomorphic_bp_ratio: K and L must be symmetric convex");
  VerificationReport r;
  r.check = "isomorphic_bp";
  r.n = n;
  r.k_or_p = 1;
  r.seed = opt.q.seed;
  const auto sp = section_hypothesis(k, f, l, Density::uniform(n), 1, opt);
  r.evidence = sp.evidence;
  detail::require_hypothesis(r.evidence);
  const GaussLegendre gl(opt.q.n_radial);
  const auto e = sphere_means(n, 3, opt.q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double rho_k = 1.0 / k.gauge_unchecked(theta);
    const double rho_l = 1.0 / l.gauge_unchecked(theta);
    out[0] = f.radial_integral(theta, rho_k, n, gl);
    out[1] = std::pow(rho_k, n) / n;
    out[2] = std::pow(rho_l, n) / n;
  });
  const Estimate vol_k = k.exact_volume() ? Estimate::exact(*k.exact_volume()) : e[1];
  const Estimate vol_l = l.exact_volume() ? Estimate::exact(*l.exact_volume()) : e[2];
  r.lhs = quotient(e[0], detail::power_product({{vol_l, (n - 1.0) / n}, {vol_k, 1.0 / n}}, 1.0));
  r.rhs = Estimate::exact(std::sqrt(static_cast<double>(n)) * n / (n - 1.0));
  r.measured = {{"ratio", r.lhs.value}, {"sqrt_n", std::sqrt(static_cast<double>(n))}};
  finalize(r);
  return r;
}

// ---- moments ----------------------------------------------------------------

/// (int_K g)^{(n+p)/n} <= (n+p)/n d^p |M|^{p/n} int_M f, after checking the
/// moment hypothesis on the direction panel. int_M ||x||_M^p f is recorded
/// as well.
inline VerificationReport verify_theorem2(const Body& k, const Body& m, const Density& f, const Density& g, double p,
                                          double dovr_bound, const VerifyOptions& opt) {
  const int n = k.dim();
  require(m.dim() == n && f.dim() == n && g.dim() == n, "theorem2: dimension mismatch");
  require(p > 0.0, "theorem2: need p > 0");
  require(dovr_bound >= 1.0, "theorem2: d_ovr bound must be >= 1");
  g.check_normalized(true, opt.q.seed);
  VerificationReport r;
  r.check = "theorem2";
  r.n = n;
  r.k_or_p = p;
  r.seed = opt.q.seed;
  const Matrix xis = detail::direction_panel(n, opt);
  QuadratureSpec mq = opt.section_quadrature();
  mq.n_directions = opt.q.n_directions;
  const auto lhs_m = detail::directional_moments(k, g, p, xis, mq);
  const auto rhs_m = detail::directional_moments(m, f, p, xis, mq);
  r.evidence = detail::panel_evidence(lhs_m, rhs_m, opt.coordinate_panel ? static_cast<std::size_t>(n) : 0U,
                                      "int_K |<x,xi>|^p g <= int_M |<x,xi>|^p f");
  detail::require_hypothesis(r.evidence);

  const GaussLegendre gl(opt.q.n_radial);
  const auto e = sphere_means(n, 3, opt.q, sphere_area(n), [&](const Vector& theta, double* out) {
    const double gm = m.gauge_unchecked(theta);
    out[0] = g.radial_integral(theta, 1.0 / k.gauge_unchecked(theta), n, gl);
    out[1] = f.radial_integral(theta, 1.0 / gm, n, gl);
    out[2] = std::pow(gm, p) * f.radial_integral(theta, 1.0 / gm, n + p, gl);
  });
  const Estimate vol_m = detail::volume_of(m, opt.q);
  r.lhs = power(e[0], (n + p) / n);
  const double factor = (n + p) / n * std::pow(dovr_bound, p);
  r.rhs = detail::power_product({{vol_m, p / n}, {e[1], 1.0}}, factor);
  r.measured = {{"int_K_g", e[0].value},        {"int_M_f", e[1].value},
                {"int_M_normM_p_f", e[2].value}, {"volume_M", vol_m.value},
                {"dovr_bound", dovr_bound},      {"structural_factor", (n + p) / n},
                {"rhs_over_lhs", r.rhs.value / r.lhs.value}};
  finalize(r);
  return r;
}

/// min_xi int_M |<x,xi>|^p f against (C p)^{p/2} d^p |M|^{p/n} int_M f, read
/// with K = M and reference constant C = 1; the implied C is recorded.
inline VerificationReport moment_slicing_check(const Body& m, const Density& f, double p, double dovr_bound,
                                               const VerifyOptions& opt, double c_ref = 1.0) {
  const int n = m.dim();
  require(f.dim() == n, "moment_slicing: dimension mismatch");
  require(p >= 1.0, "moment_slicing: need p >= 1");
  const Matrix xis = detail::direction_panel(n, opt);
  const auto moments = detail::directional_moments(m, f, p, xis, opt.q);
  std::size_t best = 0;
  for (std::size_t i = 1; i < moments.size(); ++i) {
    if (moments[i].value < moments[best].value) best = i;
  }
  const Estimate mass = measure_body(m, f, opt.q);
  const Estimate vol_m = detail::volume_of(m, opt.q);
  const Estimate base = detail::power_product({{vol_m, p / n}, {mass, 1.0}}, std::pow(dovr_bound, p));
  const Estimate ratio = quotient(moments[best], base);
  VerificationReport r;
  r.check = "moment_slicing";
  r.n = n;
  r.k_or_p = p;
  r.seed = opt.q.seed;
  r.lhs = moments[best];
  r.rhs = scaled(base, std::pow(c_ref * p, p / 2.0));
  r.evidence = Json{{"panel_size", xis.cols()}, {"argmin_index", best}, {"reading", "K = M"}};
  r.measured = {{"ratio", ratio.value},
                {"implied_C", std::pow(ratio.value, 2.0 / p) / p},
                {"C_ref", c_ref},
                {"dovr_bound", dovr_bound}};
  r.notes.push_back("right-hand side evaluated with K = M");
  finalize(r);
  return r;
}

// ---- instance constructions -----------------------------------------------

/// Relative bracket width at which the scale bisections stop. The returned
/// end of the bracket always satisfies the panel hypothesis.
inline constexpr double kScaleRelTol = 1e-3;

struct LowdimBall {
  double radius = 0.0;
  Estimate max_section;
};

/// L = c B_2^n with c^{n-k} |B_2^{n-k}| = max_H (mu(K ∩ H) + 2 SE): the ball
/// whose sections dominate K's on the panel.
inline LowdimBall lowdim_ball(const Body& k, const Density& f, int codim, const VerifyOptions& opt) {
  const int n = k.dim();
  const auto panel = detail::section_panel(n, codim, opt);
  const auto values = section_measures(k, f, panel, opt.section_quadrature());
  double top = 0.0;
  Estimate best;
  for (const auto& v : values) {
    if (v.value + 2.0 * v.std_error > top) {
      top = v.value + 2.0 * v.std_error;
      best = v;
    }
  }
  require(top > 0.0, "lowdim_ball: sections vanish");
  return {std::pow(top / unit_ball_volume(n - codim), 1.0 / (n - codim)), best};
}

/// Smallest c (to bisection precision, 2 SE margin) with mu_2(cL ∩ H) >=
/// mu_1(K ∩ H) on the panel. Uniform g scales in closed form.
inline double dominating_section_scale(const Body& k, const Density& f, const Body& l, const Density& g, int codim,
                                       const VerifyOptions& opt) {
  const int n = k.dim();
  const int d = n - codim;
  const auto panel = detail::section_panel(n, codim, opt);
  const auto sq = opt.section_quadrature();
  const auto lhs = section_measures(k, f, panel, sq);
  auto slack_at = [&](double c) {
    const auto rhs = section_measures(scale(l, c), g, panel, sq);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < panel.size(); ++i) {
      worst = std::min(worst, rhs[i].value - 2.0 * rhs[i].std_error - lhs[i].value - 2.0 * lhs[i].std_error);
    }
    return worst;
  };
  if (g.kind() == Density::Kind::uniform) {
    const auto base = section_measures(l, g, panel, sq);
    double c = 0.0;
    for (std::size_t i = 0; i < panel.size(); ++i) {
      const double den = base[i].value - 2.0 * base[i].std_error;
      require(den > 0.0, "dominating_section_scale: section estimate too noisy");
      c = std::max(c, std::pow((lhs[i].value + 2.0 * lhs[i].std_error) / den, 1.0 / d));
    }
    return c * (1.0 + 1e-12);
  }
  double hi = 1.0;
  int guard = 0;
  while (slack_at(hi) < 0.0) {
    hi *= 2.0;
    if (++guard > 40) throw NumericalFailure("dominating_section_scale: no dominating scale found");
  }
  double lo = hi / 2.0;
  guard = 0;
  while (slack_at(lo) >= 0.0 && ++guard < 40) lo /= 2.0;
  while (hi > lo * (1.0 + kScaleRelTol)) {
    const double mid = 0.5 * (lo + hi);
    (slack_at(mid) >= 0.0 ? hi : lo) = mid;
  }
  return hi;
}

/// Largest t (2 SE margin) with int_{tK} |<x,xi>|^p g <= int_M |<x,xi>|^p f on
/// the direction panel; uniform g scales as t^{n+p}.
inline double dominated_moment_scale(const Body& k, const Body& m, const Density& f, const Density& g, double p,
                                     const VerifyOptions& opt) {
  const int n = k.dim();
  const Matrix xis = detail::direction_panel(n, opt);
  QuadratureSpec mq = opt.section_quadrature();
  mq.n_directions = opt.q.n_directions;
  const auto rhs = detail::directional_moments(m, f, p, xis, mq);
  auto slack_at = [&](double t) {
    const auto lhs = detail::directional_moments(scale(k, t), g, p, xis, mq);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      worst = std::min(worst, rhs[i].value - 2.0 * rhs[i].std_error - lhs[i].value - 2.0 * lhs[i].std_error);
    }
    return worst;
  };
  if (g.kind() == Density::Kind::uniform) {
    const auto lhs = detail::directional_moments(k, g, p, xis, mq);
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const double num = rhs[i].value - 2.0 * rhs[i].std_error;
      require(num > 0.0, "dominated_moment_scale: moment estimate too noisy");
      t = std::min(t, std::pow(num / (lhs[i].value + 2.0 * lhs[i].std_error), 1.0 / (n + p)));
    }
    return t * (1.0 - 1e-12);
  }
  double lo = 1.0;
  int guard = 0;
  while (slack_at(lo) < 0.0) {
    lo /= 2.0;
    if (++guard > 40) throw NumericalFailure("dominated_moment_scale: no dominated scale found");
  }
  double hi = 2.0 * lo;
  guard = 0;
  while (slack_at(hi) >= 0.0 && ++guard < 40) hi *= 2.0;
  while (hi > lo * (1.0 + kScaleRelTol)) {
    const double mid = 0.5 * (lo + hi);
    (slack_at(mid) >= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace starbody
