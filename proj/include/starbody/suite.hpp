#pragma once

#include "starbody/io.hpp"
#include "starbody/radon.hpp"
#include "starbody/verify.hpp"
#include "starbody/zp.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace starbody {

// A suite manifest is
//   {"master_seed": s, "quadrature": {...}, "instances": [...] | {"include": "file.json"}}
// and each instance is {"name", "criterion", "check", ...check fields}. Body
// fields take an inline body object or a path relative to the manifest.

struct SuiteManifest {
  std::uint64_t master_seed = 7;
  QuadratureSpec quadrature;
  std::vector<Json> instances;
  std::string base_dir = ".";
};

struct InstanceRun {
  std::string name;
  int criterion = 0;
  std::string check;
  std::vector<VerificationReport> rows;
  double seconds = 0.0;
};

struct SuiteResult {
  std::vector<InstanceRun> runs;

  std::vector<VerificationReport> rows() const {
    std::vector<VerificationReport> out;
    for (const auto& r : runs) out.insert(out.end(), r.rows.begin(), r.rows.end());
    return out;
  }

  bool all_pass() const {
    for (const auto& r : runs) {
      for (const auto& row : r.rows) {
        if (!row.pass) return false;
      }
    }
    return true;
  }
};

inline SuiteManifest manifest_from_json(const Json& j, const std::string& base_dir, const std::string& path = "manifest") {
  const detail::Fields f(j, path);
  SuiteManifest m;
  m.base_dir = base_dir;
  m.master_seed = f.unsigned_or("master_seed", m.master_seed);
  if (f.has("quadrature")) m.quadrature = quadrature_from_json(f.get("quadrature"), m.quadrature, f.at("quadrature"));
  const Json& inst = f.get("instances");
  if (inst.is_object()) {
    const detail::Fields inc(inst, f.at("instances"));
    const auto file = (std::filesystem::path(base_dir) / inc.string("include")).string();
    const Json list = read_json_file(file);
    if (!list.is_array()) throw InvalidInput(file + ": expected an array of instances");
    m.instances = list.get<std::vector<Json>>();
  } else if (inst.is_array()) {
    m.instances = inst.get<std::vector<Json>>();
  } else {
    throw InvalidInput(f.at("instances") + ": expected an array or {\"include\": path}");
  }
  return m;
}

inline SuiteManifest read_manifest_file(const std::string& path) {
  auto dir = std::filesystem::path(path).parent_path();
  return manifest_from_json(read_json_file(path), dir.empty() ? "." : dir.string(), path);
}

namespace detail {

/// Everything one instance needs besides its JSON.
struct InstanceContext {
  std::string base_dir = ".";
  QuadratureSpec q;  // seed already set to the instance seed
  const Executor* exec = nullptr;
};

inline Body body_field(const Fields& f, const char* key, const InstanceContext& ctx) {
  const Json& v = f.get(key);
  if (v.is_string()) {
    const auto file = (std::filesystem::path(ctx.base_dir) / v.get<std::string>()).string();
    return body_from_json(read_json_file(file), file);
  }
  return body_from_json(v, f.at(key));
}

inline Density density_field(const Fields& f, const char* key, int n) {
  if (!f.has(key)) return Density::uniform(n);
  return density_from_json(f.get(key), n, f.at(key));
}

inline double dovr_field(const Fields& f, int n) {
  if (!f.has("dovr")) return 1.0;
  const Json& v = f.get("dovr");
  if (v.is_number()) {
    const double d = v.get<double>();
    if (!(d >= 1.0)) throw InvalidInput(f.at("dovr") + ": must be >= 1");
    return d;
  }
  if (!v.is_string()) throw InvalidInput(f.at("dovr") + ": expected a number or a preset name");
  const auto s = v.get<std::string>();
  if (s == "ball") return dovr_preset(DovrPreset::ball, n);
  if (s == "unconditional") return dovr_preset(DovrPreset::unconditional, n);
  if (s == "generic") return dovr_preset(DovrPreset::generic, n);
  throw InvalidInput(f.at("dovr") + ": unknown preset '" + s + "'");
}

inline VerifyOptions verify_options(const Fields& f, const InstanceContext& ctx) {
  VerifyOptions opt;
  opt.q = ctx.q;
  opt.q.exec = ctx.exec;
  opt.section_directions = f.integer_or("section_directions", opt.section_directions);
  opt.panel_size = f.integer_or("panel_size", opt.panel_size);
  if (f.has("coordinate_panel")) opt.coordinate_panel = f.boolean("coordinate_panel");
  require(opt.section_directions >= 2 && opt.panel_size >= 0, f.path() + ": invalid panel sizes");
  return opt;
}

/// p values, where the string "n" stands for the dimension.
inline std::vector<double> exponent_list(const Fields& f, const char* key, int n) {
  const Json& v = f.get(key);
  std::vector<double> out;
  auto one = [&](const Json& e, const std::string& where) {
    if (e.is_string() && e.get<std::string>() == "n") {
      out.push_back(n);
    } else if (e.is_number()) {
      out.push_back(e.get<double>());
    } else {
      throw InvalidInput(where + ": expected a number or \"n\"");
    }
  };
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) one(v[i], f.at(key) + "[" + std::to_string(i) + "]");
  } else {
    one(v, f.at(key));
  }
  std::vector<double> unique;
  for (double p : out) {
    if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(p);
  }
  return unique;
}

inline Vector direction_field(const Fields& f, int n) {
  if (!f.has("direction")) {
    Vector e = Vector::Zero(n);
    e[0] = 1.0;
    return e;
  }
  Vector v = f.vector("direction");
  require_dim(v.size(), n, "direction");
  require(v.norm() > 0.0, f.at("direction") + ": zero vector");
  return v / v.norm();
}

inline std::string exponent_label(double p) { return "p=" + format_double(p); }

inline VerificationReport exact_row(const std::string& check, int n, double k_or_p, Estimate lhs, Estimate rhs,
                                    Relation rel, std::uint64_t seed) {
  VerificationReport r;
  r.check = check;
  r.n = n;
  r.k_or_p = k_or_p;
  r.lhs = lhs;
  r.rhs = rhs;
  r.relation = rel;
  r.seed = seed;
  finalize(r);
  return r;
}

// ---- section constructions -------------------------------------------------

/// L from the instance: a body, or {"construction": "lowdim_ball"} or
/// {"construction": "dominating_scale", "base": body}.
inline Body section_partner(const Fields& f, const Body& k, const Density& fk, const Density& g, int codim,
                            const VerifyOptions& opt, const InstanceContext& ctx, Json& evidence) {
  const Json& v = f.get("L");
  if (v.is_object() && v.contains("construction")) {
    const Fields c(v, f.at("L"));
    const std::string how = c.string("construction");
    if (how == "lowdim_ball") {
      const auto lb = lowdim_ball(k, fk, codim, opt);
      evidence["construction"] = {{"kind", how}, {"radius", lb.radius}};
      return Body::ball(k.dim(), lb.radius);
    }
    if (how == "dominating_scale") {
      const Body base = body_field(c, "base", ctx);
      const double s = dominating_section_scale(k, fk, base, g, codim, opt);
      evidence["construction"] = {{"kind", how}, {"scale", s}};
      return scale(base, s);
    }
    throw InvalidInput(c.at("construction") + ": unknown construction '" + how + "'");
  }
  return body_field(f, "L", ctx);
}

/// K for the moment checks: a body or {"construction": "dominated_scale",
/// "base": body}.
inline Body moment_partner(const Fields& f, const Body& m, const Density& fm, const Density& g, double p,
                           const VerifyOptions& opt, const InstanceContext& ctx, Json& evidence) {
  const Json& v = f.get("K");
  if (v.is_object() && v.contains("construction")) {
    const Fields c(v, f.at("K"));
    const std::string how = c.string("construction");
    if (how != "dominated_scale") throw InvalidInput(c.at("construction") + ": unknown construction '" + how + "'");
    const Body base = body_field(c, "base", ctx);
    const double t = dominated_moment_scale(base, m, fm, g, p, opt);
    evidence["construction"] = {{"kind", how}, {"scale", t}};
    return scale(base, t);
  }
  return body_field(f, "K", ctx);
}

// ---- checks ---------------------------------------------------------------

inline std::vector<VerificationReport> run_volume(const Fields& f, const InstanceContext& ctx, bool hitmiss) {
  const Body body = body_field(f, "body", ctx);
  QuadratureSpec q = ctx.q;
  q.exec = ctx.exec;
  const auto exact = body.exact_volume();
  Estimate rhs;
  if (f.has("expected")) {
    rhs = Estimate::exact(f.number("expected"));
  } else if (exact) {
    rhs = Estimate::exact(*exact);
  } else {
    throw InvalidInput(f.path() + ": body has no closed-form volume and no \"expected\" value");
  }
  const Estimate lhs = hitmiss ? mc_volume_hitmiss(body, q) : volume_polar(body, q);
  return {exact_row(hitmiss ? "volume_hitmiss" : "volume", body.dim(), 0.0, lhs, rhs, Relation::eq, q.seed)};
}

inline std::vector<VerificationReport> run_mp(const Fields& f, const InstanceContext& ctx, const std::string& check) {
  QuadratureSpec q = ctx.q;
  q.exec = ctx.exec;
  const Body d = body_field(f, "D", ctx);
  if (check == "mp_identity_neg") return {mp_identity_negative(d, static_cast<int>(f.integer("k")), q)};
  if (check == "mp_identity_pos") return {mp_identity_positive(d, f.number("p"), q)};
  const Density g = density_field(f, "g", d.dim());
  if (check == "mp_inequality_neg") {
    return {mp_inequality_negative(body_field(f, "L", ctx), d, g, static_cast<int>(f.integer("k")), q)};
  }
  return {mp_inequality_positive(body_field(f, "K", ctx), d, g, f.number("p"), q)};
}

inline std::vector<VerificationReport> run_cnk_bounds(const Fields& f, const InstanceContext& ctx) {
  const int n_max = static_cast<int>(f.integer("n_max"));
  require(n_max >= 2, f.at("n_max") + ": must be >= 2");
  double upper = 0.0;
  double lower = 0.0;
  int pairs = 0;
  for (int n = 2; n <= n_max; ++n) {
    for (int k = 1; k < n; ++k) {
      const double c = cnk_constant(n, k);
      upper = std::max(upper, c);
      lower = std::max(lower, std::exp(-0.5 * k) / c);
      ++pairs;
    }
  }
  auto hi = exact_row("cnk_bounds", n_max, n_max, Estimate::exact(upper), Estimate::exact(1.0), Relation::le, ctx.q.seed);
  hi.measured = {{"max_cnk", upper}, {"pairs", pairs}};
  hi.pass = hi.pass && upper < 1.0;
  auto lo = exact_row("cnk_bounds", n_max, n_max, Estimate::exact(lower), Estimate::exact(1.0), Relation::le, ctx.q.seed);
  lo.measured = {{"max_lower_over_cnk", lower}, {"pairs", pairs}};
  lo.pass = lo.pass && lower < 1.0;
  hi.name = "upper";
  lo.name = "lower";
  return {hi, lo};
}

inline std::vector<VerificationReport> run_cnk_value(const Fields& f, const InstanceContext& ctx) {
  const int n = static_cast<int>(f.integer("n"));
  const int k = static_cast<int>(f.integer("k"));
  auto r = exact_row("cnk_value", n, k, Estimate::exact(cnk_constant(n, k)), Estimate::exact(f.number("expected")),
                     Relation::eq, ctx.q.seed);
  return {r};
}

inline Subspace subspace_field(const Fields& f, int n, int codim, const InstanceContext& ctx) {
  if (f.has("frame")) {
    const auto file = (std::filesystem::path(ctx.base_dir) / f.string("frame")).string();
    Subspace h = read_frame_csv(file);
    require_dim(h.ambient_dim(), n, "frame");
    require(h.dim() == n - codim, f.at("frame") + ": frame dimension does not match codim");
    return h;
  }
  return sample_grassmannian(n, codim, 1, derive_seed(ctx.q.seed, Stream::grassmannian))[0];
}

inline std::vector<VerificationReport> run_radon(const Fields& f, const InstanceContext& ctx, bool section) {
  const int codim = static_cast<int>(f.integer("codim"));
  QuadratureSpec q = ctx.q;
  q.exec = ctx.exec;
  q.n_directions = f.integer_or("directions", q.n_directions);
  if (section) {
    const Body body = f.has("body") ? body_field(f, "body", ctx) : Body::ball(static_cast<int>(f.integer("n")));
    const int n = body.dim();
    require(codim >= 1 && codim < n, f.at("codim") + ": need 1 <= codim < n");
    const Subspace h = subspace_field(f, n, codim, ctx);
    const double radius = f.number_or("radius", 1.0);
    const Estimate rhs = Estimate::exact(unit_ball_volume(n - codim) * std::pow(radius, n - codim));
    return {exact_row("section_volume_ball", n, codim, section_volume(body, h, q), rhs, Relation::eq, q.seed)};
  }
  const int n = static_cast<int>(f.integer("n"));
  require(codim >= 1 && codim < n, f.at("codim") + ": need 1 <= codim < n");
  const Subspace h = subspace_field(f, n, codim, ctx);
  const Estimate lhs = radon_transform([](const Vector&) { return 1.0; }, h, q);
  return {exact_row("radon_constant", n, codim, lhs, Estimate::exact(sphere_area(n - codim)), Relation::eq, q.seed)};
}

inline std::vector<VerificationReport> run_sections(const Fields& f, const InstanceContext& ctx,
                                                    const std::string& check) {
  const Body k = body_field(f, "K", ctx);
  const int n = k.dim();
  const Density fk = density_field(f, "f", n);
  const VerifyOptions opt = verify_options(f, ctx);
  if (check == "slicing") {
    const int codim = static_cast<int>(f.integer("codim"));
    return {verify_slicing(k, fk, codim, dovr_field(f, n), opt)};
  }
  const int codim = check == "isomorphic_bp" ? 1 : static_cast<int>(f.integer("codim"));
  const Density g = check == "theorem1" ? density_field(f, "g", n) : Density::uniform(n);
  Json construction = Json::object();
  const Body l = section_partner(f, k, fk, g, codim, opt, ctx, construction);
  VerificationReport r;
  if (check == "theorem1") {
    r = verify_theorem1(k, l, fk, g, codim, dovr_field(f, n), opt);
  } else if (check == "corollary_sections") {
    r = verify_corollary_sections(k, l, fk, codim, dovr_field(f, n), opt);
  } else {
    r = isomorphic_bp_ratio(k, l, fk, opt);
  }
  if (!construction.empty()) r.evidence["construction"] = construction["construction"];
  return {r};
}

inline std::vector<VerificationReport> run_moments(const Fields& f, const InstanceContext& ctx,
                                                   const std::string& check) {
  const Body m = body_field(f, "M", ctx);
  const int n = m.dim();
  const Density fm = density_field(f, "f", n);
  const double p = f.number("p");
  const VerifyOptions opt = verify_options(f, ctx);
  if (check == "moment_slicing") {
    return {moment_slicing_check(m, fm, p, dovr_field(f, n), opt, f.number_or("c_ref", 1.0))};
  }
  const Density g = density_field(f, "g", n);
  Json construction = Json::object();
  const Body k = moment_partner(f, m, fm, g, p, opt, ctx, construction);
  auto r = verify_theorem2(k, m, fm, g, p, dovr_field(f, n), opt);
  if (!construction.empty()) r.evidence["construction"] = construction["construction"];
  return {r};
}

inline EnclosureOptions enclosure_options(const Fields& f, const InstanceContext& ctx) {
  EnclosureOptions opt;
  opt.cache_size = f.integer_or("cache_size", opt.cache_size);
  opt.panel_size = f.integer_or("panel_size", opt.panel_size);
  opt.seed = ctx.q.seed;
  opt.volume_quadrature = ctx.q;
  opt.exec = ctx.exec;
  return opt;
}

/// Runs the enclosure for every p on one shared cache.
inline std::vector<EnclosureResult> enclosures(const Body& k, const std::vector<double>& ps,
                                               const EnclosureOptions& opt) {
  const int n = k.dim();
  const Body k_polar = polar(k);
  double vol_polar = 0.0;
  if (auto v = k_polar.exact_volume()) {
    vol_polar = *v;
  } else {
    QuadratureSpec vq = opt.volume_quadrature;
    vq.exec = opt.exec;
    vol_polar = volume_polar(k_polar, vq.with_seed(derive_seed(opt.seed, Stream::sphere, 1))).value;
  }
  const Body c = scale(k_polar, std::pow(vol_polar, -1.0 / n));
  const auto cache = make_zp_cache(c, opt.cache_size, opt.seed, opt.exec);
  std::vector<EnclosureResult> out;
  for (double p : ps) out.push_back(theorem3_enclosure(k, p, opt, cache));
  return out;
}

inline VerificationReport inclusion_row(const EnclosureResult& e, const std::string& check) {
  // K ⊆ L within the enclosure tolerance: worst / (1 + tol) <= 1.
  auto r = exact_row(check, e.n, e.p, Estimate::exact(e.inclusion_worst / (1.0 + e.inclusion_tol)),
                     Estimate::exact(1.0), Relation::le, e.seed);
  r.measured = {{"inclusion_worst", e.inclusion_worst},
                {"inclusion_tol", e.inclusion_tol},
                {"panel_size", static_cast<double>(e.panel_size)},
                {"cache_size", static_cast<double>(e.cache_size)}};
  return r;
}

inline std::vector<VerificationReport> run_theorem3(const Fields& f, const InstanceContext& ctx) {
  const Body k = body_field(f, "K", ctx);
  const int n = k.dim();
  const auto ps = exponent_list(f, "p", n);
  const bool ball = f.string_or("mode", "sweep") == "ball";
  const double threshold = f.number_or("ratio_threshold", std::numeric_limits<double>::infinity());
  const auto results = enclosures(k, ps, enclosure_options(f, ctx));
  std::vector<VerificationReport> rows;
  for (const auto& e : results) {
    const std::string tag = exponent_label(e.p);
    auto inc = inclusion_row(e, "theorem3_inclusion");
    inc.name = tag + "/inclusion";
    rows.push_back(inc);
    VerificationReport r;
    if (ball) {
      // d_ovr(B_2^n, L_p^n) >= 1, so the certified bound must be >= 1.
      r = exact_row("theorem3_ball", n, e.p, Estimate::exact(1.0), e.ratio, Relation::le, e.seed);
      r.name = tag + "/ball";
    } else {
      r = exact_row("theorem3_ratio", n, e.p, e.normalized, Estimate::exact(threshold), Relation::le, e.seed);
      r.name = tag + "/ratio";
    }
    r.measured = {{"ratio", e.ratio.value},
                  {"ratio_se", e.ratio.std_error},
                  {"normalized", e.normalized.value},
                  {"normalized_se", e.normalized.std_error},
                  {"volume_K", e.volume_k.value},
                  {"volume_K_polar", e.volume_k_polar.value},
                  {"volume_Zp_polar", e.volume_zp_polar.value},
                  {"c0", e.c0}};
    r.evidence = Json{{"panel_size", e.panel_size}, {"cache_size", e.cache_size}, {"threshold", threshold}};
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<VerificationReport> run_bm1(const Fields& f, const InstanceContext& ctx) {
  const Body k = body_field(f, "K", ctx);
  const int n = k.dim();
  const auto ps = exponent_list(f, "p", n);
  EnclosureOptions a = enclosure_options(f, ctx);
  EnclosureOptions b = a;
  b.seed = derive_seed(a.seed, Stream::instance, 1);
  const auto ra = enclosures(k, ps, a);
  const auto rb = enclosures(k, ps, b);
  std::vector<VerificationReport> rows;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string tag = exponent_label(ps[i]);
    // Z_p(C) ⊆ C is the same panel comparison h_Z <= h_C.
    auto inc = inclusion_row(ra[i], "bm1_inclusion");
    inc.name = tag + "/inclusion";
    rows.push_back(inc);
    auto st = exact_row("bm1_c0", n, ps[i], Estimate{ra[i].c0, ra[i].c0_se, ra[i].panel_size},
                        Estimate{rb[i].c0, rb[i].c0_se, rb[i].panel_size}, Relation::eq, a.seed);
    st.name = tag + "/c0";
    st.measured = {{"c0_seed_a", ra[i].c0}, {"c0_seed_b", rb[i].c0}, {"seed_b", static_cast<double>(b.seed)}};
    st.pass = st.pass && ra[i].c0 > 0.0 && rb[i].c0 > 0.0;
    rows.push_back(st);
  }
  return rows;
}

inline ZpCachePtr cache_for(const Body& c, std::int64_t count, const InstanceContext& ctx) {
  const auto vol = c.exact_volume();
  if (!vol) throw InvalidInput("zp checks need a body with a closed-form volume");
  return make_zp_cache(c, count, ctx.q.seed, ctx.exec, *vol);
}

inline std::vector<VerificationReport> run_zp(const Fields& f, const InstanceContext& ctx, const std::string& check) {
  const Body c = body_field(f, "body", ctx);
  const int n = c.dim();
  const std::int64_t count = f.integer_or("cache_size", 200000);
  if (check == "isotropic") {
    QuadratureSpec q = ctx.q;
    q.exec = ctx.exec;
    q.n_interior = count;
    return {exact_row("isotropic", n, 2.0, isotropic_constant(c, q), Estimate::exact(f.number("expected")),
                      Relation::eq, q.seed)};
  }
  const auto cache = cache_for(c, count, ctx);
  if (check == "zp_support") {
    const double p = f.number("p");
    const ZpBody z(cache, p);
    return {exact_row("zp_support", n, p, z.support(direction_field(f, n)), Estimate::exact(f.number("expected")),
                      Relation::eq, ctx.q.seed)};
  }
  // zp_monotone: h_p <= h_q for p < q on shared samples.
  auto ps = exponent_list(f, "p", n);
  std::sort(ps.begin(), ps.end());
  require(ps.size() >= 2, f.at("p") + ": need at least two exponents");
  const Matrix dirs = sample_sphere(n, f.integer_or("directions", 100), derive_seed(ctx.q.seed, Stream::panel),
                                    Scheme::monte_carlo, Stream::panel);
  std::vector<ZpBody::Batch> batches;
  for (double p : ps) batches.push_back(ZpBody(cache, p).support_batch(dirs, ctx.exec));
  double worst = -std::numeric_limits<double>::infinity();
  double worst_se = 0.0;
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
    for (Eigen::Index j = 0; j < dirs.cols(); ++j) {
      const double d = batches[i].h[j] - batches[i + 1].h[j];
      if (d > worst) {
        worst = d;
        worst_se = std::hypot(batches[i].se[j], batches[i + 1].se[j]);
      }
    }
  }
  auto r = exact_row("zp_monotone", n, ps.back(), Estimate{worst, worst_se, dirs.cols()}, Estimate::exact(0.0),
                     Relation::le, ctx.q.seed);
  r.measured = {{"directions", static_cast<double>(dirs.cols())}, {"exponents", static_cast<double>(ps.size())}};
  return {r};
}

}  // namespace detail

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> checks = {
      "volume",          "volume_hitmiss",    "mp_identity_neg",    "mp_identity_pos", "mp_inequality_neg",
      "mp_inequality_pos", "cnk_bounds",      "cnk_value",          "radon_constant",  "section_volume_ball",
      "theorem1",        "corollary_sections", "slicing",           "isomorphic_bp",   "theorem2",
      "moment_slicing",  "theorem3",          "bm1",                "zp_support",      "isotropic",
      "zp_monotone"};
  return checks;
}

/// Runs one instance; rows are named "<instance>" or "<instance>/<part>".
inline std::vector<VerificationReport> run_instance(const Json& j, const detail::InstanceContext& ctx,
                                                    const std::string& path = "instance") {
  const detail::Fields f(j, path);
  const std::string name = f.string("name");
  const std::string check = f.string("check");
  detail::InstanceContext local = ctx;
  if (f.has("quadrature")) local.q = quadrature_from_json(f.get("quadrature"), local.q, f.at("quadrature"));
  local.q.seed = f.unsigned_or("seed", ctx.q.seed);
  local.q.exec = ctx.exec;

  std::vector<VerificationReport> rows;
  if (check == "volume" || check == "volume_hitmiss") {
    rows = detail::run_volume(f, local, check == "volume_hitmiss");
  } else if (check.rfind("mp_", 0) == 0) {
    if (check != "mp_identity_neg" && check != "mp_identity_pos" && check != "mp_inequality_neg" &&
        check != "mp_inequality_pos") {
      throw InvalidInput(f.at("check") + ": unknown check '" + check + "'");
    }
    rows = detail::run_mp(f, local, check);
  } else if (check == "cnk_bounds") {
    rows = detail::run_cnk_bounds(f, local);
  } else if (check == "cnk_value") {
    rows = detail::run_cnk_value(f, local);
  } else if (check == "radon_constant" || check == "section_volume_ball") {
    rows = detail::run_radon(f, local, check == "section_volume_ball");
  } else if (check == "theorem1" || check == "corollary_sections" || check == "slicing" || check == "isomorphic_bp") {
    rows = detail::run_sections(f, local, check);
  } else if (check == "theorem2" || check == "moment_slicing") {
    rows = detail::run_moments(f, local, check);
  } else if (check == "theorem3") {
    rows = detail::run_theorem3(f, local);
  } else if (check == "bm1") {
    rows = detail::run_bm1(f, local);
  } else if (check == "zp_support" || check == "isotropic" || check == "zp_monotone") {
    rows = detail::run_zp(f, local, check);
  } else {
    throw InvalidInput(f.at("check") + ": unknown check '" + check + "'");
  }
  for (auto& r : rows) {
    r.name = r.name.empty() ? name : name + "/" + r.name;
    r.inputs = j;
  }
  return rows;
}

/// Runs every instance in order. Instance i gets seed
/// derive_seed(master, instance, i) unless it fixes its own.
inline SuiteResult run_suite(const SuiteManifest& m, const Executor* exec = nullptr) {
  SuiteResult out;
  for (std::size_t i = 0; i < m.instances.size(); ++i) {
    const std::string path = "instances[" + std::to_string(i) + "]";
    detail::InstanceContext ctx;
    ctx.base_dir = m.base_dir;
    ctx.q = m.quadrature;
    ctx.q.seed = derive_seed(m.master_seed, Stream::instance, i);
    ctx.exec = exec;
    const detail::Fields f(m.instances[i], path);
    InstanceRun run;
    run.name = f.string("name");
    run.check = f.string("check");
    run.criterion = static_cast<int>(f.integer_or("criterion", 0));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run.rows = run_instance(m.instances[i], ctx, path);
    } catch (const InstanceInvalid&) {
      throw;
    } catch (const NumericalFailure& e) {
      // A guaranteed relation broke beyond tolerance: report it as a failing row.
      VerificationReport r;
      r.name = run.name;
      r.check = run.check;
      r.seed = ctx.q.seed;
      r.lhs.value = std::numeric_limits<double>::quiet_NaN();
      r.rhs.value = std::numeric_limits<double>::quiet_NaN();
      r.margin = std::numeric_limits<double>::quiet_NaN();
      r.notes.push_back(e.what());
      r.inputs = m.instances[i];
      run.rows = {r};
    } catch (const InvalidInput& e) {
      const std::string msg = e.what();
      throw InvalidInput(msg.rfind(path, 0) == 0 ? msg : path + " (" + run.name + "): " + msg);
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.runs.push_back(std::move(run));
  }
  return out;
}

}  // namespace starbody
