// starbody command-line front end.
//
// Exit codes: 0 success, 1 a verification row failed, 2 invalid input.

#include "starbody/io.hpp"
#include "starbody/radon.hpp"
#include "starbody/suite.hpp"
#include "starbody/verify.hpp"
#include "starbody/zp.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sb = starbody;
using sb::Json;

int cli_main(int argc, const char* const* argv);

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;

struct Options {
  std::string body;
  std::string density;
  std::string instance;
  std::string manifest;
  std::string out;
  std::string format;  // empty: csv for suites, json otherwise
  std::string subspace = "random:1";
  std::string point;
  std::string direction;
  std::string input;
  std::int64_t samples = 100000;
  std::int64_t cache = 200000;
  std::int64_t panel = 10000;
  int radial_nodes = 32;
  int codim = 1;
  std::uint64_t seed = 7;
  std::string scheme = "antithetic_mc";
  double p = 2.0;
};

std::size_t worker_count() {
  if (const char* env = std::getenv("STARBODY_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw sb::InvalidInput("STARBODY_THREADS must be a positive integer");
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

sb::QuadratureSpec quadrature(const Options& o, const sb::Executor* exec) {
  sb::QuadratureSpec q;
  q.n_directions = o.samples;
  q.n_interior = o.samples;
  q.n_radial = o.radial_nodes;
  q.seed = o.seed;
  q.scheme = sb::scheme_from_string(o.scheme);
  q.exec = exec;
  q.validate();
  return q;
}

sb::Body load_body(const Options& o) {
  if (o.body.empty()) throw sb::InvalidInput("--body is required");
  return sb::read_body_file(o.body);
}

sb::Vector parse_vector(const std::string& text, int n, const char* what) {
  const auto m = sb::parse_matrix_csv(text, what);
  if (m.rows() != 1 || m.cols() != n) {
    throw sb::InvalidInput(std::string(what) + ": expected " + std::to_string(n) + " comma-separated numbers");
  }
  return m.row(0).transpose();
}

sb::Subspace load_subspace(const Options& o, int n) {
  if (o.subspace.rfind("random:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(o.subspace.substr(7));
    } catch (const std::exception&) {
      throw sb::InvalidInput("--subspace: expected random:<seed>");
    }
    return sb::sample_grassmannian(n, o.codim, 1, seed)[0];
  }
  auto h = sb::read_frame_csv(o.subspace);
  sb::require_dim(h.ambient_dim(), n, "--subspace frame");
  if (h.codim != o.codim) throw sb::InvalidInput("--subspace: frame dimension does not match --codim");
  return h;
}

/// Result text plus its run manifest (written next to --out).
struct Output {
  std::string text;
  Json manifest = Json::object();
  bool pass = true;
};

Json estimate_json(const sb::Estimate& e) { return sb::estimate_to_json(e); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json run_manifest(const std::vector<std::string>& args, const Options& o, const sb::QuadratureSpec& q) {
  Json inputs = Json::object();
  if (!o.body.empty()) inputs["body"] = o.body;
  if (!o.instance.empty()) inputs["instance"] = o.instance;
  if (!o.manifest.empty()) inputs["manifest"] = o.manifest;
  if (!o.input.empty()) inputs["input"] = o.input;
  return Json{{"command", args},
              {"inputs", inputs},
              {"quadrature", sb::quadrature_to_json(q)},
              {"master_seed", q.seed},
              {"output", o.out},
              {"format", o.format.empty() ? "default" : o.format},
              {"version", sb::kVersion}};
}

// ---- body -------------------------------------------------------------------

Json polar_spec(const Json& spec) {
  return Json{{"kind", "polar"}, {"dim", spec.at("dim")}, {"base", spec}};
}

Output cmd_body(const std::string& action, const Options& o, const sb::Executor* exec) {
  const sb::Body body = load_body(o);
  const auto q = quadrature(o, exec);
  Output out;
  if (action == "volume") {
    out.text = dump(estimate_json(sb::volume_polar(body, q)));
  } else if (action == "hitmiss") {
    out.text = dump(estimate_json(sb::mc_volume_hitmiss(body, q)));
  } else if (action == "gauge") {
    const auto x = parse_vector(o.point, body.dim(), "--point");
    out.text = sb::format_double(body.gauge(x)) + "\n";
  } else if (action == "support") {
    const auto x = parse_vector(o.direction, body.dim(), "--direction");
    out.text = sb::format_double(body.support(x)) + "\n";
  } else if (action == "polar") {
    const sb::Body pol = sb::polar(body);
    Json j{{"body", polar_spec(sb::read_json_file(o.body))}};
    if (auto v = pol.exact_volume()) {
      j["volume"] = estimate_json(sb::Estimate::exact(*v));
    } else {
      j["volume"] = estimate_json(sb::volume_polar(pol, q));
    }
    out.text = dump(j);
  } else if (action == "sample") {
    const sb::Matrix pts = sb::sample_interior(body, o.samples, o.seed, exec);
    out.text = sb::format_matrix_csv(pts.transpose());
  } else {
    throw sb::InvalidInput("body: unknown action '" + action + "'");
  }
  return out;
}

// ---- sections -----------------------------------------------------------------

Output cmd_section(bool radon, const Options& o, const sb::Executor* exec) {
  const sb::Body body = load_body(o);
  const int n = body.dim();
  if (o.codim < 1 || o.codim >= n) throw sb::InvalidInput("--codim must satisfy 1 <= codim < n");
  const auto h = load_subspace(o, n);
  const auto q = quadrature(o, exec);
  Json j;
  if (radon) {
    // R_{n-k}(||.||^{-(n-k)})(H), the section volume without the 1/(n-k).
    const int d = h.dim();
    j["radon"] = estimate_json(sb::radon_transform(
        [&](const sb::Vector& theta) { return std::pow(body.gauge_unchecked(theta), -d); }, h, q));
  } else {
    j["volume"] = estimate_json(sb::section_volume(body, h, q));
    if (!o.density.empty()) {
      const auto f = sb::density_from_json(sb::read_json_file(o.density), n, o.density);
      j["measure"] = estimate_json(sb::section_measure(body, f, h, q));
    }
  }
  j["frame"] = sb::format_matrix_csv(h.frame);
  Output out;
  out.text = dump(j);
  return out;
}

// ---- Z_p ------------------------------------------------------------------------

sb::EnclosureOptions enclosure_options(const Options& o, const sb::Executor* exec) {
  sb::EnclosureOptions e;
  e.cache_size = o.cache;
  e.panel_size = o.panel;
  e.seed = o.seed;
  e.volume_quadrature = quadrature(o, exec);
  e.exec = exec;
  return e;
}

Json enclosure_certificate(const sb::EnclosureResult& r, const Options& o) {
  return Json{{"inputs", {{"body", o.body}, {"p", r.p}, {"cache_size", r.cache_size}}},
              {"seed", r.seed},
              {"panel_size", r.panel_size},
              {"ratio", estimate_json(r.ratio)},
              {"normalized_ratio", estimate_json(r.normalized)},
              {"inclusion_worst_ratio", r.inclusion_worst},
              {"inclusion_tolerance", r.inclusion_tol},
              {"c0", r.c0},
              {"volume_K", estimate_json(r.volume_k)},
              {"volume_K_polar", estimate_json(r.volume_k_polar)},
              {"volume_Zp_polar", estimate_json(r.volume_zp_polar)},
              {"version", sb::kVersion}};
}

Output cmd_zp(const std::string& action, const Options& o, const sb::Executor* exec) {
  const sb::Body body = load_body(o);
  const auto opt = enclosure_options(o, exec);
  Output out;
  if (action == "enclose" || action == "dovr") {
    const auto r = sb::theorem3_enclosure(body, o.p, opt);
    if (action == "enclose") {
      out.text = dump(enclosure_certificate(r, o));
    } else {
      out.text = dump(Json{{"dovr_upper_bound", estimate_json(r.ratio)}, {"p", o.p}, {"seed", o.seed}});
    }
    return out;
  }
  // support / volume / bounds act on C itself, whose volume must be known.
  double volume = 1.0;
  if (auto v = body.exact_volume()) {
    volume = *v;
  } else {
    volume = sb::volume_polar(body, quadrature(o, exec)).value;
  }
  const auto cache = sb::make_zp_cache(body, o.cache, o.seed, exec, volume);
  const sb::ZpBody z(cache, o.p);
  if (action == "support") {
    const auto theta = parse_vector(o.direction, body.dim(), "--direction");
    out.text = dump(estimate_json(z.support(theta / theta.norm())));
  } else if (action == "volume") {
    const sb::Matrix dirs = sb::sample_sphere(body.dim(), o.panel, o.seed, sb::Scheme::monte_carlo, sb::Stream::panel);
    const auto v = sb::zp_polar_volume(z, dirs, exec);
    out.text = dump(Json{{"polar_volume", estimate_json(v.volume)},
                         {"direction_se", v.direction_se},
                         {"cache_se", v.cache_se}});
  } else if (action == "bounds") {
    const auto norm = sb::normalize_to_volume_one(body, quadrature(o, exec));
    const auto b = sb::bound_checks(norm.body, o.p, opt);
    Json j{{"p", o.p},
           {"n", b.n},
           {"inclusion_constant", estimate_json(b.incl_c)},
           {"lz", estimate_json(b.lz)},
           {"bm", estimate_json(b.bm)},
           {"isotropic_constant", estimate_json(b.isotropic)},
           {"zp_polar_volume", estimate_json(b.zp_polar_volume)}};
    if (b.km) j["km"] = estimate_json(*b.km);
    out.text = dump(j);
  } else {
    throw sb::InvalidInput("zp: unknown action '" + action + "'");
  }
  return out;
}

// ---- verify ---------------------------------------------------------------------

bool check_matches(const std::string& action, const std::string& check) {
  if (action == "thm1") return check == "theorem1";
  if (action == "thm2") return check == "theorem2";
  if (action == "sections") return check == "corollary_sections";
  if (action == "slicing") return check == "slicing";
  if (action == "isom") return check == "isomorphic_bp";
  if (action == "moments") return check == "moment_slicing";
  if (action == "mp") return check.rfind("mp_", 0) == 0;
  return false;
}

std::string format_rows(const std::vector<sb::VerificationReport>& rows, const std::string& format) {
  if (format == "csv") return sb::emit_report_csv(rows);
  Json arr = Json::array();
  for (const auto& r : rows) arr.push_back(sb::report_to_json(r));
  return dump(arr);
}

Output cmd_verify(const std::string& action, const Options& o, const sb::Executor* exec) {
  Output out;
  std::vector<sb::VerificationReport> rows;
  if (action == "suite") {
    if (o.manifest.empty()) throw sb::InvalidInput("--manifest is required");
    const auto m = sb::read_manifest_file(o.manifest);
    const auto res = sb::run_suite(m, exec);
    rows = res.rows();
    out.manifest["master_seed"] = m.master_seed;
    out.manifest["suite_quadrature"] = sb::quadrature_to_json(m.quadrature);
    out.text = format_rows(rows, o.format.empty() ? "csv" : o.format);
  } else {
    if (o.instance.empty()) throw sb::InvalidInput("--instance is required");
    const Json inst = sb::read_json_file(o.instance);
    const sb::detail::Fields f(inst, o.instance);
    if (!check_matches(action, f.string("check"))) {
      throw sb::InvalidInput(f.at("check") + ": '" + f.string("check") + "' does not belong to verify " + action);
    }
    sb::detail::InstanceContext ctx;
    auto dir = std::filesystem::path(o.instance).parent_path();
    ctx.base_dir = dir.empty() ? "." : dir.string();
    ctx.q = quadrature(o, exec);
    ctx.exec = exec;
    rows = sb::run_instance(inst, ctx, o.instance);
    out.text = format_rows(rows, o.format.empty() ? "json" : o.format);
  }
  for (const auto& r : rows) out.pass = out.pass && r.pass;
  return out;
}

// ---- report ---------------------------------------------------------------------

Output cmd_report(const std::string& action, const Options& o) {
  if (o.input.empty()) throw sb::InvalidInput("--in is required");
  Output out;
  if (action == "csv2json") {
    const auto rows = sb::parse_report_csv(sb::read_text_file(o.input));
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push_back(Json{{"name", r.name},
                         {"n", r.n},
                         {"k_or_p", r.k_or_p},
                         {"lhs", r.lhs.value},
                         {"lhs_se", r.lhs.std_error},
                         {"rhs", r.rhs.value},
                         {"rhs_se", r.rhs.std_error},
                         {"margin", r.margin},
                         {"pass", r.pass},
                         {"seed", r.seed}});
    }
    out.text = dump(arr);
    return out;
  }
  throw sb::InvalidInput("report: unknown action '" + action + "'");
}

int run(const std::vector<std::string>& args, const Options& o, const std::string& group, const std::string& action);

/// Re-executes the command stored in a run manifest and compares the result
/// bytes with the recorded output.
int replay(const Options& o) {
  if (o.input.empty()) throw sb::InvalidInput("--in is required");
  const Json m = sb::read_json_file(o.input);
  const sb::detail::Fields f(m, o.input);
  const std::string recorded_path = f.string("output");
  const std::string recorded = sb::read_text_file(recorded_path);
  std::vector<std::string> args = f.get("command").get<std::vector<std::string>>();
  const std::string fresh_path = recorded_path + ".replay";
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--out") args[i + 1] = fresh_path;
  }
  std::vector<const char*> argv{"starbody"};
  for (const auto& a : args) argv.push_back(a.c_str());
  const int code = cli_main(static_cast<int>(argv.size()), argv.data());
  if (code == kExitInvalid) return code;
  const std::string fresh = sb::read_text_file(fresh_path);
  std::filesystem::remove(fresh_path);
  std::filesystem::remove(fresh_path + ".manifest.json");
  const bool same = fresh == recorded;
  std::cout << (same ? "identical" : "differs") << "\n";
  return same ? kExitOk : kExitFail;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"starbody: star bodies, sections, Z_p bodies and comparison checks"};
  app.require_subcommand(1);
  Options o;

  auto add_quadrature = [&](CLI::App* c) {
    c->add_option("--samples", o.samples, "Directions (or interior samples)")->check(CLI::PositiveNumber);
    c->add_option("--radial-nodes", o.radial_nodes, "Gauss-Legendre nodes per ray")->check(CLI::PositiveNumber);
    c->add_option("--seed", o.seed, "Master seed");
    c->add_option("--scheme", o.scheme, "monte_carlo | antithetic_mc");
    c->add_option("--out", o.out, "Output file (a run manifest is written next to it)");
  };

  std::string action;
  auto* body = app.add_subcommand("body", "Single-body quantities");
  body->add_option("action", action, "volume | gauge | support | polar | sample | hitmiss")->required();
  body->add_option("--body", o.body, "Body JSON")->required();
  body->add_option("--point", o.point, "Point x1,...,xn (gauge)");
  body->add_option("--direction", o.direction, "Direction (support)");
  add_quadrature(body);

  auto* section = app.add_subcommand("section", "Central section volume |K cap H|");
  auto* radon = app.add_subcommand("radon", "Spherical Radon transform of ||.||^{-(n-k)}");
  for (auto* c : {section, radon}) {
    c->add_option("--body", o.body, "Body JSON")->required();
    c->add_option("--codim", o.codim, "Codimension k")->required();
    c->add_option("--subspace", o.subspace, "frame.csv or random:<seed>");
    add_quadrature(c);
  }
  section->add_option("--density", o.density, "Density JSON for mu(K cap H)");

  auto* zp = app.add_subcommand("zp", "Z_p bodies and the d_ovr enclosure");
  zp->add_option("action", action, "support | volume | enclose | dovr | bounds")->required();
  zp->add_option("--body", o.body, "Body JSON")->required();
  zp->add_option("--p", o.p, "Exponent p in [1, 64]")->required();
  zp->add_option("--direction", o.direction, "Direction (support)");
  zp->add_option("--cache", o.cache, "Interior samples in the Z_p cache")->check(CLI::PositiveNumber);
  zp->add_option("--panel", o.panel, "Direction panel size")->check(CLI::PositiveNumber);
  add_quadrature(zp);

  auto* verify = app.add_subcommand("verify", "Comparison theorems and identities");
  verify->add_option("action", action, "thm1 | thm2 | sections | slicing | isom | mp | moments | suite")->required();
  verify->add_option("--instance", o.instance, "Instance JSON");
  verify->add_option("--manifest", o.manifest, "Suite manifest JSON");
  verify->add_option("--format", o.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  add_quadrature(verify);

  auto* report = app.add_subcommand("report", "Report files");
  report->add_option("action", action, "csv2json | replay")->required();
  report->add_option("--in", o.input, "Report CSV or run manifest")->required();
  report->add_option("--out", o.out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  const std::string group = app.get_subcommands().front()->get_name();
  return run(args, o, group, action);
}

namespace {

int run(const std::vector<std::string>& args, const Options& o, const std::string& group, const std::string& action) {
  try {
    if (group == "report" && action == "replay") return replay(o);
    const sb::ThreadPool pool(worker_count());
    const sb::Executor* exec = &pool;
    Output out;
    if (group == "body") {
      out = cmd_body(action, o, exec);
    } else if (group == "section" || group == "radon") {
      out = cmd_section(group == "radon", o, exec);
    } else if (group == "zp") {
      out = cmd_zp(action, o, exec);
    } else if (group == "verify") {
      out = cmd_verify(action, o, exec);
    } else {
      out = cmd_report(action, o);
    }
    if (o.out.empty()) {
      std::cout << out.text;
    } else {
      sb::write_text_file(o.out, out.text);
      Json m = run_manifest(args, o, quadrature(o, nullptr));
      m.update(out.manifest);
      sb::write_text_file(o.out + ".manifest.json", dump(m));
    }
    return out.pass ? kExitOk : kExitFail;
  } catch (const sb::InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const sb::Unsupported& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const sb::NumericalFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitFail;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace

int main(int argc, char** argv) { return cli_main(argc, argv); }
