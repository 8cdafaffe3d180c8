#pragma once

#include "starbody/body.hpp"
#include "starbody/density.hpp"
#include "starbody/estimate.hpp"
#include "starbody/quadrature.hpp"
#include "starbody/rng.hpp"
#include "starbody/verify.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace starbody {

// ---- numbers --------------------------------------------------------------

/// Shortest round-trip, locale-independent text for a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidInput(what + ": not a number: '" + s + "'");
  return v;
}

// ---- JSON files -----------------------------------------------------------

/// Parses JSON text; syntax errors report line and column.
inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InvalidInput(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput(path + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

namespace detail {

/// Typed field access with the JSON path in every error message.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidInput(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string at(const char* key) const { return path_ + "." + key; }

  const Json& get(const char* key) const {
    if (!j_.contains(key)) throw InvalidInput(at(key) + ": missing field");
    return j_.at(key);
  }

  double number(const char* key) const {
    const Json& v = get(key);
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) throw InvalidInput(at(key) + ": expected a number");
    return v.get<double>();
  }

  double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const char* key) const {
    const Json& v = get(key);
    if (!v.is_number_integer()) throw InvalidInput(at(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }

  std::int64_t integer_or(const char* key, std::int64_t fallback) const { return has(key) ? integer(key) : fallback; }

  std::uint64_t unsigned_or(const char* key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = get(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw InvalidInput(at(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const char* key) const {
    const Json& v = get(key);
    if (!v.is_string()) throw InvalidInput(at(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::string string_or(const char* key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

  bool boolean(const char* key) const {
    const Json& v = get(key);
    if (!v.is_boolean()) throw InvalidInput(at(key) + ": expected true or false");
    return v.get<bool>();
  }

  Vector vector(const char* key) const {
    const Json& v = get(key);
    if (!v.is_array() || v.empty()) throw InvalidInput(at(key) + ": expected a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw InvalidInput(at(key) + "[" + std::to_string(i) + "]: expected a number");
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  /// Array of equal-length rows.
  Matrix matrix(const char* key) const {
    const Json& v = get(key);
    if (!v.is_array() || v.empty()) throw InvalidInput(at(key) + ": expected a non-empty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) throw InvalidInput(at(key) + "[0]: expected a non-empty row");
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
      const std::string row_path = at(key) + "[" + std::to_string(r) + "]";
      if (!v[r].is_array() || v[r].size() != cols) throw InvalidInput(row_path + ": rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c) {
        if (!v[r][c].is_number()) throw InvalidInput(row_path + "[" + std::to_string(c) + "]: expected a number");
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r][c].get<double>();
      }
    }
    return out;
  }

  const std::string& path() const { return path_; }

 private:
  const Json& j_;
  std::string path_;
};

inline void check_dim(const Fields& f, int got, int declared) {
  if (got != declared) {
    throw InvalidInput(f.at("dim") + ": declared " + std::to_string(declared) + " but the data has dimension " +
                       std::to_string(got));
  }
}

}  // namespace detail

// ---- bodies ---------------------------------------------------------------

/// Symmetric H-polytope { |<a_i, x>| <= 1 } with `pairs` Gaussian rows a_i.
inline Body random_symmetric_polytope(int n, int pairs, std::uint64_t seed) {
  require(pairs >= n, "random polytope: need at least n facet pairs");
  auto eng = make_engine(seed, Stream::instance, 0);
  std::normal_distribution<double> normal;
  Matrix a(2 * pairs, n);
  while (true) {
    for (int i = 0; i < pairs; ++i) {
      for (int c = 0; c < n; ++c) a(i, c) = normal(eng);
      a.row(pairs + i) = -a.row(i);
    }
    if (Eigen::FullPivLU<Matrix>(a).rank() == n) break;
  }
  return Body::polytope_h(a, Vector::Ones(2 * pairs));
}

/// Body from its JSON description; `path` prefixes error messages.
inline Body body_from_json(const Json& j, const std::string& path = "body") {
  const detail::Fields f(j, path);
  const std::string kind = f.string("kind");
  const int n = static_cast<int>(f.integer("dim"));
  if (n < 1) throw InvalidInput(f.at("dim") + ": must be positive");
  auto build = [&]() -> Body {
    if (kind == "lp_ball") {
      return Body::lp_ball(n, f.number("p"), f.number_or("radius", 1.0));
    }
    if (kind == "ball") return Body::ball(n, f.number_or("radius", 1.0));
    if (kind == "cube") return Body::cube(n, f.number_or("radius", 1.0));
    if (kind == "ellipsoid") {
      if (f.has("semi_axes")) {
        const Vector axes = f.vector("semi_axes");
        detail::check_dim(f, static_cast<int>(axes.size()), n);
        return Body::ellipsoid(axes);
      }
      const Matrix q = f.matrix("matrix");
      detail::check_dim(f, static_cast<int>(q.rows()), n);
      return Body::ellipsoid_matrix(q);
    }
    if (kind == "polytope_h") {
      const Matrix a = f.matrix("A");
      detail::check_dim(f, static_cast<int>(a.cols()), n);
      const Vector b = f.has("b") ? f.vector("b") : Vector::Ones(a.rows());
      return Body::polytope_h(a, b);
    }
    if (kind == "polytope_v") {
      const Matrix v = f.matrix("vertices");  // one vertex per row
      detail::check_dim(f, static_cast<int>(v.cols()), n);
      return Body::polytope_v(v.transpose());
    }
    if (kind == "linear_image") {
      const Body base = body_from_json(f.get("base"), f.at("base"));
      const Matrix t = f.matrix("T");
      detail::check_dim(f, static_cast<int>(t.rows()), n);
      detail::check_dim(f, base.dim(), n);
      return linear_image(base, t);
    }
    if (kind == "scaled") {
      const Body base = body_from_json(f.get("base"), f.at("base"));
      detail::check_dim(f, base.dim(), n);
      return scale(base, f.number("factor"));
    }
    if (kind == "polar") {
      const Body base = body_from_json(f.get("base"), f.at("base"));
      detail::check_dim(f, base.dim(), n);
      return polar(base);
    }
    if (kind == "random_polytope") {
      return random_symmetric_polytope(n, static_cast<int>(f.integer("pairs")), f.unsigned_or("seed", 0));
    }
    throw InvalidInput(f.at("kind") + ": unknown body kind '" + kind + "'");
  };
  Body body = [&]() {
    try {
      return build();
    } catch (const InvalidInput& e) {
      const std::string msg = e.what();
      if (msg.rfind(path, 0) == 0) throw;
      throw InvalidInput(path + ": " + msg);
    }
  }();
  if (f.has("flags")) {
    const detail::Fields fl(f.get("flags"), f.at("flags"));
    auto check = [&](const char* key, bool detected) {
      if (fl.has(key) && fl.boolean(key) != detected) {
        throw InvalidInput(fl.at(key) + ": declared " + (detected ? "false" : "true") + " but the body is " +
                           (detected ? "" : "not ") + key);
      }
    };
    check("symmetric", body.flags().symmetric);
    check("convex", body.flags().convex);
    check("unconditional", body.flags().unconditional);
  }
  return body;
}

inline Body read_body_file(const std::string& path) { return body_from_json(read_json_file(path), path); }

// ---- densities ------------------------------------------------------------

inline Density density_from_json(const Json& j, int n, const std::string& path = "density") {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "uniform") return Density::uniform(n);
    if (s == "gaussian") return Density::gaussian(n, 1.0);
    throw InvalidInput(path + ": unknown density '" + s + "'");
  }
  const detail::Fields f(j, path);
  const std::string kind = f.string("kind");
  if (kind == "uniform") return Density::uniform(n);
  if (kind == "gaussian") {
    if (f.has("covariance")) {
      const Matrix c = f.matrix("covariance");
      if (c.rows() != n) throw InvalidInput(f.at("covariance") + ": dimension mismatch");
      return Density::gaussian(c);
    }
    const double sigma = f.number_or("sigma", 1.0);
    if (!(sigma > 0.0)) throw InvalidInput(f.at("sigma") + ": must be positive");
    return Density::gaussian(n, sigma);
  }
  throw InvalidInput(f.at("kind") + ": unknown density kind '" + kind + "'");
}

// ---- estimates and quadrature ---------------------------------------------

inline Json estimate_to_json(const Estimate& e) { return Json{{"value", e.value}, {"se", e.std_error}, {"n", e.n_samples}}; }

inline Estimate estimate_from_json(const Json& j, const std::string& path = "estimate") {
  const detail::Fields f(j, path);
  return {f.number("value"), f.number("se"), f.integer("n")};
}

inline Json quadrature_to_json(const QuadratureSpec& q) {
  return Json{{"n_directions", q.n_directions},
              {"n_radial", q.n_radial},
              {"n_interior", q.n_interior},
              {"seed", q.seed},
              {"scheme", to_string(q.scheme)}};
}

/// Overrides fields of `base` present in `j`.
inline QuadratureSpec quadrature_from_json(const Json& j, QuadratureSpec base, const std::string& path = "quadrature") {
  const detail::Fields f(j, path);
  base.n_directions = f.integer_or("n_directions", base.n_directions);
  base.n_radial = static_cast<int>(f.integer_or("n_radial", base.n_radial));
  base.n_interior = f.integer_or("n_interior", base.n_interior);
  base.seed = f.unsigned_or("seed", base.seed);
  if (f.has("scheme")) base.scheme = scheme_from_string(f.string("scheme"));
  try {
    base.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  return base;
}

// ---- reports --------------------------------------------------------------

inline Json report_to_json(const VerificationReport& r) {
  Json measured = Json::object();
  for (const auto& [k, v] : r.measured) measured[k] = v;
  return Json{{"name", r.name},
              {"check", r.check},
              {"n", r.n},
              {"k_or_p", r.k_or_p},
              {"lhs", estimate_to_json(r.lhs)},
              {"rhs", estimate_to_json(r.rhs)},
              {"relation", to_string(r.relation)},
              {"margin", r.margin},
              {"pass", r.pass},
              {"seed", r.seed},
              {"inputs", r.inputs},
              {"evidence", r.evidence},
              {"measured", measured},
              {"notes", r.notes},
              {"version", kVersion}};
}

inline constexpr const char* kReportCsvHeader = "name,n,k_or_p,lhs,lhs_se,rhs,rhs_se,margin,pass,seed";

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw InvalidInput("csv line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline std::string report_csv_row(const VerificationReport& r) {
  std::string row = detail::csv_field(r.name);
  row += "," + std::to_string(r.n);
  row += "," + format_double(r.k_or_p);
  row += "," + format_double(r.lhs.value);
  row += "," + format_double(r.lhs.std_error);
  row += "," + format_double(r.rhs.value);
  row += "," + format_double(r.rhs.std_error);
  row += "," + format_double(r.margin);
  row += r.pass ? ",true" : ",false";
  row += "," + std::to_string(r.seed);
  return row;
}

/// CSV with the fixed header; an empty list gives the header alone.
inline std::string emit_report_csv(const std::vector<VerificationReport>& reports) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (const auto& r : reports) out += report_csv_row(r) + "\n";
  return out;
}

/// Inverse of emit_report_csv on the CSV columns (sample counts and
/// provenance are not part of the CSV).
inline std::vector<VerificationReport> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw InvalidInput("csv line 1: unexpected header");
  std::vector<VerificationReport> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line, line_no);
    const std::string where = "csv line " + std::to_string(line_no);
    if (cells.size() != 10) throw InvalidInput(where + ": expected 10 columns");
    VerificationReport r;
    r.name = cells[0];
    r.n = static_cast<int>(parse_double(cells[1], where + " n"));
    r.k_or_p = parse_double(cells[2], where + " k_or_p");
    r.lhs.value = parse_double(cells[3], where + " lhs");
    r.lhs.std_error = parse_double(cells[4], where + " lhs_se");
    r.rhs.value = parse_double(cells[5], where + " rhs");
    r.rhs.std_error = parse_double(cells[6], where + " rhs_se");
    r.margin = parse_double(cells[7], where + " margin");
    if (cells[8] != "true" && cells[8] != "false") throw InvalidInput(where + ": pass must be true or false");
    r.pass = cells[8] == "true";
    std::uint64_t seed = 0;
    const auto res = std::from_chars(cells[9].data(), cells[9].data() + cells[9].size(), seed);
    if (res.ec != std::errc() || res.ptr != cells[9].data() + cells[9].size()) {
      throw InvalidInput(where + ": seed must be an unsigned integer");
    }
    r.seed = seed;
    out.push_back(std::move(r));
  }
  return out;
}

// ---- frames ---------------------------------------------------------------

/// n rows of (n-k) comma-separated numbers.
inline Matrix parse_matrix_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    for (const auto& cell : detail::split_csv_line(line, line_no)) {
      row.push_back(parse_double(cell, origin + ":" + std::to_string(line_no)));
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw InvalidInput(origin + ":" + std::to_string(line_no) + ": rows must have equal length");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(origin + ": empty matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

inline std::string format_matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ",";
      out += format_double(m(r, c));
    }
    out += "\n";
  }
  return out;
}

inline Subspace read_frame_csv(const std::string& path) {
  return Subspace::from_frame(parse_matrix_csv(read_text_file(path), path), 1e-12);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput(path + ": cannot open for writing");
  out << text;
  if (!out) throw InvalidInput(path + ": write failed");
}

}  // namespace starbody
