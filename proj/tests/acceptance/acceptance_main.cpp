// Runs the bundled default suite and prints one PASS/FAIL line per
// acceptance criterion. Exit status is nonzero if any criterion fails.
//
//   acceptance [manifest.json]

#include "starbody/io.hpp"
#include "starbody/parallel.hpp"
#include "starbody/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace sb = starbody;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail.clear();
    if (!detail.empty()) detail += "; ";
    detail += why;
    pass = false;
  }
};

using Runs = std::vector<const sb::InstanceRun*>;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

double total_seconds(const Runs& runs) {
  double s = 0.0;
  for (const auto* r : runs) s += r->seconds;
  return s;
}

void require_rows_pass(const Runs& runs, Verdict& v) {
  std::size_t failed = 0;
  std::string first;
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      if (!row.pass) {
        if (failed++ == 0) first = row.name;
      }
    }
  }
  if (failed != 0) v.fail(std::to_string(failed) + " failing rows, first " + first);
}

void require_count(const Runs& runs, std::size_t at_least, Verdict& v) {
  if (runs.size() < at_least) v.fail("only " + std::to_string(runs.size()) + " instances");
}

void require_time(double seconds, double limit, const std::string& what, Verdict& v) {
  if (seconds >= limit) v.fail(what + " took " + num(seconds) + " s (limit " + num(limit) + " s)");
}

// rhs/lhs against an exact factor, within 3 SE of the ratio.
void require_factor(const sb::VerificationReport& row, double factor, Verdict& v, double& worst_sigma) {
  const double ratio = row.rhs.value / row.lhs.value;
  const double rel = std::abs(row.lhs.std_error / row.lhs.value) + std::abs(row.rhs.std_error / row.rhs.value);
  // Rounding-level spread of constant integrands counts as exact.
  const double se = rel <= sb::kExactTol ? 0.0 : ratio * rel;
  const double tol = std::max(3.0 * se, 1e-9 * factor);
  const double dev = std::abs(ratio - factor);
  worst_sigma = std::max(worst_sigma, se > 0.0 ? dev / se : 0.0);
  if (!(dev <= tol)) v.fail(row.name + " factor " + num(ratio) + " vs " + num(factor));
}

Verdict volume_anchors(const Runs& runs) {
  Verdict v;
  require_count(runs, 1, v);
  require_rows_pass(runs, v);
  double slowest = 0.0;
  for (const auto* r : runs) slowest = std::max(slowest, r->seconds);
  require_time(slowest, 30.0, "slowest body", v);
  if (v.pass) v.detail = std::to_string(runs.size()) + " bodies, slowest " + num(slowest) + " s";
  return v;
}

Verdict all_rows(const Runs& runs, std::size_t at_least) {
  Verdict v;
  require_count(runs, at_least, v);
  require_rows_pass(runs, v);
  std::size_t rows = 0;
  for (const auto* r : runs) rows += r->rows.size();
  if (v.pass) v.detail = std::to_string(runs.size()) + " instances, " + std::to_string(rows) + " rows";
  return v;
}

Verdict cnk(const Runs& runs) {
  Verdict v = all_rows(runs, 2);
  require_time(total_seconds(runs), 1.0, "c_{n,k} checks", v);
  return v;
}

Verdict radon_anchors(const Runs& runs) {
  Verdict v;
  require_count(runs, 1, v);
  double worst = 0.0;
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      const double se = sb::combined_se(row.lhs, row.rhs);
      const double dev = std::abs(row.lhs.value - row.rhs.value);
      const double tol = std::max(2.0 * se, 1e-9 * std::abs(row.rhs.value));
      worst = std::max(worst, dev / std::abs(row.rhs.value));
      if (!(dev <= tol)) v.fail(row.name + " off by " + num(dev) + " (2 SE = " + num(2.0 * se) + ")");
    }
  }
  if (v.pass) v.detail = std::to_string(runs.size()) + " instances within 2 SE, worst rel. dev " + num(worst);
  return v;
}

Verdict sections(const Runs& runs) {
  Verdict v;
  require_count(runs, 12, v);
  require_rows_pass(runs, v);
  double min_margin = std::numeric_limits<double>::infinity();
  double worst_sigma = 0.0;
  std::size_t equal = 0;
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      min_margin = std::min(min_margin, row.margin);
      if (row.margin < 0.0) v.fail(row.name + " margin " + num(row.margin));
      if (contains(row.name, "/equal/")) {
        ++equal;
        require_factor(row, row.n / (row.n - row.k_or_p), v, worst_sigma);
      }
    }
  }
  if (equal == 0) v.fail("no equality instances");
  require_time(total_seconds(runs), 600.0, "section suite", v);
  if (v.pass) {
    v.detail = std::to_string(runs.size()) + " instances, min margin " + num(min_margin) + ", " +
               std::to_string(equal) + " equality factors within " + num(worst_sigma) + " SE, " +
               num(total_seconds(runs)) + " s";
  }
  return v;
}

Verdict moments(const Runs& runs) {
  Verdict v;
  require_rows_pass(runs, v);
  std::size_t thm2 = 0;
  std::size_t equal = 0;
  double worst_sigma = 0.0;
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      if (row.check == "theorem2") ++thm2;
      if (contains(row.name, "/equal/")) {
        ++equal;
        require_factor(row, (row.n + row.k_or_p) / row.n, v, worst_sigma);
      }
    }
  }
  if (thm2 < 8) v.fail("only " + std::to_string(thm2) + " moment instances");
  if (equal == 0) v.fail("no equality instances");
  if (v.pass) {
    v.detail = std::to_string(thm2) + " moment instances, " + std::to_string(equal) + " equality factors within " +
               num(worst_sigma) + " SE";
  }
  return v;
}

Verdict enclosure(const Runs& runs) {
  Verdict v;
  require_rows_pass(runs, v);
  double max_norm = 0.0;
  double worst_inclusion = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
  std::string argmax;
  std::size_t sweep = 0;
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      if (row.check == "theorem3_inclusion") worst_inclusion = std::max(worst_inclusion, row.lhs.value);
      if (row.check == "theorem3_ratio") {
        ++sweep;
        threshold = std::min(threshold, row.rhs.value);
        if (row.lhs.value > max_norm) {
          max_norm = row.lhs.value;
          argmax = row.name;
        }
      }
    }
  }
  if (sweep == 0) v.fail("no sweep rows");
  if (!std::isfinite(threshold)) v.fail("no pinned ratio threshold");
  require_time(total_seconds(runs), 1800.0, "enclosure sweep", v);
  if (v.pass) {
    v.detail = std::to_string(sweep) + " sweep rows, max normalized ratio " + num(max_norm) + " at " + argmax +
               " (threshold " + num(threshold) + "), worst inclusion " + num(worst_inclusion) + ", " +
               num(total_seconds(runs)) + " s";
  }
  return v;
}

Verdict bm1(const Runs& runs) {
  Verdict v = all_rows(runs, 1);
  double min_c0 = std::numeric_limits<double>::infinity();
  for (const auto* run : runs) {
    for (const auto& row : run->rows) {
      if (row.check == "bm1_c0") min_c0 = std::min({min_c0, row.lhs.value, row.rhs.value});
    }
  }
  if (!(min_c0 > 0.0)) v.fail("c0 not positive");
  if (v.pass) v.detail += ", min c0 " + num(min_c0);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : std::string(STARBODY_DATA_DIR) + "/default_suite.json";
  try {
    const auto manifest = sb::read_manifest_file(path);

    const sb::ThreadPool one(1);
    const auto result = sb::run_suite(manifest, &one);

    std::map<int, Runs> by_criterion;
    for (const auto& run : result.runs) by_criterion[run.criterion].push_back(&run);

    const std::vector<std::pair<std::string, std::function<Verdict(const Runs&)>>> criteria = {
        {"volume anchors", volume_anchors},
        {"Milman-Pajor identities", [](const Runs& r) { return all_rows(r, 4); }},
        {"c_{n,k} bounds", cnk},
        {"Radon anchors", radon_anchors},
        {"section comparison suite", sections},
        {"moment comparison suite", moments},
        {"d_ovr enclosure sweep", enclosure},
        {"Z_p anchors", [](const Runs& r) { return all_rows(r, 3); }},
        {"p >= n inclusion regime", bm1},
    };

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
      const int id = static_cast<int>(i) + 1;
      const Verdict v = criteria[i].second(by_criterion[id]);
      all = all && v.pass;
      std::printf("criterion %2d  %s  %s: %s\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                  v.detail.c_str());
      std::fflush(stdout);
    }

    const std::size_t workers = std::max(2U, std::thread::hardware_concurrency());
    const sb::ThreadPool many(workers);
    const auto again = sb::run_suite(manifest, &many);
    const std::string a = sb::emit_report_csv(result.rows());
    const std::string b = sb::emit_report_csv(again.rows());
    Verdict det;
    if (a != b) {
      det.fail("CSV differs between 1 and " + std::to_string(workers) + " workers");
    } else {
      det.detail = std::to_string(a.size()) + " bytes identical with 1 and " + std::to_string(workers) + " workers";
    }
    all = all && det.pass;
    std::printf("criterion 10  %s  determinism: %s\n", det.pass ? "PASS" : "FAIL", det.detail.c_str());
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance: %s\n", e.what());
    return 2;
  }
}
