#pragma once

#include "starbody/core.hpp"
#include "starbody/special.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace starbody {

// Brute-force vertex enumeration for { x : <a_i, x> <= 1 } at desk scale.
// Every n-subset of constraints is solved; feasible solutions are deduplicated.

inline constexpr int kMaxPolytopeDim = 8;
inline constexpr double kMaxEnumerationSubsets = 5e6;

struct VertexEnumeration {
  Matrix vertices;                          // n x V
  std::vector<std::vector<int>> tight_rows;  // per vertex, sorted row indices
};

namespace detail {

inline bool columns_symmetric(const Matrix& cols, double tol = 1e-12) {
  const Eigen::Index m = cols.cols();
  for (Eigen::Index i = 0; i < m; ++i) {
    const double scale = std::max(1.0, cols.col(i).cwiseAbs().maxCoeff());
    bool found = false;
    for (Eigen::Index j = 0; j < m && !found; ++j) {
      found = (cols.col(i) + cols.col(j)).cwiseAbs().maxCoeff() <= tol * scale;
    }
    if (!found) return false;
  }
  return true;
}

/// Column set invariant under every coordinate reflection.
inline bool columns_unconditional(const Matrix& cols, double tol = 1e-12) {
  const Eigen::Index m = cols.cols();
  for (Eigen::Index c = 0; c < cols.rows(); ++c) {
    for (Eigen::Index i = 0; i < m; ++i) {
      Vector flipped = cols.col(i);
      flipped[c] = -flipped[c];
      const double scale = std::max(1.0, flipped.cwiseAbs().maxCoeff());
      bool found = false;
      for (Eigen::Index j = 0; j < m && !found; ++j) {
        found = (cols.col(j) - flipped).cwiseAbs().maxCoeff() <= tol * scale;
      }
      if (!found) return false;
    }
  }
  return true;
}

}  // namespace detail

/// `normals` is n x m, one constraint <a_i, x> <= 1 per column.
inline VertexEnumeration enumerate_vertices(const Matrix& normals, const std::string& what) {
  const auto n = static_cast<int>(normals.rows());
  const auto m = static_cast<int>(normals.cols());
  require(n >= 1, what + ": empty dimension");
  if (n > kMaxPolytopeDim) {
    throw InvalidInput(what + ": vertex/facet conversion is limited to n <= " + std::to_string(kMaxPolytopeDim));
  }
  require(m >= n + 1, what + ": need at least n+1 constraints for a bounded polytope");

  Eigen::FullPivLU<Matrix> rank_lu(normals);
  if (rank_lu.rank() < n) throw InvalidInput(what + ": constraints do not span R^n (unbounded)");

  // Unbounded sets are detected by truncating with a far-away box and looking
  // for vertices on it. Symmetric systems of full rank are always bounded.
  const bool symmetric = detail::columns_symmetric(normals);
  Matrix rows = normals;
  int n_box = 0;
  if (!symmetric) {
    constexpr double kFar = 1e8;
    n_box = 2 * n;
    rows.conservativeResize(n, m + n_box);
    rows.rightCols(n_box).setZero();
    for (int c = 0; c < n; ++c) {
      rows(c, m + 2 * c) = 1.0 / kFar;
      rows(c, m + 2 * c + 1) = -1.0 / kFar;
    }
  }
  const int total = m + n_box;
  if (binomial(total, n) > kMaxEnumerationSubsets) {
    throw InvalidInput(what + ": too many constraint subsets for brute-force enumeration");
  }

  const double scale = normals.cwiseAbs().maxCoeff();
  std::vector<Vector> found;
  std::vector<std::vector<int>> tight;
  Matrix sub(n, n);
  Vector rhs(n);
  for_each_combination(total, n, [&](const std::vector<int>& idx) {
    // Rows are normalized so the conditioning test is scale-free.
    for (int r = 0; r < n; ++r) {
      const double len = rows.col(idx[r]).norm();
      sub.row(r) = rows.col(idx[r]).transpose() / len;
      rhs[r] = 1.0 / len;
    }
    Eigen::PartialPivLU<Matrix> lu(sub);
    if (!(std::abs(lu.determinant()) > 1e-10)) return;
    const Vector y = lu.solve(rhs);
    if (!y.allFinite()) return;
    const Vector slack = rows.transpose() * y;
    const double ytol = 1e-9 * std::max(1.0, scale * y.cwiseAbs().maxCoeff());
    if (slack.maxCoeff() > 1.0 + ytol) return;
    const double ymax = std::max(1.0, y.cwiseAbs().maxCoeff());
    bool dup = false;
    for (const auto& v : found) {
      if ((v - y).cwiseAbs().maxCoeff() <= 1e-9 * ymax) {
        dup = true;
        break;
      }
    }
    if (dup) return;
    std::vector<int> t;
    for (int i = 0; i < total; ++i) {
      if (std::abs(slack[i] - 1.0) <= ytol) t.push_back(i);
    }
    found.push_back(y);
    tight.push_back(std::move(t));
  });

  VertexEnumeration out;
  out.vertices.resize(n, static_cast<Eigen::Index>(found.size()));
  for (std::size_t i = 0; i < found.size(); ++i) {
    for (int t : tight[i]) {
      if (t >= m) throw InvalidInput(what + ": polytope is unbounded (origin not interior to the dual)");
    }
    out.vertices.col(static_cast<Eigen::Index>(i)) = found[i];
  }
  out.tight_rows = std::move(tight);
  if (found.empty()) throw InvalidInput(what + ": no vertices found");
  return out;
}

}  // namespace starbody
