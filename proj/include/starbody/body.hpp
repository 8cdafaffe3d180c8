#pragma once

#include "starbody/core.hpp"
#include "starbody/polytope.hpp"
#include "starbody/special.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace starbody {

struct BodyFlags {
  bool symmetric = true;
  bool convex = true;
  bool unconditional = false;
  friend bool operator==(const BodyFlags&, const BodyFlags&) = default;
};

/// Pointwise support function of some convex body. A body whose gauge is this
/// function is the polar of that body.
class SupportEvaluator {
 public:
  virtual ~SupportEvaluator() = default;
  virtual double operator()(const Vector& theta) const = 0;
  virtual std::string describe() const = 0;
};

class Body;
using BodyPtr = std::shared_ptr<const Body>;

namespace kinds {

/// { x : ||x||_p <= radius }; p = inf is the cube of half-width `radius`.
struct LpBall {
  double p;
  double radius;
};

/// { x : x' Q^{-1} x <= 1 } with Q = factor * factor'.
struct Ellipsoid {
  Matrix shape;
  Matrix shape_inv;
  Matrix factor;
};

/// { x : <a_i, x> <= 1 }, normals stored as columns; vertices enumerated once.
struct PolytopeH {
  Matrix normals;
  Matrix vertices;
  std::vector<std::vector<int>> vertex_rows;
};

/// conv(vertices); facets { <y_j, x> <= 1 } are the vertices of the polar.
struct PolytopeV {
  Matrix vertices;
  Matrix facets;
  std::vector<std::vector<int>> facet_vertices;
  bool simplicial = false;
  std::vector<double> cone_volumes;  // |conv(0, facet)| when simplicial
};

struct LinearImage {
  BodyPtr base;
  Matrix map;
  Matrix inverse;
  double abs_det;
};

struct Scaled {
  BodyPtr base;
  double factor;
};

struct SupportDefined {
  std::shared_ptr<const SupportEvaluator> support;
};

}  // namespace kinds

/// Star body with evaluable gauge. Immutable after construction; safe to share
/// between threads.
class Body {
 public:
  using Kind = std::variant<kinds::LpBall, kinds::Ellipsoid, kinds::PolytopeH, kinds::PolytopeV,
                            kinds::LinearImage, kinds::Scaled, kinds::SupportDefined>;

  // ---- construction ------------------------------------------------------

  static Body lp_ball(int n, double p, double radius = 1.0) {
    require(n >= 1, "lp_ball: dimension must be positive");
    require(p > 0.0, "lp_ball: p must be positive");
    require(radius > 0.0, "lp_ball: radius must be positive");
    Body b(n, kinds::LpBall{p, radius});
    b.flags_ = {true, p >= 1.0, true};
    // Extreme radii sit on the axes and on the diagonal.
    const double diag = std::isinf(p) ? std::sqrt(static_cast<double>(n)) : std::pow(n, 0.5 - 1.0 / p);
    b.inner_radius_ = radius * std::min(1.0, diag);
    b.outer_radius_ = radius * std::max(1.0, diag);
    return b;
  }

  static Body ball(int n, double radius = 1.0) { return lp_ball(n, 2.0, radius); }

  static Body cube(int n, double half_width = 1.0) {
    return lp_ball(n, std::numeric_limits<double>::infinity(), half_width);
  }

  static Body ellipsoid(const Vector& semi_axes) {
    require(semi_axes.size() >= 1 && semi_axes.minCoeff() > 0.0, "ellipsoid: semi-axes must be positive");
    Matrix q = semi_axes.array().square().matrix().asDiagonal();
    return ellipsoid_matrix(q);
  }

  /// Q positive definite; the body is { x : x' Q^{-1} x <= 1 }.
  static Body ellipsoid_matrix(const Matrix& q) {
    const auto n = static_cast<int>(q.rows());
    require(n >= 1 && q.cols() == n, "ellipsoid: matrix must be square");
    require((q - q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff()),
            "ellipsoid: matrix must be symmetric");
    Eigen::LLT<Matrix> llt(q);
    require(llt.info() == Eigen::Success, "ellipsoid: matrix must be positive definite");
    Matrix factor = llt.matrixL();
    Matrix inv = llt.solve(Matrix::Identity(n, n));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
    Body b(n, kinds::Ellipsoid{q, inv, factor});
    const Matrix off = q - Matrix(q.diagonal().asDiagonal());
    b.flags_ = {true, true, off.cwiseAbs().maxCoeff() == 0.0};
    b.inner_radius_ = std::sqrt(eig.eigenvalues().minCoeff());
    b.outer_radius_ = std::sqrt(eig.eigenvalues().maxCoeff());
    return b;
  }

  /// { x : A x <= b } with b > 0 (origin interior).
  static Body polytope_h(const Matrix& a, const Vector& offsets) {
    require(a.rows() == offsets.size(), "polytope_h: A rows and b length differ");
    require(a.rows() >= 1 && offsets.minCoeff() > 0.0, "polytope_h: offsets must be positive (origin interior)");
    Matrix normals = a.transpose();
    for (Eigen::Index i = 0; i < normals.cols(); ++i) normals.col(i) /= offsets[i];
    auto en = enumerate_vertices(normals, "polytope_h");
    return from_h(normals, std::move(en));
  }

  /// conv(vertices), vertices given as columns; origin must be interior.
  static Body polytope_v(const Matrix& vertices) {
    require(vertices.cols() >= 1, "polytope_v: no vertices");
    auto en = enumerate_vertices(vertices, "polytope_v");
    return from_v(vertices, std::move(en));
  }

  /// Body whose gauge is `support` (the polar of the body with that support
  /// function). Radii are declared by the caller.
  static Body support_defined(int n, std::shared_ptr<const SupportEvaluator> support, BodyFlags flags,
                              double inner_radius, double outer_radius) {
    require(static_cast<bool>(support), "support_defined: empty evaluator");
    require(inner_radius > 0.0 && outer_radius >= inner_radius, "support_defined: invalid radii");
    Body b(n, kinds::SupportDefined{std::move(support)});
    b.flags_ = flags;
    b.flags_.convex = true;
    b.inner_radius_ = inner_radius;
    b.outer_radius_ = outer_radius;
    return b;
  }

  // ---- accessors ---------------------------------------------------------

  int dim() const { return dim_; }
  const BodyFlags& flags() const { return flags_; }
  const Kind& kind() const { return kind_; }
  double inner_radius() const { return inner_radius_; }
  double outer_radius() const { return outer_radius_; }

  template <class K>
  const K* as() const {
    return std::get_if<K>(&kind_);
  }

  std::string kind_name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kinds::LpBall>) return "lp_ball";
          if constexpr (std::is_same_v<K, kinds::Ellipsoid>) return "ellipsoid";
          if constexpr (std::is_same_v<K, kinds::PolytopeH>) return "polytope_h";
          if constexpr (std::is_same_v<K, kinds::PolytopeV>) return "polytope_v";
          if constexpr (std::is_same_v<K, kinds::LinearImage>) return "linear_image";
          if constexpr (std::is_same_v<K, kinds::Scaled>) return "scaled";
          return "support_defined";
        },
        kind_);
  }

  /// True when the body (and every base it wraps) has an exact polar kind.
  bool has_exact_polar() const {
    if (const auto* li = as<kinds::LinearImage>()) return li->base->has_exact_polar();
    if (const auto* sc = as<kinds::Scaled>()) return sc->base->has_exact_polar();
    if (as<kinds::SupportDefined>() != nullptr) return false;
    return flags_.convex;
  }

  // ---- evaluation --------------------------------------------------------

  /// Minkowski functional ||x||_K = min{a >= 0 : x in aK}.
  double gauge(const Vector& x) const {
    require_dim(x.size(), dim_, "gauge");
    return gauge_unchecked(x);
  }

  /// Radial function 1 / ||theta||_K.
  double radial(const Vector& theta) const { return 1.0 / gauge(theta); }

  /// h_K(theta) = max over K of <x, theta>.
  double support(const Vector& theta) const {
    require_dim(theta.size(), dim_, "support");
    return support_unchecked(theta);
  }

  /// Exact volume when the kind admits a closed form.
  std::optional<double> exact_volume() const {
    return std::visit(
        [&](const auto& k) -> std::optional<double> {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kinds::LpBall>) {
            return lp_ball_volume(k.p, dim_) * std::pow(k.radius, dim_);
          } else if constexpr (std::is_same_v<K, kinds::Ellipsoid>) {
            return unit_ball_volume(dim_) * k.factor.diagonal().prod();
          } else if constexpr (std::is_same_v<K, kinds::PolytopeV>) {
            if (!k.simplicial) return std::nullopt;
            double v = 0.0;
            for (double c : k.cone_volumes) v += c;
            return v;
          } else if constexpr (std::is_same_v<K, kinds::LinearImage>) {
            auto base = k.base->exact_volume();
            if (!base) return std::nullopt;
            return *base * k.abs_det;
          } else if constexpr (std::is_same_v<K, kinds::Scaled>) {
            auto base = k.base->exact_volume();
            if (!base) return std::nullopt;
            return *base * std::pow(k.factor, dim_);
          } else {
            return std::nullopt;
          }
        },
        kind_);
  }

  /// Half-widths h(e_i) of the axis-aligned bounding box (max of both
  /// directions for non-symmetric bodies). Bodies without a support function
  /// fall back to the outer radius.
  Vector bounding_half_widths() const {
    Vector w(dim_);
    const bool has_support = has_exact_polar();
    for (int i = 0; i < dim_; ++i) {
      if (!has_support) {
        w[i] = outer_radius_;
        continue;
      }
      Vector e = Vector::Zero(dim_);
      e[i] = 1.0;
      const double plus = support_unchecked(e);
      e[i] = -1.0;
      w[i] = std::max(plus, support_unchecked(e));
    }
    return w;
  }

  double gauge_unchecked(const Vector& x) const {
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kinds::LpBall>) {
            if (std::isinf(k.p)) return x.cwiseAbs().maxCoeff() / k.radius;
            if (k.p == 2.0) return x.norm() / k.radius;
            if (k.p == 1.0) return x.cwiseAbs().sum() / k.radius;
            double s = 0.0;
            for (Eigen::Index i = 0; i < x.size(); ++i) s += abs_pow(x[i], k.p);
            return std::pow(s, 1.0 / k.p) / k.radius;
          } else if constexpr (std::is_same_v<K, kinds::Ellipsoid>) {
            return std::sqrt(std::max(0.0, x.dot(k.shape_inv * x)));
          } else if constexpr (std::is_same_v<K, kinds::PolytopeH>) {
            return max_dot(k.normals, x);
          } else if constexpr (std::is_same_v<K, kinds::PolytopeV>) {
            return max_dot(k.facets, x);
          } else if constexpr (std::is_same_v<K, kinds::LinearImage>) {
            return k.base->gauge_unchecked(k.inverse * x);
          } else if constexpr (std::is_same_v<K, kinds::Scaled>) {
            return k.base->gauge_unchecked(x) / k.factor;
          } else {
            return (*k.support)(x);
          }
        },
        kind_);
  }

  double support_unchecked(const Vector& theta) const {
    if (!flags_.convex) throw Unsupported("support: body is not convex");
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, kinds::LpBall>) {
            const double q = conjugate_exponent(k.p);
            if (std::isinf(q)) return k.radius * theta.cwiseAbs().maxCoeff();
            if (q == 1.0) return k.radius * theta.cwiseAbs().sum();
            if (q == 2.0) return k.radius * theta.norm();
            double s = 0.0;
            for (Eigen::Index i = 0; i < theta.size(); ++i) s += abs_pow(theta[i], q);
            return k.radius * std::pow(s, 1.0 / q);
          } else if constexpr (std::is_same_v<K, kinds::Ellipsoid>) {
            return std::sqrt(std::max(0.0, theta.dot(k.shape * theta)));
          } else if constexpr (std::is_same_v<K, kinds::PolytopeH>) {
            return max_dot(k.vertices, theta);
          } else if constexpr (std::is_same_v<K, kinds::PolytopeV>) {
            return max_dot(k.vertices, theta);
          } else if constexpr (std::is_same_v<K, kinds::LinearImage>) {
            return k.base->support_unchecked(k.map.transpose() * theta);
          } else if constexpr (std::is_same_v<K, kinds::Scaled>) {
            return k.factor * k.base->support_unchecked(theta);
          } else {
            throw Unsupported("support: support-defined bodies only expose their gauge");
            return 0.0;
          }
        },
        kind_);
  }

  // ---- internal constructors shared with the free functions ---------------

  static Body from_h(Matrix normals, VertexEnumeration en) {
    const auto n = static_cast<int>(normals.rows());
    Body b(n, kinds::PolytopeH{normals, en.vertices, std::move(en.tight_rows)});
    b.flags_ = {detail::columns_symmetric(normals), true, detail::columns_unconditional(normals)};
    b.inner_radius_ = 1.0 / normals.colwise().norm().maxCoeff();
    b.outer_radius_ = en.vertices.colwise().norm().maxCoeff();
    return b;
  }

  /// `en` enumerates the vertices of { y : <v_i, y> <= 1 }: the facets.
  static Body from_v(const Matrix& vertices, VertexEnumeration en) {
    const auto n = static_cast<int>(vertices.rows());
    kinds::PolytopeV k{vertices, en.vertices, std::move(en.tight_rows), false, {}};
    k.simplicial = true;
    double factorial = std::tgamma(n + 1.0);
    for (Eigen::Index j = 0; j < k.facets.cols() && k.simplicial; ++j) {
      const auto& fv = k.facet_vertices[static_cast<std::size_t>(j)];
      if (static_cast<int>(fv.size()) != n) {
        k.simplicial = false;
        break;
      }
      Matrix cone(n, n);
      for (int c = 0; c < n; ++c) cone.col(c) = vertices.col(fv[static_cast<std::size_t>(c)]);
      k.cone_volumes.push_back(std::abs(cone.determinant()) / factorial);
    }
    if (!k.simplicial) k.cone_volumes.clear();
    Body b(n, std::move(k));
    b.flags_ = {detail::columns_symmetric(vertices), true, detail::columns_unconditional(vertices)};
    const auto& pk = std::get<kinds::PolytopeV>(b.kind_);
    b.inner_radius_ = 1.0 / pk.facets.colwise().norm().maxCoeff();
    b.outer_radius_ = vertices.colwise().norm().maxCoeff();
    return b;
  }

  static Body wrap_linear(BodyPtr base, const Matrix& t) {
    const int n = base->dim();
    require(t.rows() == n && t.cols() == n, "linear_image: map must be n x n");
    Eigen::FullPivLU<Matrix> lu(t);
    if (!lu.isInvertible()) throw InvalidInput("linear_image: map is singular");
    Eigen::JacobiSVD<Matrix> svd(t);
    const auto& sv = svd.singularValues();
    Body b(n, kinds::LinearImage{base, t, lu.inverse(), std::abs(lu.determinant())});
    // Signed permutation-diagonal maps preserve unconditionality.
    bool monomial = true;
    for (int r = 0; r < n && monomial; ++r) {
      int nz = 0;
      for (int c = 0; c < n; ++c) nz += t(r, c) != 0.0 ? 1 : 0;
      monomial = nz == 1;
    }
    b.flags_ = {base->flags().symmetric, base->flags().convex, base->flags().unconditional && monomial};
    b.inner_radius_ = base->inner_radius() * sv.minCoeff();
    b.outer_radius_ = base->outer_radius() * sv.maxCoeff();
    return b;
  }

  static Body wrap_scaled(BodyPtr base, double c) {
    require(c > 0.0 && std::isfinite(c), "scale: factor must be positive");
    const int n = base->dim();
    Body b(n, kinds::Scaled{base, c});
    b.flags_ = base->flags();
    b.inner_radius_ = base->inner_radius() * c;
    b.outer_radius_ = base->outer_radius() * c;
    return b;
  }

 private:
  Body(int n, Kind k) : dim_(n), kind_(std::move(k)) {}

  static double max_dot(const Matrix& cols, const Vector& x) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cols.cols(); ++i) best = std::max(best, cols.col(i).dot(x));
    return std::max(best, 0.0);
  }

  int dim_;
  Kind kind_;
  BodyFlags flags_;
  double inner_radius_ = 0.0;
  double outer_radius_ = 0.0;
};

// ---- free operations -------------------------------------------------------

inline double gauge(const Body& body, const Vector& x) { return body.gauge(x); }
inline double support(const Body& body, const Vector& theta) { return body.support(theta); }

/// Image T(K); gauge_{TK}(x) = gauge_K(T^{-1} x).
inline Body linear_image(const Body& body, const Matrix& t) {
  return Body::wrap_linear(std::make_shared<const Body>(body), t);
}

/// cK; gauge_{cK}(x) = gauge_K(x / c).
inline Body scale(const Body& body, double c) { return Body::wrap_scaled(std::make_shared<const Body>(body), c); }

/// Polar body K° = { x : <x, y> <= 1 for all y in K }; exact for every kind
/// except support-defined bodies.
inline Body polar(const Body& body) {
  if (!body.flags().convex) throw InvalidInput("polar: body must be convex");
  return std::visit(
      [&](const auto& k) -> Body {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, kinds::LpBall>) {
          return Body::lp_ball(body.dim(), conjugate_exponent(k.p), 1.0 / k.radius);
        } else if constexpr (std::is_same_v<K, kinds::Ellipsoid>) {
          return Body::ellipsoid_matrix(0.5 * (k.shape_inv + k.shape_inv.transpose()));
        } else if constexpr (std::is_same_v<K, kinds::PolytopeH>) {
          // Facet rows become vertices; the enumerated vertices are the facets.
          return Body::from_v(k.normals, VertexEnumeration{k.vertices, k.vertex_rows});
        } else if constexpr (std::is_same_v<K, kinds::PolytopeV>) {
          return Body::from_h(k.vertices, VertexEnumeration{k.facets, k.facet_vertices});
        } else if constexpr (std::is_same_v<K, kinds::LinearImage>) {
          return linear_image(polar(*k.base), k.inverse.transpose());
        } else if constexpr (std::is_same_v<K, kinds::Scaled>) {
          return scale(polar(*k.base), 1.0 / k.factor);
        } else {
          throw Unsupported("polar: support-defined bodies have no exact polar representation");
          return body;
        }
      },
      body.kind());
}

/// H-representation of a V-polytope and vice versa; gauges agree exactly.
inline Body to_facet_form(const Body& body) {
  const auto* v = body.as<kinds::PolytopeV>();
  require(v != nullptr, "to_facet_form: body is not a V-polytope");
  Matrix a = v->facets.transpose();
  return Body::polytope_h(a, Vector::Ones(a.rows()));
}

inline Body to_vertex_form(const Body& body) {
  const auto* h = body.as<kinds::PolytopeH>();
  require(h != nullptr, "to_vertex_form: body is not an H-polytope");
  return Body::polytope_v(h->vertices);
}

/// Finite measure on S^{n-1} representing a body of L_p^n:
/// ||x||^p = sum_i w_i |<x, theta_i>|^p.
struct SphericalMeasure {
  Matrix directions;  // n x m
  Vector weights;
  double p = 1.0;

  double total_mass() const { return weights.sum(); }

  double reconstructed_gauge(const Vector& x) const {
    require_dim(x.size(), static_cast<int>(directions.rows()), "spherical measure");
    double s = 0.0;
    for (Eigen::Index i = 0; i < directions.cols(); ++i) s += weights[i] * abs_pow(directions.col(i).dot(x), p);
    return std::pow(s, 1.0 / p);
  }
};

/// Atoms at +-e_i with weight 1/2: the representing measure of B_p^n.
inline SphericalMeasure lp_representation(double p, int n) {
  require(p > 0.0 && std::isfinite(p), "lp_representation: p must be positive and finite");
  require(n >= 1, "lp_representation: dimension must be positive");
  SphericalMeasure m;
  m.p = p;
  m.directions = Matrix::Zero(n, 2 * n);
  m.weights = Vector::Constant(2 * n, 0.5);
  for (int i = 0; i < n; ++i) {
    m.directions(i, 2 * i) = 1.0;
    m.directions(i, 2 * i + 1) = -1.0;
  }
  return m;
}

struct InclusionResult {
  bool included = false;
  double worst_ratio = 0.0;
  Eigen::Index worst_index = -1;
};

/// Checks radial(inner) <= radial(outer) (1 + tol) on the given unit
/// directions (columns); worst_ratio = max radial(inner) / radial(outer).
inline InclusionResult inclusion_check(const Body& inner, const Body& outer, const Matrix& directions,
                                       double tol = kDualityTol) {
  require(inner.dim() == outer.dim(), "inclusion_check: dimension mismatch");
  require_dim(directions.rows(), inner.dim(), "inclusion_check directions");
  require(directions.cols() >= 1, "inclusion_check: empty direction list");
  InclusionResult r;
  r.worst_ratio = -1.0;
  for (Eigen::Index i = 0; i < directions.cols(); ++i) {
    const Vector theta = directions.col(i);
    const double ratio = outer.gauge_unchecked(theta) / inner.gauge_unchecked(theta);
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.worst_index = i;
    }
  }
  r.included = r.worst_ratio <= 1.0 + tol;
  return r;
}

}  // namespace starbody
