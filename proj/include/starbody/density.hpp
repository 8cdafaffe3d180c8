#pragma once

#include "starbody/core.hpp"
#include "starbody/rng.hpp"
#include "starbody/special.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>

namespace starbody {

/// Non-negative weight on R^n. Gaussian densities are unnormalized,
/// f(x) = exp(-x' Sigma^{-1} x / 2), so that f(0) = sup f = 1.
class Density {
 public:
  enum class Kind { uniform, gaussian, custom };
  using Fn = std::function<double(const Vector&)>;

  static Density uniform(int n) {
    Density d(n, Kind::uniform);
    d.sup_norm_ = 1.0;
    d.at_origin_ = 1.0;
    return d;
  }

  static Density gaussian(const Matrix& covariance) {
    const auto n = static_cast<int>(covariance.rows());
    require(n >= 1 && covariance.cols() == n, "gaussian density: covariance must be square");
    Eigen::LLT<Matrix> llt(covariance);
    require(llt.info() == Eigen::Success, "gaussian density: covariance must be positive definite");
    Density d(n, Kind::gaussian);
    d.covariance_ = covariance;
    d.precision_ = llt.solve(Matrix::Identity(n, n));
    d.sup_norm_ = 1.0;
    d.at_origin_ = 1.0;
    return d;
  }

  static Density gaussian(int n, double sigma) {
    require(sigma > 0.0, "gaussian density: sigma must be positive");
    return gaussian(Matrix::Identity(n, n) * sigma * sigma);
  }

  /// `sup_norm` and `value_at_origin` are declared; check_normalized() probes
  /// them on samples.
  static Density custom(int n, Fn fn, double sup_norm, bool even, std::string label = "custom") {
    require(static_cast<bool>(fn), "custom density: empty evaluator");
    Density d(n, Kind::custom);
    d.fn_ = std::make_shared<Fn>(std::move(fn));
    d.sup_norm_ = sup_norm;
    d.at_origin_ = (*d.fn_)(Vector::Zero(n));
    d.even_ = even;
    d.label_ = std::move(label);
    return d;
  }

  int dim() const { return dim_; }
  Kind kind() const { return kind_; }
  double sup_norm() const { return sup_norm_; }
  double value_at_origin() const { return at_origin_; }
  bool even() const { return even_; }
  const Matrix& covariance() const { return covariance_; }
  const std::string& label() const { return label_; }

  double operator()(const Vector& x) const {
    require_dim(x.size(), dim_, "density");
    double v = 1.0;
    switch (kind_) {
      case Kind::uniform:
        return 1.0;
      case Kind::gaussian:
        return std::exp(-0.5 * x.dot(precision_ * x));
      case Kind::custom:
        v = (*fn_)(x);
        break;
    }
    if (!(v >= 0.0)) throw NumericalFailure("density evaluated negative (or NaN) at a sample point");
    return v;
  }

  /// int_0^rho r^{m-1} f(r theta) dr with the given Gauss-Legendre rule.
  /// `theta` must be a unit vector; `m` > 0.
  double radial_integral(const Vector& theta, double rho, double m, const GaussLegendre& gl) const {
    if (rho <= 0.0) return 0.0;
    if (kind_ == Kind::uniform) return std::pow(rho, m) / m;
    const double half = 0.5 * rho;
    double quad_form = 0.0;
    if (kind_ == Kind::gaussian) quad_form = theta.dot(precision_ * theta);
    double acc = 0.0;
    Vector x(dim_);
    for (int j = 0; j < gl.order(); ++j) {
      const double r = half * (gl.nodes[j] + 1.0);
      double fv = 0.0;
      if (kind_ == Kind::gaussian) {
        fv = std::exp(-0.5 * r * r * quad_form);
      } else {
        x = r * theta;
        fv = (*this)(x);
      }
      acc += gl.weights[j] * std::pow(r, m - 1.0) * fv;
    }
    return half * acc;
  }

  /// Checks 0 <= f <= sup_norm on random probe points and f(0) = sup_norm = 1
  /// when `require_unit` is set (the hypothesis ||g||_inf = g(0) = 1).
  void check_normalized(bool require_unit, std::uint64_t seed = 0, double probe_radius = 4.0,
                        int n_probes = 2048) const {
    if (require_unit) {
      require(std::abs(sup_norm_ - 1.0) <= kExactTol && std::abs(at_origin_ - 1.0) <= kExactTol,
              "density '" + label_ + "': hypothesis needs sup f = f(0) = 1");
    }
    auto eng = make_engine(seed, Stream::pilot, 0);
    std::uniform_real_distribution<double> u(-probe_radius, probe_radius);
    Vector x(dim_);
    for (int i = 0; i < n_probes; ++i) {
      for (int c = 0; c < dim_; ++c) x[c] = u(eng);
      const double v = (*this)(x);
      if (v > sup_norm_ * (1.0 + 1e-12)) {
        throw InvalidInput("density '" + label_ + "': value exceeds declared sup norm on probe grid");
      }
      if (even_) {
        const double w = (*this)(Vector(-x));
        if (std::abs(w - v) > 1e-12 * std::max(1.0, std::abs(v))) {
          throw InvalidInput("density '" + label_ + "': declared even but f(-x) != f(x)");
        }
      }
    }
  }

 private:
  Density(int n, Kind k) : dim_(n), kind_(k) {
    require(n >= 1, "density: dimension must be positive");
    label_ = k == Kind::uniform ? "uniform" : (k == Kind::gaussian ? "gaussian" : "custom");
  }

  int dim_;
  Kind kind_;
  double sup_norm_ = 1.0;
  double at_origin_ = 1.0;
  bool even_ = true;
  Matrix covariance_;
  Matrix precision_;
  std::shared_ptr<Fn> fn_;
  std::string label_;
};

}  // namespace starbody
