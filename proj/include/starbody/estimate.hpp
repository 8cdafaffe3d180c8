#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace starbody {

/// Monte-Carlo value with its standard error. Exact values carry se = 0.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_samples = 0;

  static Estimate exact(double v) { return {v, 0.0, 0}; }

  double relative_error() const {
    return value == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(std_error / value);
  }
  friend bool operator==(const Estimate&, const Estimate&) = default;
};

inline double combined_se(const Estimate& a, const Estimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

/// |a - b| within `k` combined standard errors, plus a relative floor for
/// estimates whose SE is exactly zero.
inline bool agrees(const Estimate& a, const Estimate& b, double k, double rel_floor = 1e-12) {
  const double tol = k * combined_se(a, b) + rel_floor * std::max(std::abs(a.value), std::abs(b.value));
  return std::abs(a.value - b.value) <= tol;
}

inline Estimate scaled(const Estimate& e, double c) {
  return {c * e.value, std::abs(c) * e.std_error, e.n_samples};
}

/// e^a with first-order (delta method) error propagation.
inline Estimate power(const Estimate& e, double a) {
  const double v = std::pow(e.value, a);
  const double se = e.value == 0.0 ? 0.0 : std::abs(a * v / e.value) * e.std_error;
  return {v, se, e.n_samples};
}

/// Product of independent estimates; relative errors add in quadrature.
inline Estimate product(const Estimate& a, const Estimate& b) {
  const double v = a.value * b.value;
  const double se = std::hypot(a.std_error * b.value, b.std_error * a.value);
  return {v, se, std::max(a.n_samples, b.n_samples)};
}

inline Estimate quotient(const Estimate& a, const Estimate& b) {
  const double v = a.value / b.value;
  const double se = std::hypot(a.std_error / b.value, a.value * b.std_error / (b.value * b.value));
  return {v, se, std::max(a.n_samples, b.n_samples)};
}

/// Streaming mean/variance; merge() is order-dependent in rounding only, so
/// callers reduce in a fixed order.
struct MeanAccumulator {
  std::int64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  void merge(const MeanAccumulator& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(o.count);
    const double d = o.mean - mean;
    const double n = na + nb;
    mean += d * nb / n;
    m2 += o.m2 + d * d * na * nb / n;
    count += o.count;
  }

  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }

  /// Estimate of `scale * E[X]`.
  Estimate estimate(double scale = 1.0) const {
    const double se = count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    return {scale * mean, std::abs(scale) * se, count};
  }
};

}  // namespace starbody
