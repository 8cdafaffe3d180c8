#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace starbody {

/// log |B_2^n|.
inline double log_unit_ball_volume(int n) {
  return 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
}

inline double unit_ball_volume(int n) { return std::exp(log_unit_ball_volume(n)); }

/// Surface area of S^{d-1} in R^d; d = 1 gives |S^0| = 2.
inline double sphere_area(int d) {
  return 2.0 * std::exp(0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d));
}

/// |B_p^n| = (2 Gamma(1 + 1/p))^n / Gamma(1 + n/p); p = inf gives 2^n.
inline double lp_ball_volume(double p, int n) {
  if (std::isinf(p)) return std::pow(2.0, n);
  return std::exp(n * (std::log(2.0) + std::lgamma(1.0 + 1.0 / p)) - std::lgamma(1.0 + n / p));
}

inline double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int order) {
    if (order < 1) throw std::invalid_argument("Gauss-Legendre order must be >= 1");
    nodes.assign(order, 0.0);
    weights.assign(order, 0.0);
    if (order == 1) {
      weights[0] = 2.0;
      return;
    }
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
      double dp = 1.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= order; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = -x;
      nodes[order - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      weights[i] = w;
      weights[order - 1 - i] = w;
    }
  }

  int order() const { return static_cast<int>(nodes.size()); }
};

/// Calls fn(subset) for every size-`k` subset of {0, ..., n-1}, in
/// lexicographic order.
template <class Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    fn(static_cast<const std::vector<int>&>(idx));
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  for_each_combination(n, k, [&](const std::vector<int>& c) { out.push_back(c); });
  return out;
}

inline double binomial(int n, int k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

/// |t|^p; exact repeated squaring for small integer exponents.
inline double abs_pow(double t, double p) {
  const double a = std::abs(t);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  const double r = std::round(p);
  if (r == p && p > 0.0 && p <= 16.0) {
    auto e = static_cast<unsigned>(r);
    double base = a;
    double acc = 1.0;
    while (e != 0U) {
      if ((e & 1U) != 0U) acc *= base;
      base *= base;
      e >>= 1U;
    }
    return acc;
  }
  return std::pow(a, p);
}

}  // namespace starbody
