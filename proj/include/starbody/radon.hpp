#pragma once

#include "starbody/body.hpp"
#include "starbody/density.hpp"
#include "starbody/quadrature.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace starbody {

// Directions of S^{n-1} ∩ H are frame * z / |z| with z standard Gaussian in
// R^{n-k}. The stream depends only on the seed and dim H, so every subspace
// evaluated under one spec sees the same z (common random numbers).

/// Several functions integrated over S^{n-1} ∩ H at once.
template <class Fn>
std::vector<Estimate> radon_transform_multi(const Subspace& h, std::size_t m, const QuadratureSpec& q, Fn&& fn) {
  const int d = h.dim();
  require(d >= 1, "radon_transform: empty subspace sphere");
  return sphere_means(
      d, m, q, sphere_area(d),
      [&](const Vector& z, double* out) {
        const Vector theta = h.frame * z;
        fn(theta, out);
      },
      Stream::subspace_directions);
}

/// R_{n-k} g (H) = integral of g over the unit sphere of H.
inline Estimate radon_transform(const std::function<double(const Vector&)>& g, const Subspace& h,
                                const QuadratureSpec& q) {
  return radon_transform_multi(h, 1, q, [&](const Vector& theta, double* out) { out[0] = g(theta); })[0];
}

/// |K ∩ H| = (1/(n-k)) R_{n-k}(||.||_K^{-(n-k)})(H).
inline Estimate section_volume(const Body& body, const Subspace& h, const QuadratureSpec& q) {
  require_dim(h.ambient_dim(), body.dim(), "section_volume");
  const int d = h.dim();
  auto r = radon_transform_multi(h, 1, q, [&](const Vector& theta, double* out) {
    out[0] = std::pow(body.gauge_unchecked(theta), -d);
  })[0];
  return scaled(r, 1.0 / d);
}

/// mu(K ∩ H) = R_{n-k}( int_0^{1/||.||_K} r^{n-k-1} f(r .) dr )(H).
inline Estimate section_measure(const Body& body, const Density& f, const Subspace& h, const QuadratureSpec& q) {
  require_dim(h.ambient_dim(), body.dim(), "section_measure");
  require(f.dim() == body.dim(), "section_measure: density dimension mismatch");
  const int d = h.dim();
  const GaussLegendre gl(q.n_radial);
  return radon_transform_multi(h, 1, q, [&](const Vector& theta, double* out) {
    out[0] = f.radial_integral(theta, 1.0 / body.gauge_unchecked(theta), d, gl);
  })[0];
}

/// Section measures over a panel, parallel over subspaces.
inline std::vector<Estimate> section_measures(const Body& body, const Density& f, const std::vector<Subspace>& panel,
                                              const QuadratureSpec& q) {
  QuadratureSpec inner = q;
  inner.exec = nullptr;
  return map_indexed(q.exec, panel.size(), [&](std::size_t i) { return section_measure(body, f, panel[i], inner); });
}

enum class Extremum { min, max };

struct ExtremalSection {
  std::size_t index = 0;
  Subspace subspace;
  Estimate value;
  std::vector<Estimate> panel_values;
};

/// Arg-extremum of mu(K ∩ H) over the given subspace panel (sample-based, no
/// local refinement).
inline ExtremalSection extremal_section(const Body& body, const Density& f, const std::vector<Subspace>& panel,
                                        const QuadratureSpec& q, Extremum mode) {
  require(!panel.empty(), "extremal_section: empty subspace set");
  auto values = section_measures(body, f, panel, q);
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const bool better = mode == Extremum::max ? values[i].value > values[best].value
                                              : values[i].value < values[best].value;
    if (better) best = i;
  }
  return {best, panel[best], values[best], std::move(values)};
}

/// Convenience overload: panel = coordinate subspaces + `n_random` sampled
/// ones seeded from q.seed.
inline ExtremalSection extremal_section(const Body& body, const Density& f, int k, const QuadratureSpec& q,
                                        Extremum mode, std::int64_t n_random = 256) {
  const auto panel = subspace_panel(body.dim(), k, n_random, derive_seed(q.seed, Stream::grassmannian));
  return extremal_section(body, f, panel, q, mode);
}

}  // namespace starbody
