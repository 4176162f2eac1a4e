#pragma once

// Second-order finite-difference operators on collocated node grids.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "toyns/field.hpp"
#include "toyns/parallel.hpp"

namespace toyns {

namespace detail {

inline std::array<std::size_t, 3> strides(const Grid3& g) {
  return {1, static_cast<std::size_t>(g.n[0]),
          static_cast<std::size_t>(g.n[0]) * static_cast<std::size_t>(g.n[1])};
}

/// Runs body(i, j, k, p) for every node, parallel over k-slabs.
template <class Body>
void for_each_node(const Grid3& g, Body&& body) {
  parallel_for(static_cast<std::size_t>(g.n[2]), [&](std::size_t k0, std::size_t k1) {
    for (auto k = static_cast<int>(k0); k < static_cast<int>(k1); ++k)
      for (int j = 0; j < g.n[1]; ++j)
        for (int i = 0; i < g.n[0]; ++i) body(i, j, k, g.index(i, j, k));
  });
}

}  // namespace detail

/// d f / d x_axis. Centered in the interior and across periodic seams;
/// one-sided second order on walls; odd ghost on the half-space symmetry plane.
inline void differentiate(const Grid3& g, std::span<const double> f, int axis, std::span<double> out) {
  const auto st = detail::strides(g);
  const std::size_t s = st[static_cast<std::size_t>(axis)];
  const int m = g.n[static_cast<std::size_t>(axis)];
  const double inv2h = 1.0 / (2.0 * g.h);
  const bool odd_plane = g.kind == BoundaryKind::half_space_odd && axis == 2;
  detail::for_each_node(g, [&](int i, int j, int k, std::size_t p) {
    const int c = axis == 0 ? i : (axis == 1 ? j : k);
    if (c > 0 && c < m - 1) {
      out[p] = (f[p + s] - f[p - s]) * inv2h;
    } else if (g.periodic()) {
      const std::size_t wrap = static_cast<std::size_t>(m - 1) * s;
      out[p] = c == 0 ? (f[p + s] - f[p + wrap]) * inv2h : (f[p - wrap] - f[p - s]) * inv2h;
    } else if (c == 0 && odd_plane) {
      out[p] = (f[p + s] + f[p + s]) * inv2h;
    } else if (c == 0) {
      out[p] = (-3.0 * f[p] + 4.0 * f[p + s] - f[p + 2 * s]) * inv2h;
    } else {
      out[p] = (3.0 * f[p] - 4.0 * f[p - s] + f[p - 2 * s]) * inv2h;
    }
  });
}

/// Full gradient, (i,j) = d u_i / d x_j.
inline TensorField gradient(const VelocityField& u) {
  require_finite(u, "gradient");
  TensorField g(u.grid, u.time);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      differentiate(u.grid, u.comp[static_cast<std::size_t>(i)], j,
                    g.comp[static_cast<std::size_t>(3 * i + j)]);
  return g;
}

inline ScalarField divergence(const VelocityField& u) {
  require_finite(u, "divergence");
  ScalarField d(u.grid, u.time);
  std::vector<double> tmp(u.size());
  for (int a = 0; a < 3; ++a) {
    differentiate(u.grid, u.comp[static_cast<std::size_t>(a)], a, tmp);
    for (std::size_t p = 0; p < u.size(); ++p) d[p] += tmp[p];
  }
  return d;
}

/// 7-point Laplacian on non-wall nodes; wall nodes get 0. The stencil is
/// written as ((f+ + f-) - 2f) per axis so that mirror-odd data give
/// bitwise mirror-odd results.
inline void laplacian(const Grid3& g, std::span<const double> f, std::span<double> out) {
  const auto st = detail::strides(g);
  const double inv_h2 = 1.0 / (g.h * g.h);
  detail::for_each_node(g, [&](int i, int j, int k, std::size_t p) {
    if (g.is_wall(i, j, k)) {
      out[p] = 0.0;
      return;
    }
    const std::array<int, 3> c{i, j, k};
    double axis_terms[3];
    for (std::size_t a = 0; a < 3; ++a) {
      const std::size_t s = st[a];
      const int m = g.n[a];
      const std::size_t plus = c[a] == m - 1 ? p - static_cast<std::size_t>(m - 1) * s : p + s;
      const std::size_t minus = c[a] == 0 ? p + static_cast<std::size_t>(m - 1) * s : p - s;
      axis_terms[a] = (f[plus] + f[minus]) - 2.0 * f[p];
    }
    out[p] = ((axis_terms[0] + axis_terms[1]) + axis_terms[2]) * inv_h2;
  });
}

inline VelocityField laplacian(const VelocityField& u) {
  VelocityField out(u.grid, u.time);
  for (std::size_t c = 0; c < 3; ++c) laplacian(u.grid, u.comp[c], out.comp[c]);
  return out;
}

inline double kinetic_energy(const VelocityField& u) {
  const double s = deterministic_sum(u.size(), [&](std::size_t p) {
    return u.comp[0][p] * u.comp[0][p] + u.comp[1][p] * u.comp[1][p] + u.comp[2][p] * u.comp[2][p];
  });
  return 0.5 * s * u.grid.cell_volume();
}

/// sum over grid edges of |D+ u|^2 h^3: the discrete Dirichlet form of the
/// 7-point Laplacian, so that sum u . Lap_h u h^3 = -dirichlet_form(u)
/// whenever walls carry zero data.
inline double dirichlet_form(const VelocityField& u) {
  const Grid3& g = u.grid;
  const auto st = detail::strides(g);
  const double s = deterministic_sum(u.size(), [&](std::size_t p) {
    const auto c = g.coords(p);
    double acc = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      std::size_t q;
      if (c[a] < g.n[a] - 1) q = p + st[a];
      else if (g.periodic()) q = p - static_cast<std::size_t>(g.n[a] - 1) * st[a];
      else continue;
      for (std::size_t m = 0; m < 3; ++m) {
        const double d = u.comp[m][q] - u.comp[m][p];
        acc += d * d;
      }
    }
    return acc;
  });
  return s * g.h;
}

/// Pointwise Frobenius norm squared of a tensor field.
inline ScalarField frobenius_squared(const TensorField& t) {
  ScalarField out(t.grid, t.time);
  for (std::size_t p = 0; p < out.values.size(); ++p) {
    double s = 0.0;
    for (const auto& c : t.comp) s += c[p] * c[p];
    out[p] = s;
  }
  return out;
}

}  // namespace toyns
