#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "toyns/error.hpp"
#include "toyns/grid.hpp"

namespace toyns {

struct ScalarField {
  Grid3 grid;
  double time = 0.0;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(const Grid3& g, double t) : grid(g), time(t), values(g.size(), 0.0) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Three-component field, stored component-major (all u1, then u2, then u3).
struct VelocityField {
  Grid3 grid;
  double time = 0.0;
  std::array<std::vector<double>, 3> comp;

  VelocityField() = default;
  VelocityField(const Grid3& g, double t) : grid(g), time(t) {
    for (auto& c : comp) c.assign(g.size(), 0.0);
  }

  Vec3 at(std::size_t i) const { return {comp[0][i], comp[1][i], comp[2][i]}; }
  void set(std::size_t i, const Vec3& v) {
    comp[0][i] = v[0];
    comp[1][i] = v[1];
    comp[2][i] = v[2];
  }
  std::size_t size() const { return grid.size(); }

  template <class F>
  static VelocityField sample(const Grid3& g, double t, F&& f) {
    VelocityField u(g, t);
    for (std::size_t i = 0; i < g.size(); ++i) u.set(i, f(g.position(i)));
    return u;
  }
};

/// Rank-2 tensor per node, component (i,j) stored at comp[3*i + j].
/// As a gradient of u, (i,j) holds d u_i / d x_j.
struct TensorField {
  Grid3 grid;
  double time = 0.0;
  std::array<std::vector<double>, 9> comp;

  TensorField() = default;
  TensorField(const Grid3& g, double t) : grid(g), time(t) {
    for (auto& c : comp) c.assign(g.size(), 0.0);
  }
  double& operator()(int i, int j, std::size_t node) {
    return comp[static_cast<std::size_t>(3 * i + j)][node];
  }
  double operator()(int i, int j, std::size_t node) const {
    return comp[static_cast<std::size_t>(3 * i + j)][node];
  }
};

inline std::string describe_node(const Grid3& g, std::size_t idx) {
  const auto c = g.coords(idx);
  const auto x = g.position(idx);
  return "node (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
         std::to_string(c[2]) + ") at x=(" + std::to_string(x[0]) + "," + std::to_string(x[1]) +
         "," + std::to_string(x[2]) + ")";
}

inline void require_finite(const VelocityField& u, const char* where) {
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < u.size(); ++i)
      if (!std::isfinite(u.comp[static_cast<std::size_t>(c)][i]))
        throw InvalidArgument(std::string(where) + ": non-finite component u" +
                              std::to_string(c + 1) + " at " + describe_node(u.grid, i));
}

inline void require_finite(const ScalarField& f, const char* where) {
  for (std::size_t i = 0; i < f.values.size(); ++i)
    if (!std::isfinite(f.values[i]))
      throw InvalidArgument(std::string(where) + ": non-finite value at " + describe_node(f.grid, i));
}

/// Sets wall nodes to zero (no-slip).
inline void zero_walls(VelocityField& u) {
  if (u.grid.periodic()) return;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.grid.is_wall(i)) u.set(i, {0.0, 0.0, 0.0});
}

inline double max_magnitude(const VelocityField& u) {
  double m = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, norm(u.at(i)));
  return m;
}

inline double max_abs_difference(const VelocityField& a, const VelocityField& b) {
  double m = 0.0;
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < a.size(); ++i)
      m = std::max(m, std::abs(a.comp[static_cast<std::size_t>(c)][i] -
                               b.comp[static_cast<std::size_t>(c)][i]));
  return m;
}

}  // namespace toyns
