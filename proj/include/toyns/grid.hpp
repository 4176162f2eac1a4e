#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "toyns/error.hpp"

namespace toyns {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major, m[3*i + j]

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

enum class BoundaryKind { periodic, dirichlet_zero, half_space_odd };

inline std::string_view to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::dirichlet_zero: return "dirichlet_zero";
    case BoundaryKind::half_space_odd: return "half_space_odd";
  }
  return "?";
}

inline BoundaryKind boundary_kind_from_string(std::string_view s) {
  if (s == "periodic") return BoundaryKind::periodic;
  if (s == "dirichlet_zero") return BoundaryKind::dirichlet_zero;
  if (s == "half_space_odd") return BoundaryKind::half_space_odd;
  throw InvalidArgument("unknown boundary_kind '" + std::string(s) + "'");
}

/// Uniform node grid. Node (i,j,k) sits at origin + h*(i,j,k).
///
/// periodic:       node n_a is identified with node 0; the period is n_a*h.
/// dirichlet_zero: first and last nodes on each axis are walls.
/// half_space_odd: walls on axes 0 and 1 and at the top of axis 2; the plane
///                 k = 0 is the symmetry plane x3 = origin[2] of an odd
///                 extension.
struct Grid3 {
  std::array<int, 3> n{};
  double h = 0.0;
  Vec3 origin{};
  BoundaryKind kind = BoundaryKind::periodic;

  Grid3() = default;
  Grid3(std::array<int, 3> counts, double spacing, Vec3 org, BoundaryKind k)
      : n(counts), h(spacing), origin(org), kind(k) {
    validate();
  }

  static Grid3 periodic_cube(int count, double length, Vec3 org = {0.0, 0.0, 0.0}) {
    return Grid3({count, count, count}, length / count, org, BoundaryKind::periodic);
  }
  /// Dirichlet box [lo, hi]^3 with `count` nodes per axis including the walls.
  static Grid3 dirichlet_cube(int count, double lo, double hi) {
    return Grid3({count, count, count}, (hi - lo) / (count - 1), {lo, lo, lo},
                 BoundaryKind::dirichlet_zero);
  }

  void validate() const {
    for (int a = 0; a < 3; ++a)
      if (n[static_cast<std::size_t>(a)] < 4)
        throw InvalidArgument("grid needs at least 4 nodes per axis");
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
    for (double o : origin)
      if (!std::isfinite(o)) throw InvalidArgument("grid origin must be finite");
  }

  std::size_t size() const {
    return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) *
           static_cast<std::size_t>(n[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(n[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(k));
  }
  std::array<int, 3> coords(std::size_t idx) const {
    const auto n0 = static_cast<std::size_t>(n[0]);
    const auto n1 = static_cast<std::size_t>(n[1]);
    return {static_cast<int>(idx % n0), static_cast<int>((idx / n0) % n1),
            static_cast<int>(idx / (n0 * n1))};
  }
  Vec3 position(int i, int j, int k) const {
    return {origin[0] + h * i, origin[1] + h * j, origin[2] + h * k};
  }
  Vec3 position(std::size_t idx) const {
    const auto c = coords(idx);
    return position(c[0], c[1], c[2]);
  }

  bool periodic() const { return kind == BoundaryKind::periodic; }
  double period(int axis) const { return n[static_cast<std::size_t>(axis)] * h; }

  /// Largest coordinate covered by the grid along `axis` (exclusive of the
  /// periodic image).
  double upper(int axis) const {
    const int m = n[static_cast<std::size_t>(axis)];
    return origin[static_cast<std::size_t>(axis)] + h * (periodic() ? m : m - 1);
  }

  bool is_wall(int i, int j, int k) const {
    if (periodic()) return false;
    return i == 0 || j == 0 || k == 0 || i == n[0] - 1 || j == n[1] - 1 || k == n[2] - 1;
  }
  bool is_wall(std::size_t idx) const {
    const auto c = coords(idx);
    return is_wall(c[0], c[1], c[2]);
  }

  double cell_volume() const { return h * h * h; }

  bool same_shape(const Grid3& o) const { return n == o.n && kind == o.kind; }
  bool operator==(const Grid3& o) const = default;
};

}  // namespace toyns
