#pragma once

// Quadrature over balls B(x0, r) and parabolic cylinders
// Q(z0, r) = B(x0, r) x (t0 - r^2, t0].
//
// Ball integrals count whole node cells (volume h^3) whose centers lie in the
// closed ball. The O(h/r) geometric error is accepted; diagnostics always
// compare quantities computed with this same rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "toyns/field.hpp"
#include "toyns/parallel.hpp"

namespace toyns {

struct Ball {
  Vec3 center{};
  double radius = 0.0;
};

struct ParabolicCylinder {
  Vec3 center_x{};
  double center_t = 0.0;
  double radius = 0.0;

  ParabolicCylinder() = default;
  ParabolicCylinder(Vec3 x, double t, double r) : center_x(x), center_t(t), radius(r) {
    if (!(r > 0.0)) throw InvalidArgument("cylinder radius must be positive");
  }
  Ball ball() const { return {center_x, radius}; }
  double t_lo() const { return center_t - radius * radius; }
  double t_hi() const { return center_t; }
};

inline double unit_ball_volume() { return 4.0 * std::numbers::pi / 3.0; }

/// Node indices whose cells are counted for a ball, in (k, j, i) scan order.
struct BallNodes {
  std::vector<std::size_t> nodes;
  double cell_volume = 0.0;

  double measure() const { return static_cast<double>(nodes.size()) * cell_volume; }
};

inline BallNodes ball_nodes(const Grid3& g, const Ball& b) {
  if (!(b.radius >= g.h)) {
    std::ostringstream os;
    os << "ball under-resolved: radius " << b.radius << " < grid spacing " << g.h;
    throw InvalidArgument(os.str());
  }
  if (g.periodic())
    for (int a = 0; a < 3; ++a)
      if (2.0 * b.radius >= g.period(a))
        throw InvalidArgument("ball diameter exceeds the periodic box");

  std::array<int, 3> lo{}, hi{};
  for (std::size_t a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::ceil((b.center[a] - b.radius - g.origin[a]) / g.h - 1e-9));
    hi[a] = static_cast<int>(std::floor((b.center[a] + b.radius - g.origin[a]) / g.h + 1e-9));
    if (!g.periodic()) {
      lo[a] = std::max(lo[a], 0);
      hi[a] = std::min(hi[a], g.n[a] - 1);
    }
  }
  const double r2 = b.radius * b.radius * (1.0 + 1e-10);
  BallNodes out;
  out.cell_volume = g.cell_volume();
  for (int k = lo[2]; k <= hi[2]; ++k)
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        const Vec3 x = g.position(i, j, k);
        const double dx = x[0] - b.center[0], dy = x[1] - b.center[1], dz = x[2] - b.center[2];
        if (dx * dx + dy * dy + dz * dz > r2) continue;
        auto wrap = [](int c, int m) { return ((c % m) + m) % m; };
        out.nodes.push_back(g.index(wrap(i, g.n[0]), wrap(j, g.n[1]), wrap(k, g.n[2])));
      }
  if (out.nodes.empty()) throw InvalidArgument("ball does not intersect the grid domain");
  return out;
}

/// True when the closed ball lies inside the grid's physical domain (always
/// true for periodic grids once the ball fits in the box).
inline bool ball_inside_domain(const Grid3& g, const Ball& b) {
  if (g.periodic()) {
    for (int a = 0; a < 3; ++a)
      if (2.0 * b.radius >= g.period(a)) return false;
    return true;
  }
  for (int a = 0; a < 3; ++a) {
    const auto sa = static_cast<std::size_t>(a);
    if (b.center[sa] - b.radius < g.origin[sa] - 1e-12) return false;
    if (b.center[sa] + b.radius > g.upper(a) + 1e-12) return false;
  }
  return true;
}

inline double integrate_nodes(std::span<const double> f, const BallNodes& bn) {
  std::vector<double> vals(bn.nodes.size());
  for (std::size_t q = 0; q < vals.size(); ++q) vals[q] = f[bn.nodes[q]];
  return pairwise_sum(vals) * bn.cell_volume;
}

inline double integrate_ball(const ScalarField& f, const Ball& b) {
  return integrate_nodes(f.values, ball_nodes(f.grid, b));
}

/// Piecewise-linear-in-time quadrature weights for the slab [t0 - r^2, t0].
/// Returns (snapshot index, weight) pairs. Throws when fewer than 4 samples
/// fall in the slab or the slab is not covered.
inline std::vector<std::pair<std::size_t, double>> cylinder_time_weights(std::span<const double> times,
                                                                         const ParabolicCylinder& q) {
  const double lo = q.t_lo(), hi = q.t_hi();
  const double tol = 1e-9 * std::max(q.radius * q.radius, 1e-300);
  auto cadence_error = [&](const std::string& why) {
    std::ostringstream os;
    os << "insufficient snapshots for cylinder slab [" << lo << ", " << hi << "]: " << why
       << "; need at least 4 snapshots in the slab (spacing <= r^2/3 = " << (q.radius * q.radius / 3.0)
       << ")";
    return InvalidArgument(os.str());
  };
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw InvalidArgument("snapshot times must be strictly increasing");
  if (times.empty() || times.front() > lo + tol || times.back() < hi - tol)
    throw cadence_error("slab not covered");
  std::size_t inside = 0;
  for (double t : times)
    if (t >= lo - tol && t <= hi + tol) ++inside;
  if (inside < 4) throw cadence_error(std::to_string(inside) + " samples in slab");

  std::vector<double> w(times.size(), 0.0);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double t0 = times[k], t1 = times[k + 1];
    const double a = std::max(t0, lo), b = std::min(t1, hi);
    if (b - a <= tol) continue;
    const double dt = t1 - t0;
    // integral over [a,b] of the linear interpolant between (t0,g0),(t1,g1)
    const double la0 = (t1 - a) / dt, lb0 = (t1 - b) / dt;
    w[k] += 0.5 * (b - a) * (la0 + lb0);
    w[k + 1] += 0.5 * (b - a) * ((1.0 - la0) + (1.0 - lb0));
  }
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] != 0.0) out.emplace_back(k, w[k]);
  return out;
}

/// Indices of snapshots whose time lies in the closed slab [t0 - r^2, t0].
inline std::vector<std::size_t> slab_samples(std::span<const double> times, const ParabolicCylinder& q) {
  const double tol = 1e-9 * q.radius * q.radius;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] >= q.t_lo() - tol && times[k] <= q.t_hi() + tol) out.push_back(k);
  return out;
}

inline std::vector<double> times_of(std::span<const ScalarField> s) {
  std::vector<double> t;
  t.reserve(s.size());
  for (const auto& f : s) t.push_back(f.time);
  return t;
}

inline double integrate_cylinder(std::span<const ScalarField> snapshots, const ParabolicCylinder& q) {
  if (snapshots.empty()) throw InvalidArgument("integrate_cylinder: no snapshots");
  const auto times = times_of(snapshots);
  const auto weights = cylinder_time_weights(times, q);
  const BallNodes bn = ball_nodes(snapshots.front().grid, q.ball());
  std::vector<double> terms;
  terms.reserve(weights.size());
  for (const auto& [k, wk] : weights) terms.push_back(wk * integrate_nodes(snapshots[k].values, bn));
  return pairwise_sum(terms);
}

}  // namespace toyns
