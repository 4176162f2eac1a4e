#pragma once

// Both sides of the local energy inequality
//   int phi |u(t)|^2 + 2 int int phi |grad u|^2
//     <= int int |u|^2 (d_t phi + Lap phi) + int int (u . grad phi) |u|^2
// evaluated on a snapshot history with an analytic smooth test function.

#include <cmath>
#include <span>
#include <vector>

#include "toyns/cutoff.hpp"
#include "toyns/operators.hpp"
#include "toyns/quadrature.hpp"

namespace toyns {

struct LocalEnergyReport {
  ParabolicCylinder cylinder;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs, signed
};

/// phi is centered at (Q.center_x, Q.center_t); its time ramp must vanish at
/// the bottom of Q (outer_radius <= r^2) and its spatial support must lie in
/// the domain. The time integrals run over the slab of Q.
inline LocalEnergyReport local_energy_residual(std::span<const VelocityField> snapshots,
                                               const ParabolicCylinder& q, TestFunction phi) {
  if (snapshots.empty()) throw InvalidArgument("local_energy_residual: no snapshots");
  const Grid3& g = snapshots.front().grid;
  phi.x0 = q.center_x;
  phi.t0 = q.center_t;
  if (phi.time.kind != CutoffKind::time_ramp || (phi.has_space && phi.space.kind != CutoffKind::space_bump))
    throw InvalidArgument("local_energy_residual: expected a space bump and a time ramp");
  if (phi.time.outer_radius > q.radius * q.radius * (1.0 + 1e-12))
    throw InvalidArgument("test function support escapes the cylinder slab (time ramp outer > r^2)");
  if (phi.has_space && !ball_inside_domain(g, {q.center_x, phi.space.outer_radius}))
    throw InvalidArgument("test function support escapes the domain");
  if (!phi.has_space && !g.periodic())
    throw InvalidArgument("a spatially constant test function needs a periodic domain");

  std::vector<double> times;
  for (const auto& s : snapshots) times.push_back(s.time);
  const auto weights = cylinder_time_weights(times, q);
  const std::size_t last = weights.back().first;
  if (std::abs(times[last] - q.center_t) > 1e-9 * q.radius * q.radius)
    throw InvalidArgument("local_energy_residual: no snapshot at the cylinder top time");

  std::vector<std::size_t> nodes;
  if (phi.has_space) nodes = ball_nodes(g, {q.center_x, phi.space.outer_radius}).nodes;
  else {
    nodes.resize(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) nodes[p] = p;
  }
  const double vol = g.cell_volume();

  std::vector<double> lhs_terms, rhs_terms;
  double top = 0.0;
  for (const auto& [k, wk] : weights) {
    const VelocityField& u = snapshots[k];
    const TensorField G = gradient(u);
    std::vector<double> a(nodes.size()), b(nodes.size());
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const std::size_t p = nodes[n];
      const auto pv = phi.eval(g.position(p), u.time);
      const Vec3 uv = u.at(p);
      const double u2 = dot(uv, uv);
      double grad2 = 0.0;
      for (const auto& c : G.comp) grad2 += c[p] * c[p];
      a[n] = pv.phi * grad2;
      b[n] = u2 * (pv.dt_phi + pv.lap_phi) + dot(uv, pv.grad_phi) * u2;
    }
    lhs_terms.push_back(2.0 * wk * pairwise_sum(a) * vol);
    rhs_terms.push_back(wk * pairwise_sum(b) * vol);
    if (k == last) {
      std::vector<double> e(nodes.size());
      for (std::size_t n = 0; n < nodes.size(); ++n) {
        const Vec3 uv = u.at(nodes[n]);
        e[n] = phi.eval(g.position(nodes[n]), u.time).phi * dot(uv, uv);
      }
      top = pairwise_sum(e) * vol;
    }
  }
  LocalEnergyReport r;
  r.cylinder = q;
  r.lhs = top + pairwise_sum(lhs_terms);
  r.rhs = pairwise_sum(rhs_terms);
  r.slack = r.rhs - r.lhs;
  return r;
}

}  // namespace toyns
