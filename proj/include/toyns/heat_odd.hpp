#pragma once

// Heat solve by odd reflection across the plane x3 = 0.
//
// A source F on the half-space grid is extended by F(x', -x3) = -F(x', x3),
// w_t - Lap w = F is solved on the doubled box with zero initial and wall
// data, and the solution is restricted back to x3 >= 0. For an exactly odd
// source the doubled solution stays exactly odd, so it vanishes on x3 = 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "toyns/operators.hpp"

namespace toyns {

using SourceFn = std::function<VelocityField(const Grid3&, double)>;

struct HeatConfig {
  double dt = 1e-3;
  double t_end = 0.0;
  int snapshot_stride = 1;
};

struct ParityReport {
  double max_even = 0.0;           // max |(w(x3) + w(-x3))/2| over all steps
  double max_odd = 0.0;            // max |(w(x3) - w(-x3))/2|
  double even_relative = 0.0;      // max_even / max_odd (0 when both vanish)
  double trace_incompatibility = 0.0;  // max |F| on x3 = 0 before extension
  double max_on_plane = 0.0;       // max |w| on x3 = 0
};

struct HeatResult {
  std::vector<VelocityField> doubled;  // snapshots on the doubled grid
  std::vector<VelocityField> half;     // the same snapshots restricted to x3 >= 0
  ParityReport parity;
};

inline Grid3 doubled_grid(const Grid3& half) {
  if (half.kind != BoundaryKind::half_space_odd) throw InvalidArgument("expected a half_space_odd grid");
  return Grid3({half.n[0], half.n[1], 2 * half.n[2] - 1}, half.h,
               {half.origin[0], half.origin[1], half.origin[2] - (half.n[2] - 1) * half.h},
               BoundaryKind::dirichlet_zero);
}

/// Parity of a doubled-grid field about its middle x3 plane.
inline void accumulate_parity(const VelocityField& w, ParityReport& rep) {
  const Grid3& g = w.grid;
  const int mid = (g.n[2] - 1) / 2;
  for (int k = 0; k <= mid; ++k)
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const std::size_t p = g.index(i, j, mid + k), q = g.index(i, j, mid - k);
        for (const auto& c : w.comp) {
          rep.max_even = std::max(rep.max_even, std::abs(0.5 * (c[p] + c[q])));
          rep.max_odd = std::max(rep.max_odd, std::abs(0.5 * (c[p] - c[q])));
          if (k == 0) rep.max_on_plane = std::max(rep.max_on_plane, std::abs(c[p]));
        }
      }
}

inline VelocityField restrict_to_half(const VelocityField& w, const Grid3& half) {
  VelocityField out(half, w.time);
  const int shift = half.n[2] - 1;
  for (int k = 0; k < half.n[2]; ++k)
    for (int j = 0; j < half.n[1]; ++j)
      for (int i = 0; i < half.n[0]; ++i)
        for (std::size_t c = 0; c < 3; ++c)
          out.comp[c][half.index(i, j, k)] = w.comp[c][w.grid.index(i, j, k + shift)];
  return out;
}

/// Solves w_t = Lap w + F on a dirichlet_zero box with zero data.
inline HeatResult heat_solve_doubled(const Grid3& box, const SourceFn& source, const HeatConfig& cfg) {
  if (box.kind != BoundaryKind::dirichlet_zero) throw InvalidArgument("heat_solve_doubled: expected a dirichlet_zero box");
  if (!(cfg.dt > 0.0) || cfg.dt > box.h * box.h / 6.0 * (1.0 + 1e-12))
    throw InvalidArgument("heat solve dt violates the CFL bound h^2/6");
  HeatResult res;
  VelocityField w(box, 0.0);
  res.doubled.push_back(w);
  accumulate_parity(w, res.parity);
  const long steps = std::lround(cfg.t_end / cfg.dt);
  auto rhs = [&](const VelocityField& v, double t) {
    VelocityField out = laplacian(v);
    const VelocityField f = source(box, t);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < box.size(); ++p)
        out.comp[c][p] = box.is_wall(p) ? 0.0 : out.comp[c][p] + f.comp[c][p];
    return out;
  };
  for (long s = 1; s <= steps; ++s) {
    const double t = static_cast<double>(s - 1) * cfg.dt, t1 = static_cast<double>(s) * cfg.dt;
    const VelocityField k1 = rhs(w, t);
    VelocityField mid(box, t1);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < box.size(); ++p) mid.comp[c][p] = w.comp[c][p] + cfg.dt * k1.comp[c][p];
    const VelocityField k2 = rhs(mid, t1);
    VelocityField next(box, t1);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < box.size(); ++p)
        next.comp[c][p] = w.comp[c][p] + 0.5 * cfg.dt * (k1.comp[c][p] + k2.comp[c][p]);
    zero_walls(next);
    w = std::move(next);
    accumulate_parity(w, res.parity);
    if (s % cfg.snapshot_stride == 0 || s == steps) res.doubled.push_back(w);
  }
  return res;
}

/// Odd extension of a half-space source. Values on x3 = 0 are dropped (the
/// extension is zero there); their magnitude is reported as the trace
/// incompatibility.
inline VelocityField odd_extension(const VelocityField& f_half, const Grid3& box, double* trace_max = nullptr) {
  const Grid3& half = f_half.grid;
  VelocityField out(box, f_half.time);
  const int shift = half.n[2] - 1;
  double trace = 0.0;
  for (int k = 0; k < half.n[2]; ++k)
    for (int j = 0; j < half.n[1]; ++j)
      for (int i = 0; i < half.n[0]; ++i)
        for (std::size_t c = 0; c < 3; ++c) {
          const double v = f_half.comp[c][half.index(i, j, k)];
          if (k == 0) {
            trace = std::max(trace, std::abs(v));
            continue;
          }
          out.comp[c][box.index(i, j, shift + k)] = v;
          out.comp[c][box.index(i, j, shift - k)] = -v;
        }
  if (trace_max) *trace_max = std::max(*trace_max, trace);
  return out;
}

inline HeatResult heat_solve_odd(const Grid3& half, const SourceFn& f_half, const HeatConfig& cfg) {
  const Grid3 box = doubled_grid(half);
  double trace = 0.0;
  SourceFn ext = [&](const Grid3& b, double t) { return odd_extension(f_half(half, t), b, &trace); };
  HeatResult res = heat_solve_doubled(box, ext, cfg);
  res.parity.trace_incompatibility = trace;
  res.parity.even_relative = res.parity.max_odd > 0.0 ? res.parity.max_even / res.parity.max_odd
                                                      : (res.parity.max_even > 0.0 ? INFINITY : 0.0);
  for (const auto& w : res.doubled) res.half.push_back(restrict_to_half(w, half));
  return res;
}

inline void finalize_parity(ParityReport& p) {
  p.even_relative = p.max_odd > 0.0 ? p.max_even / p.max_odd : (p.max_even > 0.0 ? INFINITY : 0.0);
}

}  // namespace toyns
