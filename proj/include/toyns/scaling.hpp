#pragma once

// The scaling symmetry u^lambda(y, s) = lambda u(x0 + lambda y, t0 + lambda^2 s)
// applied to discrete fields, the solve/rescale commutation check and zoom
// sequences toward a point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toyns/diagnostics.hpp"
#include "toyns/solver3d.hpp"

namespace toyns {

enum class RescaleMode { exact, interpolated };

inline const char* to_string(RescaleMode m) { return m == RescaleMode::exact ? "exact" : "interpolated"; }

struct RescaleSpec {
  double lambda = 1.0;
  Vec3 anchor_x{};
  double anchor_t = 0.0;
};

struct RescaleResult {
  VelocityField field;
  RescaleMode mode = RescaleMode::exact;
  double interpolation_bound = 0.0;  // 0 in exact mode
};

inline bool is_dyadic(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) return false;
  int e = 0;
  return std::frexp(lambda, &e) == 0.5;
}

inline bool on_node(const Grid3& g, const Vec3& x) {
  for (std::size_t a = 0; a < 3; ++a) {
    const double q = (x[a] - g.origin[a]) / g.h;
    if (std::abs(q - std::round(q)) > 1e-9) return false;
  }
  return true;
}

/// Same node array with spacing h / lambda and origin (o - x0) / lambda;
/// values lambda u, time (t - t0) / lambda^2. Requires dyadic lambda and an
/// anchor on a node, so every operation is a power-of-two scaling.
inline VelocityField rescale_exact(const VelocityField& u, const RescaleSpec& s) {
  if (!is_dyadic(s.lambda)) throw InvalidArgument("exact rescale requires lambda = 2^k");
  if (!on_node(u.grid, s.anchor_x)) throw InvalidArgument("exact rescale requires the anchor on a grid node");
  const double inv = 1.0 / s.lambda;
  Grid3 g = u.grid;
  g.h = u.grid.h * inv;
  for (std::size_t a = 0; a < 3; ++a) g.origin[a] = (u.grid.origin[a] - s.anchor_x[a]) * inv;
  VelocityField out(g, (u.time - s.anchor_t) * inv * inv);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < u.size(); ++p) out.comp[c][p] = s.lambda * u.comp[c][p];
  return out;
}

/// Trilinear sample of one component at a physical point (periodic wrap or
/// inside the box).
inline double trilinear(const Grid3& g, std::span<const double> f, const Vec3& x) {
  std::array<int, 3> i0{};
  std::array<double, 3> w{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double q = (x[a] - g.origin[a]) / g.h;
    double fl = std::floor(q);
    if (!g.periodic()) {
      const double last = static_cast<double>(g.n[a] - 1);
      if (q < -1e-9 || q > last + 1e-9) throw InvalidArgument("interpolation point outside the grid domain");
      fl = std::clamp(fl, 0.0, last - 1.0);
    }
    i0[a] = static_cast<int>(fl);
    w[a] = std::clamp(q - fl, 0.0, 1.0);
    if (std::abs(w[a]) < 1e-12) w[a] = 0.0;
    if (std::abs(w[a] - 1.0) < 1e-12) {
      w[a] = 0.0;
      ++i0[a];
    }
  }
  auto at = [&](int di, int dj, int dk) {
    std::array<int, 3> c{i0[0] + di, i0[1] + dj, i0[2] + dk};
    for (std::size_t a = 0; a < 3; ++a)
      if (g.periodic()) c[a] = ((c[a] % g.n[a]) + g.n[a]) % g.n[a];
      else c[a] = std::min(c[a], g.n[a] - 1);
    return f[g.index(c[0], c[1], c[2])];
  };
  double s = 0.0;
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < 2; ++dj)
      for (int di = 0; di < 2; ++di) {
        const double wt = (di ? w[0] : 1 - w[0]) * (dj ? w[1] : 1 - w[1]) * (dk ? w[2] : 1 - w[2]);
        if (wt != 0.0) s += wt * at(di, dj, dk);
      }
  return s;
}

/// lambda u(x0 + lambda (x - x0)) on the same grid geometry by trilinear
/// interpolation; time tag (t - t0) / lambda^2. The reported bound is
/// lambda (1/8) sum_a max |second difference along a|, the trilinear error
/// estimate at the source resolution.
inline RescaleResult rescale_interpolated(const VelocityField& u, const RescaleSpec& s) {
  if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) throw InvalidArgument("lambda must be positive");
  const Grid3& g = u.grid;
  RescaleResult r;
  r.mode = RescaleMode::interpolated;
  r.field = VelocityField(g, (u.time - s.anchor_t) / (s.lambda * s.lambda));
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Vec3 x = g.position(p);
    const Vec3 y{s.anchor_x[0] + s.lambda * (x[0] - s.anchor_x[0]), s.anchor_x[1] + s.lambda * (x[1] - s.anchor_x[1]),
                 s.anchor_x[2] + s.lambda * (x[2] - s.anchor_x[2])};
    for (std::size_t c = 0; c < 3; ++c) r.field.comp[c][p] = s.lambda * trilinear(g, u.comp[c], y);
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < g.size(); ++p) {
      const auto ijk = g.coords(p);
      double sum = 0.0;
      for (int a = 0; a < 3; ++a) {
        std::array<int, 3> lo = ijk, hi = ijk;
        const auto sa = static_cast<std::size_t>(a);
        --lo[sa];
        ++hi[sa];
        if (g.periodic()) {
          lo[sa] = (lo[sa] + g.n[sa]) % g.n[sa];
          hi[sa] = hi[sa] % g.n[sa];
        } else if (lo[sa] < 0 || hi[sa] >= g.n[sa]) continue;
        sum += std::abs(u.comp[c][g.index(lo[0], lo[1], lo[2])] - 2.0 * u.comp[c][p] +
                        u.comp[c][g.index(hi[0], hi[1], hi[2])]);
      }
      worst = std::max(worst, sum);
    }
  r.interpolation_bound = s.lambda * worst / 8.0;
  return r;
}

/// Exact mode for dyadic lambda with a node anchor, interpolated otherwise.
inline RescaleResult rescale(const VelocityField& u, const RescaleSpec& s) {
  if (is_dyadic(s.lambda) && on_node(u.grid, s.anchor_x)) return {rescale_exact(u, s), RescaleMode::exact, 0.0};
  return rescale_interpolated(u, s);
}

/// Forced mode; exact mode throws when lambda or the anchor does not allow it.
inline RescaleResult rescale(const VelocityField& u, const RescaleSpec& s, RescaleMode mode) {
  if (mode == RescaleMode::interpolated) return rescale_interpolated(u, s);
  if (!is_dyadic(s.lambda)) throw InvalidArgument("exact rescale needs a dyadic lambda");
  if (!on_node(u.grid, s.anchor_x)) throw InvalidArgument("exact rescale needs the anchor on a grid node");
  return {rescale_exact(u, s), RescaleMode::exact, 0.0};
}

struct EquivarianceReport {
  double lambda = 1.0;
  RescaleMode mode = RescaleMode::exact;
  double deviation = 0.0;  // max |A - B| / max |A|
  long steps = 0;
  double physical_time = 0.0;
  double interpolation_bound = 0.0;
};

/// Solve then rescale versus rescale then solve. The rescaled run uses
/// dt / lambda^2 so both runs take the same number of steps.
inline EquivarianceReport equivariance_check(const VelocityField& u0, SolverConfig cfg, double lambda,
                                             std::optional<RescaleMode> mode = {}) {
  if (!u0.grid.periodic()) throw InvalidArgument("equivariance_check requires a periodic grid");
  if (cfg.forcing || cfg.boundary) throw InvalidArgument("equivariance_check runs the unforced periodic problem");
  cfg.snapshot_stride = std::numeric_limits<int>::max();
  const RescaleSpec spec{lambda, u0.grid.origin, u0.time};
  const auto solved = run(u0, cfg);
  if (solved.failure) throw NumericalFailure(solved.failure->message, solved.failure->time, solved.failure->location,
                                             solved.failure->max_value);
  auto resc = [&](const VelocityField& f) { return mode ? rescale(f, spec, *mode) : rescale(f, spec); };
  const auto A = resc(solved.snapshots.back());

  const auto s0 = resc(u0);
  SolverConfig scaled = cfg;
  const double l2 = lambda * lambda;
  scaled.dt = cfg.dt / l2;
  scaled.t_end = (cfg.t_end - u0.time) / l2;
  const auto B = run(s0.field, scaled);
  if (B.failure) throw NumericalFailure(B.failure->message, B.failure->time, B.failure->location, B.failure->max_value);

  EquivarianceReport rep;
  rep.lambda = lambda;
  rep.mode = s0.mode;
  rep.steps = plan_steps(u0.time, cfg.t_end, cfg.dt).steps;
  rep.physical_time = cfg.t_end;
  rep.interpolation_bound = std::max(A.interpolation_bound, s0.interpolation_bound);
  const double m = max_magnitude(A.field);
  const double d = max_abs_difference(A.field, B.snapshots.back());
  rep.deviation = m > 0.0 ? d / m : d;
  return rep;
}

struct ZoomLevel {
  int k = 0;
  double lambda = 1.0;  // 2^{-k}
  std::vector<VelocityField> snapshots;  // rescaled slab snapshots
  ScaledQuantities quantities;           // on Q(0, 1) in zoomed coordinates
  double sup_speed = 0.0;                // max |u_k| over Q(1) nodes
  double sup_weighted = 0.0;             // max |y|^{2/3} |u_k| over Q(1) nodes, y != 0
  double sup_homogeneous = 0.0;          // max |y| |u_k| over Q(1) nodes
};

struct ZoomSequence {
  std::vector<ZoomLevel> levels;
  std::optional<std::string> notice;  // set when the sequence stops early
};

/// u_k(y, s) = 2^{-k} u(x0 + 2^{-k} y, t0 + 4^{-k} s) for k = 0..K, each
/// restricted to Q(0, 1). Stops with a notice when Q(z0, 2^{-k}) is no longer
/// resolved in space (radius below 2h) or time (fewer than 4 snapshots).
inline ZoomSequence zoom_sequence(std::span<const VelocityField> snapshots, const SpaceTimePoint& z0, int K) {
  if (snapshots.empty()) throw InvalidArgument("zoom_sequence: no snapshots");
  if (K < 0) throw InvalidArgument("zoom_sequence: K must be >= 0");
  const Grid3& g = snapshots.front().grid;
  if (!on_node(g, z0.x)) throw InvalidArgument("zoom anchor must be a grid node");
  if (!ball_inside_domain(g, {z0.x, 1.0})) throw InvalidArgument("zoom needs Q(z0, 1) inside the domain");
  ZoomSequence seq;
  std::vector<double> times;
  for (const auto& s : snapshots) times.push_back(s.time);
  for (int k = 0; k <= K; ++k) {
    const double lam = std::ldexp(1.0, -k);
    const ParabolicCylinder q(z0.x, z0.t, lam);
    if (lam < 2.0 * g.h) {
      seq.notice = "zoom stopped at k = " + std::to_string(k) + ": radius 2^-k below two grid spacings";
      break;
    }
    const auto slab = slab_samples(times, q);
    if (slab.size() < 4) {
      seq.notice = "zoom stopped at k = " + std::to_string(k) + ": fewer than 4 snapshots in the time slab";
      break;
    }
    ZoomLevel lv;
    lv.k = k;
    lv.lambda = lam;
    const RescaleSpec spec{lam, z0.x, z0.t};
    // one snapshot below the slab keeps the time weights covered
    const std::size_t first = slab.front() > 0 && times[slab.front()] > q.t_lo() ? slab.front() - 1 : slab.front();
    for (std::size_t i = first; i <= slab.back(); ++i) lv.snapshots.push_back(rescale_exact(snapshots[i], spec));
    const auto hist = pointwise_history(lv.snapshots);
    const ParabolicCylinder unit({0.0, 0.0, 0.0}, 0.0, 1.0);
    lv.quantities = scaled_quantities(hist, unit);
    const BallNodes bn = ball_nodes(hist.grid, unit.ball());
    for (std::size_t s : slab_samples(hist.times, unit))
      for (std::size_t p : bn.nodes) {
        const double sp = hist.speed[s][p];
        const double ry = norm(hist.grid.position(p));
        lv.sup_speed = std::max(lv.sup_speed, sp);
        lv.sup_homogeneous = std::max(lv.sup_homogeneous, ry * sp);
        if (ry > 0.0) lv.sup_weighted = std::max(lv.sup_weighted, std::pow(ry, 2.0 / 3.0) * sp);
      }
    seq.levels.push_back(std::move(lv));
  }
  return seq;
}

}  // namespace toyns
