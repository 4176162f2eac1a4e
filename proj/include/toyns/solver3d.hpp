#pragma once

// Explicit Heun (RK2) integration of
//   u_t = Lap u - S(u, grad u) + f,   S = (u . grad) u + 1/2 u div u
// on periodic, no-slip (dirichlet_zero) or half-space grids.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toyns/field.hpp"
#include "toyns/operators.hpp"

namespace toyns {

using ForcingFn = std::function<VelocityField(const Grid3&, double)>;
using BoundaryFn = std::function<Vec3(const Vec3&, double)>;

struct SolverConfig {
  double dt = 1e-3;
  double t_end = 0.0;
  double cfl_safety = 1.0;
  ForcingFn forcing;       // optional source term
  BoundaryFn boundary;     // optional wall data; homogeneous no-slip when empty
  int snapshot_stride = 1;
  double blowup_threshold = 1e6;

  /// Largest admissible step for the explicit diffusion part.
  static double cfl_bound(const Grid3& g, double safety) { return safety * g.h * g.h / 6.0; }

  void validate(const Grid3& g) const {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidArgument("cfl_safety must lie in (0, 1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    const double bound = cfl_bound(g, cfl_safety);
    if (dt > bound * (1.0 + 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "dt = " << dt << " violates the explicit diffusion CFL bound cfl_safety*h^2/6 = " << bound
         << " (h = " << g.h << ", cfl_safety = " << cfl_safety << ")";
      throw InvalidArgument(os.str());
    }
    if (snapshot_stride < 1) throw InvalidArgument("snapshot_stride must be >= 1");
    if (!(blowup_threshold > 0.0)) throw InvalidArgument("blowup_threshold must be positive");
    if (boundary && g.kind != BoundaryKind::dirichlet_zero)
      throw InvalidArgument("boundary data callback requires a dirichlet_zero grid");
  }
};

struct EnergyLedger {
  double time = 0.0;
  double kinetic = 0.0;          // 1/2 int |u|^2
  double dissipation_cum = 0.0;  // int_0^t int |grad u|^2 (edge form)
  double initial_kinetic = 0.0;
  double residual = 0.0;         // kinetic + dissipation_cum - initial_kinetic
};

struct FailureInfo {
  std::string message;
  double time = 0.0;
  Vec3 location{};
  double max_value = 0.0;
};

struct RunResult {
  std::vector<VelocityField> snapshots;
  std::vector<EnergyLedger> ledger;
  std::optional<FailureInfo> failure;
};

/// S(u, grad u) = (u . grad) u + 1/2 u div u at every node.
inline VelocityField nonlinear_term(const VelocityField& u) {
  const TensorField g = gradient(u);
  VelocityField s(u.grid, u.time);
  parallel_for(u.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const double u0 = u.comp[0][p], u1 = u.comp[1][p], u2 = u.comp[2][p];
      const double div = g(0, 0, p) + g(1, 1, p) + g(2, 2, p);
      for (int i = 0; i < 3; ++i) {
        const double adv = u0 * g(i, 0, p) + u1 * g(i, 1, p) + u2 * g(i, 2, p);
        s.comp[static_cast<std::size_t>(i)][p] = adv + 0.5 * u.comp[static_cast<std::size_t>(i)][p] * div;
      }
    }
  });
  return s;
}

/// Lap u - S(u) + f(t); zero on wall nodes.
inline VelocityField toy_rhs(const VelocityField& u, double t, const SolverConfig& cfg) {
  VelocityField out = laplacian(u);
  const VelocityField s = nonlinear_term(u);
  std::optional<VelocityField> f;
  if (cfg.forcing) f = cfg.forcing(u.grid, t);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < u.size(); ++p) {
      if (u.grid.is_wall(p)) {
        out.comp[c][p] = 0.0;
        continue;
      }
      out.comp[c][p] -= s.comp[c][p];
      if (f) out.comp[c][p] += f->comp[c][p];
    }
  return out;
}

inline void impose_walls(VelocityField& u, double t, const SolverConfig& cfg) {
  if (u.grid.periodic()) return;
  for (std::size_t p = 0; p < u.size(); ++p)
    if (u.grid.is_wall(p)) u.set(p, cfg.boundary ? cfg.boundary(u.grid.position(p), t) : Vec3{0.0, 0.0, 0.0});
}

/// Throws NumericalFailure on non-finite values or max |u| above threshold.
inline void check_state(const VelocityField& u, double threshold) {
  std::size_t worst = 0;
  double worst_mag = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    const double m = norm(u.at(p));
    if (!std::isfinite(m)) {
      worst = p;
      worst_mag = m;
      break;
    }
    if (m > worst_mag) {
      worst_mag = m;
      worst = p;
    }
  }
  if (!std::isfinite(worst_mag) || worst_mag > threshold) {
    std::ostringstream os;
    os.precision(17);
    os << "blow-up/instability detected at t = " << u.time << ": max|u| = " << worst_mag << " at "
       << describe_node(u.grid, worst);
    throw NumericalFailure(os.str(), u.time, u.grid.position(worst), worst_mag);
  }
}

/// One Heun step of length dt (cfg.dt unless overridden).
inline VelocityField step(const VelocityField& u, const SolverConfig& cfg, std::optional<double> dt_override = {}) {
  cfg.validate(u.grid);
  const double dt = dt_override.value_or(cfg.dt);
  const double t = u.time;
  const double t1 = t + dt;
  const VelocityField k1 = toy_rhs(u, t, cfg);
  VelocityField mid(u.grid, t1);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < u.size(); ++p) mid.comp[c][p] = u.comp[c][p] + dt * k1.comp[c][p];
  impose_walls(mid, t1, cfg);
  check_state(mid, cfg.blowup_threshold);
  const VelocityField k2 = toy_rhs(mid, t1, cfg);
  VelocityField out(u.grid, t1);
  const double half = 0.5 * dt;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < u.size(); ++p)
      out.comp[c][p] = u.comp[c][p] + half * (k1.comp[c][p] + k2.comp[c][p]);
  impose_walls(out, t1, cfg);
  check_state(out, cfg.blowup_threshold);
  return out;
}

/// Step count and final step length covering [t_start, t_end].
struct StepPlan {
  long steps = 0;
  double last_dt = 0.0;
};

inline StepPlan plan_steps(double t_start, double t_end, double dt) {
  const double span = t_end - t_start;
  if (span <= 0.0) return {0, 0.0};
  const double q = span / dt;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, q)) return {static_cast<long>(r), dt};
  const long full = static_cast<long>(std::floor(q));
  return {full + 1, span - static_cast<double>(full) * dt};
}

inline EnergyLedger ledger_entry(const VelocityField& u, double initial, double dissipation) {
  EnergyLedger e;
  e.time = u.time;
  e.kinetic = kinetic_energy(u);
  e.initial_kinetic = initial;
  e.dissipation_cum = dissipation;
  e.residual = e.kinetic + dissipation - initial;
  return e;
}

/// Integrates from u0.time to cfg.t_end. Snapshots at step 0, every
/// snapshot_stride steps, and the final step. On blow-up the partial history
/// is returned together with the failure; it ends at the last finite state.
inline RunResult run(const VelocityField& u0, const SolverConfig& cfg) {
  cfg.validate(u0.grid);
  require_finite(u0, "run");
  RunResult out;
  VelocityField u = u0;
  impose_walls(u, u.time, cfg);
  const double e0 = kinetic_energy(u);
  double diss = 0.0;
  double rate = dirichlet_form(u);
  out.snapshots.push_back(u);
  out.ledger.push_back(ledger_entry(u, e0, 0.0));

  const StepPlan plan = plan_steps(u0.time, cfg.t_end, cfg.dt);
  for (long s = 1; s <= plan.steps; ++s) {
    const double dt = s == plan.steps ? plan.last_dt : cfg.dt;
    VelocityField next;
    try {
      next = step(u, cfg, dt);
    } catch (const NumericalFailure& f) {
      out.failure = FailureInfo{f.what(), f.time(), f.location(), f.max_value()};
      if (out.snapshots.back().time != u.time) out.snapshots.push_back(u);
      return out;
    }
    if (s == plan.steps) next.time = cfg.t_end;
    else next.time = u0.time + static_cast<double>(s) * cfg.dt;
    const double next_rate = dirichlet_form(next);
    diss += 0.5 * dt * (rate + next_rate);
    rate = next_rate;
    u = std::move(next);
    out.ledger.push_back(ledger_entry(u, e0, diss));
    if (s % cfg.snapshot_stride == 0 || s == plan.steps) out.snapshots.push_back(u);
  }
  return out;
}

}  // namespace toyns
