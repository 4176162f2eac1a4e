#pragma once

// Smooth cut-off functions with exact 0/1 plateaus.

#include <cmath>

#include "toyns/error.hpp"
#include "toyns/grid.hpp"

namespace toyns {

namespace detail {

inline double bump_g(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
inline double bump_g1(double x) { return x > 0.0 ? bump_g(x) / (x * x) : 0.0; }
inline double bump_g2(double x) { return x > 0.0 ? bump_g(x) * (1.0 - 2.0 * x) / (x * x * x * x) : 0.0; }

struct StepValue {
  double v, d1, d2;
};

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
inline StepValue smooth_step(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  const double a = bump_g(s), b = bump_g(1.0 - s);
  const double a1 = bump_g1(s), b1 = -bump_g1(1.0 - s);
  const double a2 = bump_g2(s), b2 = bump_g2(1.0 - s);
  const double d = a + b;
  const double num = a1 * b - a * b1;
  return {a / d, num / (d * d), (a2 * b - a * b2) / (d * d) - 2.0 * num * (a1 + b1) / (d * d * d)};
}

}  // namespace detail

enum class CutoffKind { space_bump, time_ramp };

/// space_bump: 1 for distance <= inner, 0 for distance >= outer.
/// time_ramp:  evaluated at tau = t - t_ref; 0 for tau <= -outer,
///             1 for tau >= -inner (the smoothed chi of the Caccioppoli
///             argument with inner = 1, outer = 4 in rescaled time).
struct Cutoff {
  CutoffKind kind = CutoffKind::space_bump;
  double inner_radius = 0.5;
  double outer_radius = 1.0;

  Cutoff() = default;
  Cutoff(CutoffKind k, double inner, double outer) : kind(k), inner_radius(inner), outer_radius(outer) {
    if (!(inner > 0.0 && inner < outer))
      throw InvalidArgument("cutoff requires 0 < inner_radius < outer_radius");
  }

  double width() const { return outer_radius - inner_radius; }

  double value(double s) const { return eval(s).v; }
  double derivative(double s) const { return eval(s).d1; }
  double second_derivative(double s) const { return eval(s).d2; }

  detail::StepValue eval(double s) const {
    const double w = width();
    if (kind == CutoffKind::space_bump) {
      const auto st = detail::smooth_step((outer_radius - s) / w);
      return {st.v, -st.d1 / w, st.d2 / (w * w)};
    }
    const auto st = detail::smooth_step((s + outer_radius) / w);
    return {st.v, st.d1 / w, st.d2 / (w * w)};
  }
};

/// phi(x, t) = space(|x - x0|) * time(t - t0); a missing space factor means
/// phi is spatially constant (periodic domains only).
struct TestFunction {
  Vec3 x0{};
  double t0 = 0.0;
  bool has_space = true;
  Cutoff space{CutoffKind::space_bump, 0.5, 1.0};
  Cutoff time{CutoffKind::time_ramp, 0.25, 1.0};

  struct Value {
    double phi, dt_phi, lap_phi;
    Vec3 grad_phi;
  };

  Value eval(const Vec3& x, double t) const {
    const auto tv = time.eval(t - t0);
    if (!has_space) return {tv.v, tv.d1, 0.0, {0.0, 0.0, 0.0}};
    const Vec3 d{x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]};
    const double rho = norm(d);
    const auto sv = space.eval(rho);
    Vec3 grad{0.0, 0.0, 0.0};
    double lap = 0.0;
    if (rho > 0.0) {
      for (std::size_t a = 0; a < 3; ++a) grad[a] = tv.v * sv.d1 * d[a] / rho;
      lap = tv.v * (sv.d2 + 2.0 * sv.d1 / rho);
    } else {
      lap = 3.0 * tv.v * sv.d2;
    }
    return {sv.v * tv.v, sv.v * tv.d1, lap, grad};
  }
};

}  // namespace toyns
