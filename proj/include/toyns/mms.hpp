#pragma once

// Manufactured solutions.
//
// "discrete" forcing: f = d/dt u_exact - Lap_h u_exact + S_h(u_exact) using
// the solver's own stencils, so the sampled exact field solves the
// semi-discrete system and only time-integration error remains.
// "continuum" forcing uses the analytic derivatives, so the measured error
// also contains the spatial truncation error.

#include <functional>
#include <numbers>

#include "toyns/solver3d.hpp"

namespace toyns {

struct ManufacturedField {
  std::function<Vec3(const Vec3&, double)> value;
  std::function<Vec3(const Vec3&, double)> time_derivative;
  std::function<Mat3(const Vec3&, double)> gradient;   // (i,j) = d u_i / d x_j; continuum mode only
  std::function<Vec3(const Vec3&, double)> laplacian;  // continuum mode only
};

enum class MmsMode { discrete, continuum };

inline VelocityField sample(const ManufacturedField& m, const Grid3& g, double t) {
  return VelocityField::sample(g, t, [&](const Vec3& x) { return m.value(x, t); });
}

inline VelocityField mms_forcing(const ManufacturedField& m, const Grid3& g, double t,
                                 MmsMode mode = MmsMode::discrete) {
  VelocityField f(g, t);
  if (mode == MmsMode::discrete) {
    const VelocityField ue = sample(m, g, t);
    const VelocityField lap = laplacian(ue);
    const VelocityField s = nonlinear_term(ue);
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (g.is_wall(p)) continue;
      const Vec3 dt = m.time_derivative(g.position(p), t);
      for (std::size_t c = 0; c < 3; ++c) f.comp[c][p] = dt[c] - lap.comp[c][p] + s.comp[c][p];
    }
    return f;
  }
  if (!m.gradient || !m.laplacian) throw InvalidArgument("continuum MMS needs analytic gradient and laplacian");
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (g.is_wall(p)) continue;
    const Vec3 x = g.position(p);
    const Vec3 u = m.value(x, t), dt = m.time_derivative(x, t), lap = m.laplacian(x, t);
    const Mat3 G = m.gradient(x, t);
    const double div = G[0] + G[4] + G[8];
    for (std::size_t i = 0; i < 3; ++i) {
      const double adv = u[0] * G[3 * i] + u[1] * G[3 * i + 1] + u[2] * G[3 * i + 2];
      f.comp[i][p] = dt[i] - lap[i] + adv + 0.5 * u[i] * div;
    }
  }
  return f;
}

inline ForcingFn make_forcing(ManufacturedField m, MmsMode mode) {
  return [m = std::move(m), mode](const Grid3& g, double t) { return mms_forcing(m, g, t, mode); };
}

/// u = a e^{-beta t} (sin(k x2) cos(k x3), sin(k x3), cos(k x1) sin(k x2)) with
/// k = 2 pi / period: a nonlinear, non-solenoidal single-wavenumber field.
inline ManufacturedField decaying_mode(double amplitude, double beta, double period) {
  const double k = 2.0 * std::numbers::pi / period;
  ManufacturedField m;
  m.value = [=](const Vec3& x, double t) {
    const double a = amplitude * std::exp(-beta * t);
    return Vec3{a * std::sin(k * x[1]) * std::cos(k * x[2]), a * std::sin(k * x[2]),
                a * std::cos(k * x[0]) * std::sin(k * x[1])};
  };
  m.time_derivative = [=](const Vec3& x, double t) {
    const double a = -beta * amplitude * std::exp(-beta * t);
    return Vec3{a * std::sin(k * x[1]) * std::cos(k * x[2]), a * std::sin(k * x[2]),
                a * std::cos(k * x[0]) * std::sin(k * x[1])};
  };
  m.gradient = [=](const Vec3& x, double t) {
    const double a = amplitude * std::exp(-beta * t);
    const double s0 = std::sin(k * x[0]), c0 = std::cos(k * x[0]);
    const double s1 = std::sin(k * x[1]), c1 = std::cos(k * x[1]);
    const double s2 = std::sin(k * x[2]), c2 = std::cos(k * x[2]);
    return Mat3{0.0, a * k * c1 * c2, -a * k * s1 * s2,  //
                0.0, 0.0, a * k * c2,                    //
                -a * k * s0 * s1, a * k * c0 * c1, 0.0};
  };
  m.laplacian = [=](const Vec3& x, double t) {
    const double a = amplitude * std::exp(-beta * t);
    return Vec3{-2.0 * k * k * a * std::sin(k * x[1]) * std::cos(k * x[2]), -k * k * a * std::sin(k * x[2]),
                -2.0 * k * k * a * std::cos(k * x[0]) * std::sin(k * x[1])};
  };
  return m;
}

/// Shear heat mode (a e^{-k^2 t} sin(k x3), 0, 0): an exact unforced solution.
inline ManufacturedField shear_heat_mode(double amplitude, double period) {
  const double k = 2.0 * std::numbers::pi / period;
  ManufacturedField m;
  m.value = [=](const Vec3& x, double t) {
    return Vec3{amplitude * std::exp(-k * k * t) * std::sin(k * x[2]), 0.0, 0.0};
  };
  m.time_derivative = [=](const Vec3& x, double t) {
    return Vec3{-k * k * amplitude * std::exp(-k * k * t) * std::sin(k * x[2]), 0.0, 0.0};
  };
  m.gradient = [=](const Vec3& x, double t) {
    return Mat3{0.0, 0.0, k * amplitude * std::exp(-k * k * t) * std::cos(k * x[2]), 0, 0, 0, 0, 0, 0};
  };
  m.laplacian = [=](const Vec3& x, double t) {
    return Vec3{-k * k * amplitude * std::exp(-k * k * t) * std::sin(k * x[2]), 0.0, 0.0};
  };
  return m;
}

}  // namespace toyns
