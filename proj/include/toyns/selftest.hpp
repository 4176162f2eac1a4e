#pragma once

// The trivial example suite of every module, runnable from the CLI.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "toyns/bmo.hpp"
#include "toyns/diagnostics.hpp"
#include "toyns/heat_odd.hpp"
#include "toyns/local_energy.hpp"
#include "toyns/mms.hpp"
#include "toyns/radial.hpp"
#include "toyns/random_field.hpp"
#include "toyns/scaling.hpp"
#include "toyns/solver3d.hpp"

namespace toyns {

struct SelfCheck {
  std::string module;
  std::string name;
  std::function<bool()> body;
};

struct SelfCheckResult {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;  // exception text when the body threw
};

namespace detail {

inline bool all_zero(const VelocityField& u) {
  for (const auto& c : u.comp)
    for (double v : c)
      if (v != 0.0) return false;
  return true;
}

inline bool all_zero(const TensorField& t) {
  for (const auto& c : t.comp)
    for (double v : c)
      if (v != 0.0) return false;
  return true;
}

template <class F>
bool throws_invalid(F&& f) {
  try {
    f();
  } catch (const InvalidArgument&) {
    return true;
  }
  return false;
}

inline std::vector<VelocityField> frozen(const VelocityField& u, double dt, int steps) {
  std::vector<VelocityField> h;
  for (int k = 0; k <= steps; ++k) {
    h.push_back(u);
    h.back().time = dt * k;
  }
  return h;
}

inline VelocityField constant_field(const Grid3& g, Vec3 c) {
  return VelocityField::sample(g, 0.0, [&](const Vec3&) { return c; });
}

inline VelocityField shear_field(const Grid3& g) {
  return VelocityField::sample(g, 0.0, [](const Vec3& x) { return Vec3{std::sin(6.283185307179586 * x[2]), 0.0, 0.0}; });
}

}  // namespace detail

inline std::vector<SelfCheck> selftest_checks() {
  using namespace detail;
  std::vector<SelfCheck> c;
  const Grid3 per = Grid3::periodic_cube(8, 1.0);
  const Grid3 box = Grid3::dirichlet_cube(9, -1.0, 1.0);

  // field-core
  c.push_back({"field-core", "gradient of zero is zero", [=] { return all_zero(gradient(VelocityField(per, 0.0))); }});
  c.push_back({"field-core", "gradient of a constant is zero",
               [=] { return all_zero(gradient(constant_field(per, {1.25, -3.0, 0.7}))); }});
  c.push_back({"field-core", "divergence of zero is zero", [=] {
                 for (double v : divergence(VelocityField(per, 0.0)).values)
                   if (v != 0.0) return false;
                 return true;
               }});
  c.push_back({"field-core", "divergence of x is 3", [=] {
                 const auto d = divergence(VelocityField::sample(box, 0.0, [](const Vec3& x) { return x; }));
                 for (std::size_t p = 0; p < box.size(); ++p)
                   if (!box.is_wall(p) && d[p] != 3.0) return false;
                 return true;
               }});
  c.push_back({"field-core", "divergence of shear is zero", [=] {
                 for (double v : divergence(shear_field(per)).values)
                   if (v != 0.0) return false;
                 return true;
               }});
  c.push_back({"field-core", "ball integral of zero is zero",
               [=] { return integrate_ball(ScalarField(box, 0.0), {{0, 0, 0}, 0.5}) == 0.0; }});
  c.push_back({"field-core", "ball outside the domain is an error", [=] {
                 ScalarField one(box, 0.0);
                 std::fill(one.values.begin(), one.values.end(), 1.0);
                 return throws_invalid([&] { integrate_ball(one, {{5.0, 5.0, 5.0}, 0.5}); });
               }});
  c.push_back({"field-core", "cylinder integral of zero is zero", [=] {
                 std::vector<ScalarField> s;
                 for (int k = 0; k <= 8; ++k) s.emplace_back(box, -0.25 + 0.03125 * k);
                 return integrate_cylinder(s, ParabolicCylinder({0, 0, 0}, 0.0, 0.5)) == 0.0;
               }});
  c.push_back({"field-core", "cylinder with 2 snapshots is an error", [=] {
                 std::vector<ScalarField> s{ScalarField(box, -0.01), ScalarField(box, 0.0)};
                 return throws_invalid([&] { integrate_cylinder(s, ParabolicCylinder({0, 0, 0}, 0.0, 0.1)); });
               }});
  c.push_back({"field-core", "random field with amplitude 0 is zero", [] {
                 return all_zero(make_random_field(Grid3::periodic_cube(8, 6.283185307179586), 3, {1.0, 2.0}, 0.0));
               }});
  c.push_back({"field-core", "random field is reproducible", [] {
                 const Grid3 g = Grid3::periodic_cube(8, 6.283185307179586);
                 return make_random_field(g, 9, {1.0, 2.0}, 1.0).comp == make_random_field(g, 9, {1.0, 2.0}, 1.0).comp;
               }});

  // solver3d
  c.push_back({"solver3d", "nonlinear term of zero is zero", [=] { return all_zero(nonlinear_term(VelocityField(per, 0.0))); }});
  c.push_back({"solver3d", "nonlinear term of shear is zero", [=] { return all_zero(nonlinear_term(shear_field(per))); }});
  c.push_back({"solver3d", "constant field is a fixed point", [=] {
                 const auto u = constant_field(per, {0.5, -1.0, 2.0});
                 SolverConfig cfg;
                 cfg.dt = SolverConfig::cfl_bound(per, 0.9);
                 const auto v = step(u, cfg);
                 return max_abs_difference(u, v) <= 1e-13;
               }});
  c.push_back({"solver3d", "zero data stays zero", [=] {
                 SolverConfig cfg;
                 cfg.dt = SolverConfig::cfl_bound(per, 0.9);
                 cfg.t_end = 10 * cfg.dt;
                 const auto r = run(VelocityField(per, 0.0), cfg);
                 for (const auto& s : r.snapshots)
                   if (!all_zero(s)) return false;
                 for (const auto& e : r.ledger)
                   if (e.residual != 0.0) return false;
                 return !r.failure;
               }});
  c.push_back({"solver3d", "forcing for the zero solution is zero", [=] {
                 ManufacturedField m;
                 m.value = [](const Vec3&, double) { return Vec3{0, 0, 0}; };
                 m.time_derivative = m.value;
                 return all_zero(mms_forcing(m, per, 0.3));
               }});
  c.push_back({"solver3d", "forcing for a constant solution is zero", [=] {
                 ManufacturedField m;
                 m.value = [](const Vec3&, double) { return Vec3{1.5, -0.5, 2.0}; };
                 m.time_derivative = [](const Vec3&, double) { return Vec3{0, 0, 0}; };
                 return all_zero(mms_forcing(m, per, 0.3));
               }});
  c.push_back({"solver3d", "local energy of zero has both sides zero", [] {
                 const Grid3 g = Grid3::periodic_cube(16, 2.0);
                 std::vector<VelocityField> snaps;
                 for (int k = 0; k <= 8; ++k) snaps.emplace_back(g, 0.05 * k);
                 TestFunction phi;
                 phi.space = Cutoff(CutoffKind::space_bump, 0.3, 0.6);
                 phi.time = Cutoff(CutoffKind::time_ramp, 0.1, 0.3);
                 const auto rep = local_energy_residual(snaps, ParabolicCylinder({1, 1, 1}, 0.4, std::sqrt(0.4)), phi);
                 return rep.lhs == 0.0 && rep.rhs == 0.0;
               }});
  c.push_back({"solver3d", "odd heat solve of zero source is zero", [] {
                 const Grid3 half({9, 9, 6}, 0.125, {0, 0, 0}, BoundaryKind::half_space_odd);
                 const auto r = heat_solve_odd(half, [](const Grid3& g, double t) { return VelocityField(g, t); },
                                               {0.002, 0.02, 5});
                 for (const auto& w : r.half)
                   if (!all_zero(w)) return false;
                 return r.parity.even_relative == 0.0;
               }});
  c.push_back({"solver3d", "even source is reported as a parity violation", [] {
                 const Grid3 half({9, 9, 6}, 0.125, {0, 0, 0}, BoundaryKind::half_space_odd);
                 const double pi = 3.141592653589793;
                 SourceFn even = [&](const Grid3& g, double t) {
                   return VelocityField::sample(g, t, [&](const Vec3& x) {
                     return Vec3{std::sin(pi * x[0]) * std::sin(pi * x[1]) * std::cos(pi * x[2] / 1.25), 0, 0};
                   });
                 };
                 auto r = heat_solve_doubled(doubled_grid(half), even, {0.002, 0.02, 5});
                 finalize_parity(r.parity);
                 return r.parity.max_even > 0.0;
               }});

  // radial
  c.push_back({"radial", "rhs of zero is zero", [] {
                 for (double x : radial_rhs(RadialProfile(0.1, 11)))
                   if (x != 0.0) return false;
                 return true;
               }});
  c.push_back({"radial", "rhs of a constant is 5/2 c^2", [] {
                 const auto f = radial_rhs(RadialProfile::sample(0.1, 11, 0.0, [](double) { return -1.25; }));
                 for (std::size_t j = 0; j + 1 < f.size(); ++j)
                   if (f[j] != 2.5 * 1.25 * 1.25) return false;
                 return true;
               }});
  c.push_back({"radial", "zero data with zero wall stays zero", [] {
                 RadialConfig cfg;
                 cfg.dt = RadialConfig::cfl_bound(0.05, 0.9);
                 cfg.t_end = 20 * cfg.dt;
                 const auto r = radial_run(RadialProfile(0.05, 21), cfg, zero_radial_boundary());
                 for (const auto& p : r.history)
                   for (double x : p.v)
                     if (x != 0.0) return false;
                 return !r.failure;
               }});
  c.push_back({"radial", "weighted transform of zero is zero", [] {
                 for (double x : to_weighted(RadialProfile(0.01, 50)).w)
                   if (x != 0.0) return false;
                 return true;
               }});
  c.push_back({"radial", "weighted transform of r^-5/3 is 1", [] {
                 const auto p = RadialProfile::sample(0.01, 50, 0.0, [](double r) { return r > 0 ? std::pow(r, -5.0 / 3.0) : 0.0; });
                 const auto w = to_weighted(p);
                 for (std::size_t j = 1; j < w.w.size(); ++j)
                   if (std::abs(w.w[j] - 1.0) > 1e-14) return false;
                 return true;
               }});
  c.push_back({"radial", "weighted round trip to 1e-13", [] {
                 std::mt19937_64 rng(3);
                 std::uniform_real_distribution<double> U(-2.0, 2.0);
                 RadialProfile p(0.01, 50);
                 for (double& x : p.v) x = U(rng);
                 const auto back = from_weighted(to_weighted(p));
                 for (std::size_t j = 1; j < p.size(); ++j)
                   if (std::abs(back.v[j] - p.v[j]) > 1e-13 * std::abs(p.v[j])) return false;
                 return true;
               }});
  c.push_back({"radial", "max principle on zero history has no excess", [] {
                 std::vector<WeightedProfile> h;
                 for (int k = 0; k < 4; ++k) h.push_back(to_weighted(RadialProfile(0.05, 21, 0.1 * k)));
                 return max_principle_check(h, {0.1, 0.5, 0.0, 0.3}).excess == 0.0;
               }});
  c.push_back({"radial", "planted interior spike is detected", [] {
                 std::vector<WeightedProfile> h;
                 for (int k = 0; k < 4; ++k) h.push_back(to_weighted(RadialProfile(0.05, 21, 0.1 * k)));
                 h[2].w[5] = 1.0;
                 return max_principle_check(h, {0.1, 0.5, 0.0, 0.3}).excess > 0.0;
               }});
  c.push_back({"radial", "embed and extract of zero is zero", [=] {
                 const auto u = embed(RadialProfile(0.125, 16), box);
                 const auto e = extract(u, 0.125, 16);
                 for (double x : e.profile.v)
                   if (x != 0.0) return false;
                 return all_zero(u);
               }});
  c.push_back({"radial", "extract rejects a shear field", [=] {
                 const auto u = VelocityField::sample(box, 0.0, [](const Vec3& x) { return Vec3{1.0 + x[2], 0, 0}; });
                 return throws_invalid([&] { extract(u, 0.125, 16); });
               }});
  c.push_back({"radial", "amplitude 0 is classified decay", [] {
                 BlowupSearchConfig cfg;
                 cfg.solver.dt = RadialConfig::cfl_bound(0.1, 0.9);
                 cfg.solver.t_end = 0.05;
                 const ProfileFamily fam = [](double a) {
                   return RadialProfile::sample(0.1, 11, 0.0, [&](double r) { return a * std::exp(-r * r); });
                 };
                 const BoundaryFamily wall = [](double) { return zero_radial_boundary(); };
                 return classify_amplitude(0.0, fam, wall, cfg).verdict == BlowupClass::decay;
               }});

  // diagnostics
  const Grid3 dg = Grid3::periodic_cube(16, 2.0);
  c.push_back({"diagnostics", "scaled quantities of zero are zero", [=] {
                 const auto q = scaled_quantities(pointwise_history(frozen(VelocityField(dg, 0.0), 0.05, 8)),
                                                  ParabolicCylinder({1, 1, 1}, 0.4, 0.5));
                 return q.A == 0.0 && q.E == 0.0 && q.C == 0.0 && q.M == 0.0;
               }});
  c.push_back({"diagnostics", "zero field is regular", [=] {
                 const auto h = pointwise_history(frozen(VelocityField(dg, 0.0), 0.015625, 26));
                 return ckn_flag(h, {{1, 1, 1}, 0.4}, std::vector<double>{0.5, 0.25}, 1e-12).regular;
               }});
  c.push_back({"diagnostics", "constant field is regular with E = 0", [=] {
                 const auto h = pointwise_history(frozen(constant_field(dg, {3, -3, 1.5}), 0.015625, 26));
                 const auto f = ckn_flag(h, {{1, 1, 1}, 0.4}, std::vector<double>{0.5, 0.25}, 1e-12);
                 return f.regular && f.max_E == 0.0;
               }});
  c.push_back({"diagnostics", "flag is monotone in the threshold", [] {
                 const Grid3 g = Grid3::periodic_cube(16, 6.283185307179586);
                 const auto h = pointwise_history(frozen(make_random_field(g, 5, {1.0, 3.0}, 1.0), 0.04, 75));
                 const std::vector<double> radii{1.6, 0.8};
                 bool prev = false;
                 for (double eps : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
                   const bool reg = ckn_flag(h, {{3, 3, 3}, 3.0}, radii, eps).regular;
                   if (prev && !reg) return false;
                   prev = reg;
                 }
                 return true;
               }});
  c.push_back({"diagnostics", "smallness flags of zero hold with zero integrals", [] {
                 const Grid3 g = Grid3::periodic_cube(32, 2.0);
                 const auto f = smallness_flags(pointwise_history(frozen(VelocityField(g, 0.0), 0.0625, 8)),
                                                ParabolicCylinder({1, 1, 1}, 0.5, 0.5), Thresholds{});
                 return f.flag_10_3 && f.flag_cube && f.flag_M && f.integral_10_3 == 0.0 && f.integral_cube == 0.0;
               }});
  c.push_back({"diagnostics", "zero field scan flags nothing and reports no slope", [=] {
                 const auto h = pointwise_history(frozen(VelocityField(dg, 0.0), 0.0025, 160));
                 std::vector<SpaceTimePoint> centers;
                 for (double x : {0.5, 1.0, 1.5}) centers.push_back({{x, 1.0, 1.0}, 0.4});
                 const auto rep = singular_scan(h, centers, {0.5, 0.25, 0.125});
                 for (long n : rep.box.counts)
                   if (n != 0) return false;
                 return rep.flagged.empty() && !rep.box.slope && rep.box.status == "empty flagged set";
               }});
  c.push_back({"diagnostics", "single flagged point has slope 0", [] {
                 const auto b = box_count({{{0.3, 0.1, 0.2}, 0.5}}, {0.5, 0.25, 0.125, 0.0625});
                 for (long n : b.counts)
                   if (n != 1) return false;
                 return b.slope && std::abs(*b.slope) < 1e-12;
               }});
  c.push_back({"diagnostics", "Hoelder chain on zero holds with zeros", [] {
                 const Grid3 g = Grid3::dirichlet_cube(17, -1.0, 1.0);
                 const auto rep = higher_integrability(pointwise_history(frozen(VelocityField(g, 0.0), 0.01, 20)),
                                                       {{0, 0, 0}, 0.2}, std::vector<double>{0.4, 0.2}, 0.25);
                 for (const auto& row : rep.rows)
                   if (row.E != 0.0 || row.D != 0.0) return false;
                 return rep.all_hold;
               }});
  c.push_back({"diagnostics", "BMO proxy of zero is zero", [] {
                 const auto b = bmo_proxy(VelocityField(Grid3::periodic_cube(16, 6.283185307179586), 0.0), 8, 1);
                 return b.seminorm == 0.0 && all_zero(b.potential);
               }});
  c.push_back({"diagnostics", "BMO proxy rejects a nonzero constant", [] {
                 const auto u = constant_field(Grid3::periodic_cube(16, 6.283185307179586), {1, 0, 0});
                 return throws_invalid([&] { bmo_proxy(u, 4, 1); });
               }});
  c.push_back({"diagnostics", "lemma constants of zero are reported as 0", [=] {
                 const auto h = pointwise_history(frozen(VelocityField(dg, 0.0), 0.015625, 32));
                 for (const auto& row : lemma_reports(h, {{1, 1, 1}, 0.5}, {{0.25, 0.5}}))
                   if (row.status != "zero" || row.constant != 0.0) return false;
                 return true;
               }});

  // scaling
  c.push_back({"scaling", "constant c rescales to lambda c", [] {
                 const Grid3 g = Grid3::periodic_cube(8, 2.0);
                 const auto u = constant_field(g, {1.0, -2.0, 0.5});
                 for (double lam : {2.0, 3.0}) {
                   const auto r = rescale(u, {lam, {0, 0, 0}, 0.0});
                   for (std::size_t a = 0; a < 3; ++a)
                     for (double v : r.field.comp[a])
                       if (std::abs(v - lam * u.comp[a][0]) > 1e-14) return false;
                 }
                 return true;
               }});
  c.push_back({"scaling", "lambda = 1 is the identity", [] {
                 const Grid3 g = Grid3::periodic_cube(8, 6.283185307179586);
                 const auto u = make_random_field(g, 2, {1.0, 2.0}, 1.0);
                 return max_abs_difference(rescale(u, {1.0, {0, 0, 0}, 0.0}).field, u) <= 1e-15;
               }});
  c.push_back({"scaling", "zero data have zero equivariance deviation", [] {
                 const Grid3 g = Grid3::periodic_cube(8, 2.0);
                 SolverConfig cfg;
                 cfg.dt = SolverConfig::cfl_bound(g, 0.2);
                 cfg.t_end = 4 * cfg.dt;
                 return equivariance_check(VelocityField(g, 0.0), cfg, 2.0).deviation == 0.0;
               }});
  c.push_back({"scaling", "zoom of zero is zero", [] {
                 const Grid3 g = Grid3::periodic_cube(16, 4.0);
                 const auto seq = zoom_sequence(frozen(VelocityField(g, 0.0), 1.0 / 64, 96), {{2, 2, 2}, 1.5}, 1);
                 for (const auto& lv : seq.levels) {
                   if (lv.sup_speed != 0.0) return false;
                   for (const auto& s : lv.snapshots)
                     if (!all_zero(s)) return false;
                 }
                 return !seq.levels.empty();
               }});
  return c;
}

inline std::vector<SelfCheckResult> run_selftest() {
  std::vector<SelfCheckResult> out;
  for (const auto& chk : selftest_checks()) {
    SelfCheckResult r{chk.module, chk.name, false, {}};
    try {
      r.passed = chk.body();
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace toyns
