#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toyns/random_field.hpp"
#include "toyns/scaling.hpp"

using namespace toyns;

namespace {

constexpr double kPi = std::numbers::pi;

SolverConfig periodic_config(const Grid3& g, double t_end) {
  SolverConfig cfg;
  cfg.dt = 0.8 * g.h * g.h / 6;
  cfg.t_end = t_end;
  return cfg;
}

}  // namespace

TEST(Rescale, ConstantAndIdentity) {
  const Grid3 g = Grid3::periodic_cube(8, 1.0);
  const auto u = VelocityField::sample(g, 0.5, [](const Vec3&) { return Vec3{1.5, -2, 0.25}; });
  const auto r = rescale(u, {4.0, {0.25, 0.5, 0.0}, 0.25});
  ASSERT_EQ(r.mode, RescaleMode::exact);
  for (std::size_t p = 0; p < g.size(); ++p) {
    EXPECT_EQ(r.field.comp[0][p], 6.0);
    EXPECT_EQ(r.field.comp[1][p], -8.0);
  }
  EXPECT_EQ(r.field.grid.h, g.h / 4);
  EXPECT_EQ(r.field.time, 0.25 / 16);
  const auto rnd = make_random_field(g, 2, {1, 2}, 1.0);
  EXPECT_EQ(max_abs_difference(rescale(rnd, {1.0, g.origin, 0.0}).field, rnd), 0.0);
  EXPECT_LE(max_abs_difference(rescale_interpolated(rnd, {1.0, g.origin, 0.0}).field, rnd), 1e-15);
}

TEST(Rescale, KineticEnergyScalesLikeInverseLambda) {
  const Grid3 g = Grid3::periodic_cube(16, 2 * kPi);
  const auto u = make_random_field(g, 8, {1, 3}, 1.0);
  for (double lam : {0.25, 0.5, 2.0, 8.0}) {
    const auto r = rescale_exact(u, {lam, g.origin, 0.0});
    EXPECT_NEAR(kinetic_energy(r) * lam / kinetic_energy(u), 1.0, 1e-14) << lam;
  }
}

TEST(Rescale, DyadicGroupAction) {
  const Grid3 g = Grid3::periodic_cube(16, 1.0);
  const auto u = make_random_field(g, 5, {1, 3}, 1.0);
  const Vec3 x0 = g.position(3, 5, 7);
  const auto twice = rescale_exact(rescale_exact(u, {2.0, x0, 0.1}), {2.0, {0, 0, 0}, 0.0});
  const auto once = rescale_exact(u, {4.0, x0, 0.1});
  EXPECT_EQ(max_abs_difference(twice, once), 0.0);
  EXPECT_EQ(twice.grid, once.grid);
  EXPECT_EQ(twice.time, once.time);
}

TEST(Rescale, ExactModeRejectsBadSpecs) {
  const Grid3 g = Grid3::periodic_cube(8, 1.0);
  const VelocityField u(g, 0.0);
  EXPECT_THROW(rescale_exact(u, {3.0, g.origin, 0.0}), InvalidArgument);
  EXPECT_THROW(rescale_exact(u, {2.0, {0.01, 0, 0}, 0.0}), InvalidArgument);
  EXPECT_EQ(rescale(u, {3.0, g.origin, 0.0}).mode, RescaleMode::interpolated);
  EXPECT_THROW(rescale_interpolated(VelocityField(Grid3::dirichlet_cube(9, 0, 1), 0.0), {2.0, {0, 0, 0}, 0.0}),
               InvalidArgument);
}

TEST(Rescale, InterpolatedSamplesLinearFieldsExactly) {
  const Grid3 g = Grid3::dirichlet_cube(17, -1.0, 1.0);
  const auto u = VelocityField::sample(g, 0.0, [](const Vec3& x) { return Vec3{x[0] + 2 * x[1], -x[2], 0.5}; });
  const auto r = rescale_interpolated(u, {0.7, {0.1, 0.0, -0.05}, 0.0});
  for (std::size_t p = 0; p < g.size(); ++p) {
    const Vec3 x = g.position(p);
    const Vec3 y{0.1 + 0.7 * (x[0] - 0.1), 0.7 * x[1], -0.05 + 0.7 * (x[2] + 0.05)};
    EXPECT_NEAR(r.field.comp[0][p], 0.7 * (y[0] + 2 * y[1]), 1e-14);
    EXPECT_NEAR(r.field.comp[2][p], 0.35, 1e-15);
  }
  EXPECT_LE(r.interpolation_bound, 1e-14);
}

TEST(Equivariance, ZeroAndDyadicAreExact) {
  const Grid3 g = Grid3::periodic_cube(12, 2 * kPi);
  EXPECT_EQ(equivariance_check(VelocityField(g, 0.0), periodic_config(g, 0.05), 2.0).deviation, 0.0);
  const auto u = make_random_field(g, 13, {1, 3}, 2.0);
  for (double lam : {2.0, 0.5, 4.0}) {
    const auto rep = equivariance_check(u, periodic_config(g, 0.1), lam);
    EXPECT_EQ(rep.mode, RescaleMode::exact);
    EXPECT_LE(rep.deviation, 1e-12) << lam;
  }
}

TEST(Equivariance, NonDyadicDecreasesUnderRefinement) {
  double prev = 0.0;
  for (int n : {12, 24}) {
    const Grid3 g = Grid3::periodic_cube(n, 2 * kPi);
    const auto u = make_random_field(g, 13, {1, 2}, 0.5);
    auto cfg = periodic_config(g, 0.05);
    cfg.dt = 0.8 * std::pow(2 * kPi / 12, 2) / 6 * std::pow(12.0 / n, 2);
    const auto rep = equivariance_check(u, cfg, 3.0);
    EXPECT_EQ(rep.mode, RescaleMode::interpolated);
    EXPECT_GT(rep.deviation, 1e-8);
    if (prev > 0.0) {
      EXPECT_LT(rep.deviation, prev / 2);
    }
    prev = rep.deviation;
  }
}

TEST(Zoom, ZeroFieldZoomsToZero) {
  const Grid3 g = Grid3::periodic_cube(32, 4.0);
  std::vector<VelocityField> snaps;
  for (int k = 0; k <= 64; ++k) snaps.emplace_back(g, k / 64.0);
  const auto z = zoom_sequence(snaps, {{2, 2, 2}, 1.0}, 2);
  ASSERT_EQ(z.levels.size(), 3u);
  for (const auto& lv : z.levels) {
    EXPECT_EQ(lv.sup_speed, 0.0);
    EXPECT_EQ(lv.quantities.A, 0.0);
  }
}

TEST(Zoom, QuantitiesMatchShrinkingCylindersAndSmoothFieldsVanish) {
  const Grid3 g = Grid3::periodic_cube(32, 4.0);
  const auto u0 = VelocityField::sample(g, 0.0, [](const Vec3& x) {
    return Vec3{std::sin(kPi * x[1] / 2) + 0.2, std::cos(kPi * x[2] / 2), 0.3 * std::sin(kPi * x[0] / 2)};
  });
  std::vector<VelocityField> snaps;
  for (int k = 0; k <= 128; ++k) {
    snaps.push_back(u0);
    snaps.back().time = k / 128.0;
  }
  const SpaceTimePoint z0{{2, 2, 2}, 1.0};
  const auto seq = zoom_sequence(snaps, z0, 5);
  EXPECT_TRUE(seq.notice.has_value());
  ASSERT_GE(seq.levels.size(), 3u);
  const auto hist = pointwise_history(snaps);
  const double lip = 2.5;  // |grad u| <= (pi/2) sqrt(2.09)
  for (const auto& lv : seq.levels) {
    const auto direct = scaled_quantities(hist, ParabolicCylinder(z0.x, z0.t, lv.lambda));
    EXPECT_NEAR(lv.quantities.A, direct.A, 1e-12 * std::max(1.0, direct.A));
    EXPECT_NEAR(lv.quantities.E, direct.E, 1e-12 * std::max(1.0, direct.E));
    EXPECT_NEAR(lv.quantities.C, direct.C, 1e-12 * std::max(1.0, direct.C));
    EXPECT_NEAR(lv.quantities.M, direct.M, 1e-12 * std::max(1.0, direct.M));
    EXPECT_LE(lv.sup_speed, lv.lambda * (norm(u0.at(g.index(16, 16, 16))) + lip));
  }
}

TEST(Zoom, HomogeneousProfileWeightedSupScalesLikeTwoToMinusKOverThree) {
  // u = -w0 |x|^{-5/3} x: |x|^{2/3}|u| = w0, and the zoom at the origin gives
  // |y|^{2/3}|u_k(y)| = 2^{-k/3} w0 while |y||u_k(y)| = 2^{-k} |x||u|.
  const double w0 = 0.7;
  const Grid3 g({64, 64, 64}, 4.0 / 64, {-2.0, -2.0, -2.0}, BoundaryKind::periodic);
  const auto u0 = VelocityField::sample(g, 0.0, [&](const Vec3& x) {
    const double r = norm(x);
    const double v = r > 0 ? w0 * std::pow(r, -5.0 / 3.0) : 0.0;
    return Vec3{-v * x[0], -v * x[1], -v * x[2]};
  });
  // four samples in every slab [1 - 4^{-k}, 1]
  std::vector<double> times;
  for (int k = 0; k <= 3; ++k)
    for (int j = 0; j <= 4; ++j) times.push_back(1.0 - std::ldexp(1.0, -2 * k) * j / 4.0);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<VelocityField> snaps;
  for (double t : times) {
    snaps.push_back(u0);
    snaps.back().time = t;
  }
  const auto seq = zoom_sequence(snaps, {{0, 0, 0}, 1.0}, 3);
  ASSERT_EQ(seq.levels.size(), 4u);
  for (const auto& lv : seq.levels)
    EXPECT_NEAR(lv.sup_weighted, std::pow(2.0, -lv.k / 3.0) * w0, 1e-12) << "k=" << lv.k;
}

TEST(Rescale, SmallnessIntegralsTransformByChangeOfVariables) {
  const Grid3 g = Grid3::periodic_cube(32, 2 * kPi);
  const auto u = make_random_field(g, 31, {1, 3}, 1.0);
  std::vector<VelocityField> snaps;
  for (int k = 0; k <= 64; ++k) {
    snaps.push_back(u);
    snaps.back().time = k / 32.0;
  }
  const Vec3 x0 = g.position(16, 16, 16);
  const double lam = 0.5;
  std::vector<VelocityField> scaled;
  for (const auto& s : snaps) scaled.push_back(rescale_exact(s, {lam, x0, 2.0}));
  const auto a = smallness_flags(pointwise_history(scaled), ParabolicCylinder({0, 0, 0}, 0.0, 1.0));
  const auto b = smallness_flags(pointwise_history(snaps), ParabolicCylinder(x0, 2.0, lam));
  EXPECT_NEAR(a.integral_10_3, std::pow(lam, -5.0 / 3.0) * b.integral_10_3, 1e-12 * a.integral_10_3);
  EXPECT_NEAR(a.integral_cube, std::pow(lam, -2.0) * b.integral_cube, 1e-12 * a.integral_cube);
}
