#pragma once

// Scale-invariant quantities on parabolic cylinders Q(z0, r), the flags built
// on them, box counting of flagged sets, the Hoelder chain for the gradient
// and implied constants of the two cylinder inequalities.
//
//   A(r) = sup_t (1/r) int_B |u|^2        E(r) = (1/r) int_Q |grad u|^2
//   C(r) = (1/r^2) int_Q |u|^3            M(r) = (1/r) (int_Q |u|^{10/3})^{3/5}

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "toyns/operators.hpp"
#include "toyns/quadrature.hpp"

namespace toyns {

struct Thresholds {
  double eps = 0.05;   // E smallness (regular flag)
  double eps0 = 0.1;   // raw integrals of |u|^{10/3} and |u|^3
  double eps1 = 0.1;   // M smallness
  double delta = 0.25;
};

struct SpaceTimePoint {
  Vec3 x{};
  double t = 0.0;
};

/// |u| and |grad u| (centered gradient, Frobenius norm) at every node of
/// every snapshot.
struct PointwiseHistory {
  Grid3 grid;
  std::vector<double> times;
  std::vector<std::vector<double>> speed;
  std::vector<std::vector<double>> grad;

  double cadence() const {
    double m = 0.0;
    for (std::size_t k = 1; k < times.size(); ++k) m = std::max(m, times[k] - times[k - 1]);
    return m;
  }
};

inline PointwiseHistory pointwise_history(std::span<const VelocityField> snapshots) {
  if (snapshots.empty()) throw InvalidArgument("diagnostics need at least one snapshot");
  PointwiseHistory h;
  h.grid = snapshots.front().grid;
  for (const auto& u : snapshots) {
    if (!(u.grid == h.grid)) throw InvalidArgument("snapshot grids differ");
    require_finite(u, "diagnostics");
    h.times.push_back(u.time);
    std::vector<double> s(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) s[p] = norm(u.at(p));
    h.speed.push_back(std::move(s));
    const ScalarField g2 = frobenius_squared(gradient(u));
    std::vector<double> g(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) g[p] = std::sqrt(g2.values[p]);
    h.grad.push_back(std::move(g));
  }
  return h;
}

namespace detail {

struct CylinderStencil {
  BallNodes ball;
  std::vector<std::pair<std::size_t, double>> weights;
  std::vector<std::size_t> slab;

  double measure() const {
    double w = 0.0;
    for (const auto& [k, wk] : weights) w += wk;
    return w * ball.measure();
  }
};

inline void require_inside(const Grid3& g, const ParabolicCylinder& q) {
  if (!ball_inside_domain(g, q.ball())) {
    std::ostringstream os;
    os << "cylinder of radius " << q.radius << " at (" << q.center_x[0] << ", " << q.center_x[1] << ", "
       << q.center_x[2] << ") escapes the domain";
    throw InvalidArgument(os.str());
  }
}

inline CylinderStencil cylinder_stencil(const PointwiseHistory& h, const ParabolicCylinder& q) {
  require_inside(h.grid, q);
  CylinderStencil c{ball_nodes(h.grid, q.ball()), cylinder_time_weights(h.times, q), slab_samples(h.times, q)};
  return c;
}

/// int over the ball of f(speed, grad) at snapshot k.
template <class F>
double ball_integral(const PointwiseHistory& h, std::size_t k, const BallNodes& bn, F&& f) {
  std::vector<double> vals(bn.nodes.size());
  for (std::size_t q = 0; q < vals.size(); ++q) vals[q] = f(h.speed[k][bn.nodes[q]], h.grad[k][bn.nodes[q]]);
  return pairwise_sum(vals) * bn.cell_volume;
}

template <class F>
double cylinder_integral(const PointwiseHistory& h, const CylinderStencil& c, F&& f) {
  std::vector<double> terms;
  terms.reserve(c.weights.size());
  for (const auto& [k, wk] : c.weights) terms.push_back(wk * ball_integral(h, k, c.ball, f));
  return pairwise_sum(terms);
}

}  // namespace detail

struct ScaledQuantities {
  double r = 0.0;
  double A = 0.0;
  double E = 0.0;
  double C = 0.0;
  double M = 0.0;
  std::size_t sup_slices = 0;  // snapshots entering the discrete sup in A
};

inline ScaledQuantities scaled_quantities(const PointwiseHistory& h, const ParabolicCylinder& q) {
  const auto c = detail::cylinder_stencil(h, q);
  const double r = q.radius;
  ScaledQuantities out;
  out.r = r;
  for (std::size_t k : c.slab)
    out.A = std::max(out.A, detail::ball_integral(h, k, c.ball, [](double s, double) { return s * s; }) / r);
  out.sup_slices = c.slab.size();
  out.E = detail::cylinder_integral(h, c, [](double, double g) { return g * g; }) / r;
  out.C = detail::cylinder_integral(h, c, [](double s, double) { return s * s * s; }) / (r * r);
  const double i103 = detail::cylinder_integral(h, c, [](double s, double) { return std::pow(s, 10.0 / 3.0); });
  out.M = std::pow(i103, 0.6) / r;
  return out;
}

inline ScaledQuantities scaled_quantities(std::span<const VelocityField> snapshots, const ParabolicCylinder& q) {
  return scaled_quantities(pointwise_history(snapshots), q);
}

struct CknFlag {
  bool regular = true;
  double witness_radius = 0.0;  // radius attaining max E
  double max_E = 0.0;
  std::vector<std::pair<double, double>> E_by_radius;
};

/// Regular iff max over r_set of E(z0, r) < eps.
inline CknFlag ckn_flag(const PointwiseHistory& h, const SpaceTimePoint& z0, std::span<const double> r_set,
                        double eps) {
  if (r_set.empty()) throw InvalidArgument("ckn_flag needs a non-empty radius set");
  CknFlag f;
  f.witness_radius = r_set.front();
  for (double r : r_set) {
    const ParabolicCylinder q(z0.x, z0.t, r);
    const auto c = detail::cylinder_stencil(h, q);
    const double E = detail::cylinder_integral(h, c, [](double, double g) { return g * g; }) / r;
    f.E_by_radius.emplace_back(r, E);
    if (E > f.max_E) {
      f.max_E = E;
      f.witness_radius = r;
    }
  }
  f.regular = f.max_E < eps;
  return f;
}

struct SmallnessFlags {
  double integral_10_3 = 0.0;
  double integral_cube = 0.0;
  double M = 0.0;
  bool flag_10_3 = true;  // int_Q |u|^{10/3} < eps0
  bool flag_cube = true;  // int_Q |u|^3 < eps0
  bool flag_M = true;     // M < eps1
};

inline SmallnessFlags smallness_flags(const PointwiseHistory& h, const ParabolicCylinder& q,
                                      const Thresholds& th = {}) {
  const auto c = detail::cylinder_stencil(h, q);
  SmallnessFlags f;
  f.integral_10_3 = detail::cylinder_integral(h, c, [](double s, double) { return std::pow(s, 10.0 / 3.0); });
  f.integral_cube = detail::cylinder_integral(h, c, [](double s, double) { return s * s * s; });
  f.M = std::pow(f.integral_10_3, 0.6) / q.radius;
  f.flag_10_3 = f.integral_10_3 < th.eps0;
  f.flag_cube = f.integral_cube < th.eps0;
  f.flag_M = f.M < th.eps1;
  return f;
}

struct BoxCount {
  std::vector<double> radii;  // as given
  std::vector<long> counts;
  std::optional<double> slope;  // of log N against log(1/r)
  std::string status;           // "ok", "empty flagged set", "insufficient scales"
};

/// Greedy cover of points by cylinders B(x_p, r) x [t_p, t_p + r^2] anchored
/// at the first uncovered point in (t, x1, x2, x3) order.
inline long greedy_cover_count(std::vector<SpaceTimePoint> pts, double r) {
  std::sort(pts.begin(), pts.end(), [](const SpaceTimePoint& a, const SpaceTimePoint& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.x < b.x;
  });
  std::vector<char> covered(pts.size(), 0);
  const double r2 = r * r, tol = 1e-12 * std::max(1.0, r2);
  long count = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (covered[i]) continue;
    ++count;
    const SpaceTimePoint& a = pts[i];
    for (std::size_t j = i; j < pts.size() && pts[j].t <= a.t + r2 + tol; ++j) {
      if (covered[j]) continue;
      const Vec3 d{pts[j].x[0] - a.x[0], pts[j].x[1] - a.x[1], pts[j].x[2] - a.x[2]};
      if (dot(d, d) <= r2 * (1.0 + 1e-12)) covered[j] = 1;
    }
  }
  return count;
}

/// N(r) for each radius, made nonincreasing in r (a cover by smaller anchored
/// cylinders is also a cover at larger radius), and the least-squares slope.
inline BoxCount box_count(const std::vector<SpaceTimePoint>& pts, std::vector<double> radii) {
  BoxCount b;
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  b.radii = radii;
  b.counts.assign(radii.size(), 0);
  long best = std::numeric_limits<long>::max();
  for (std::size_t i = 0; i < radii.size(); ++i) {
    best = std::min(best, greedy_cover_count(pts, radii[i]));
    b.counts[i] = best;
  }
  if (pts.empty()) {
    b.status = "empty flagged set";
    return b;
  }
  if (radii.size() < 3) {
    b.status = "insufficient scales";
    return b;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double x = std::log(1.0 / radii[i]), y = std::log(static_cast<double>(b.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  b.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  b.status = "ok";
  return b;
}

struct CenterResult {
  SpaceTimePoint z;
  CknFlag flag;
};

struct RegularityReport {
  Thresholds thresholds;
  std::vector<double> r_set;
  double snapshot_cadence = 0.0;
  std::vector<CenterResult> centers;
  std::vector<SpaceTimePoint> flagged;
  BoxCount box;
};

/// Flags every center failing the E criterion and box-counts the flagged set
/// at the radii of r_set.
inline RegularityReport singular_scan(const PointwiseHistory& h, const std::vector<SpaceTimePoint>& centers,
                                      const std::vector<double>& r_set, const Thresholds& th = {}) {
  RegularityReport rep;
  rep.thresholds = th;
  rep.r_set = r_set;
  rep.snapshot_cadence = h.cadence();
  rep.centers.resize(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) rep.centers[i] = {centers[i], ckn_flag(h, centers[i], r_set, th.eps)};
  for (const auto& c : rep.centers)
    if (!c.flag.regular) rep.flagged.push_back(c.z);
  rep.box = box_count(rep.flagged, r_set);
  return rep;
}

struct HolderRow {
  double r = 0.0;
  double E = 0.0;
  double D = 0.0;             // r^{-(1-2 delta)} int_Q |grad u|^{2+delta}
  double c_continuum = 0.0;   // |Q(1)|^{delta/(2+delta)}
  double c_discrete = 0.0;    // (|Q(r)|_h / r^5)^{delta/(2+delta)}
  double bound = 0.0;         // c_discrete * D^{2/(2+delta)}
  bool holds = true;
};

struct HigherIntegrabilityReport {
  double delta = 0.0;
  std::vector<HolderRow> rows;
  double sup_D = 0.0;
  bool all_hold = true;
};

/// Hoelder chain E(r) <= c(delta) D_delta(r)^{2/(2+delta)}. In the
/// continuum c = |Q(1)|^{delta/(2+delta)}; the check uses the quadrature
/// measure of each cylinder, for which the inequality is exact.
inline HigherIntegrabilityReport higher_integrability(const PointwiseHistory& h, const SpaceTimePoint& z0,
                                                      std::span<const double> r_set, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
  HigherIntegrabilityReport rep;
  rep.delta = delta;
  const double e = delta / (2.0 + delta);
  for (double r : r_set) {
    const ParabolicCylinder q(z0.x, z0.t, r);
    const auto c = detail::cylinder_stencil(h, q);
    HolderRow row;
    row.r = r;
    row.E = detail::cylinder_integral(h, c, [](double, double g) { return g * g; }) / r;
    row.D = detail::cylinder_integral(h, c, [&](double, double g) { return std::pow(g, 2.0 + delta); }) /
            std::pow(r, 1.0 - 2.0 * delta);
    row.c_continuum = std::pow(unit_ball_volume(), e);
    row.c_discrete = std::pow(c.measure() / std::pow(r, 5.0), e);
    row.bound = row.c_discrete * std::pow(row.D, 2.0 / (2.0 + delta));
    row.holds = row.E <= row.bound * (1.0 + 1e-12) + 1e-300;
    rep.all_hold = rep.all_hold && row.holds;
    rep.sup_D = std::max(rep.sup_D, row.D);
    rep.rows.push_back(row);
  }
  return rep;
}

struct LemmaRow {
  std::string lemma;  // "C-bound" or "AE-bound"
  double r = 0.0;
  double rho = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;       // without the untracked constant
  double constant = 0.0;  // lhs / rhs
  std::string status;     // "ok", "zero", "constant unbounded"
};

inline LemmaRow lemma_row(std::string name, double r, double rho, double lhs, double rhs) {
  LemmaRow row{std::move(name), r, rho, lhs, rhs, 0.0, "ok"};
  const double tiny = 1e-300;
  if (rhs <= tiny && lhs <= tiny) row.status = "zero";
  else if (rhs <= tiny) {
    row.status = "constant unbounded";
    row.constant = std::numeric_limits<double>::infinity();
  } else row.constant = lhs / rhs;
  return row;
}

/// For each pair r <= rho:
///   C-bound:  C(r) vs (r/rho)^3 A^{3/2}(rho) + (rho/r)^3 A^{3/4}(rho) E^{3/4}(rho)
///   AE-bound: A(rho/2) + E(rho/2) vs C^{2/3}(rho) + A^{1/2}(rho) C^{1/3}(rho) E^{1/2}(rho)
inline std::vector<LemmaRow> lemma_reports(const PointwiseHistory& h, const SpaceTimePoint& z0,
                                           const std::vector<std::pair<double, double>>& pairs) {
  std::vector<LemmaRow> out;
  for (const auto& [r, rho] : pairs) {
    if (!(r > 0.0 && r <= rho)) throw InvalidArgument("lemma pairs need 0 < r <= rho");
    const auto qr = scaled_quantities(h, ParabolicCylinder(z0.x, z0.t, r));
    const auto qp = scaled_quantities(h, ParabolicCylinder(z0.x, z0.t, rho));
    const auto qh = scaled_quantities(h, ParabolicCylinder(z0.x, z0.t, rho / 2));
    const double s = r / rho;
    out.push_back(lemma_row("C-bound", r, rho, qr.C,
                            s * s * s * std::pow(qp.A, 1.5) + std::pow(qp.A, 0.75) * std::pow(qp.E, 0.75) / (s * s * s)));
    out.push_back(lemma_row("AE-bound", rho / 2, rho, qh.A + qh.E,
                            std::pow(qp.C, 2.0 / 3.0) + std::sqrt(qp.A) * std::cbrt(qp.C) * std::sqrt(qp.E)));
  }
  return out;
}

}  // namespace toyns
