#pragma once

// Radially symmetric reduction u(x, t) = -v(|x|, t) x:
//   v_t = v_rr + (4/r) v_r + (3/2) r v v_r + (5/2) v^2
// on nodes r_j = j dr, j = 0..n-1, with v even in r and Dirichlet data at
// r = R_max = (n-1) dr.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "toyns/error.hpp"
#include "toyns/field.hpp"
#include "toyns/solver3d.hpp"

namespace toyns {

struct RadialProfile {
  double dr = 0.0;
  std::vector<double> v;
  double time = 0.0;

  RadialProfile() = default;
  RadialProfile(double dr_, std::size_t n, double t = 0.0) : dr(dr_), v(n, 0.0), time(t) {}

  std::size_t size() const { return v.size(); }
  double r(std::size_t j) const { return static_cast<double>(j) * dr; }
  double r_max() const { return r(v.size() - 1); }

  template <class F>
  static RadialProfile sample(double dr, std::size_t n, double t, F&& f) {
    RadialProfile p(dr, n, t);
    for (std::size_t j = 0; j < n; ++j) p.v[j] = f(p.r(j));
    return p;
  }

  void validate() const {
    if (!(dr > 0.0) || !std::isfinite(dr)) throw InvalidArgument("radial spacing dr must be positive");
    if (v.size() < 4) throw InvalidArgument("radial profile needs at least 4 nodes");
  }
};

struct WeightedProfile {
  double dr = 0.0;
  std::vector<double> w;  // r^{5/3} v
  double time = 0.0;

  double r(std::size_t j) const { return static_cast<double>(j) * dr; }
};

using RadialBoundaryFn = std::function<double(double)>;  // v(R_max, t)

struct RadialConfig {
  double dt = 1e-4;
  double t_end = 0.0;
  double cfl_safety = 1.0;
  int snapshot_stride = 1;
  double blowup_threshold = 1e6;

  // The centered operator with the origin ghost has spectral radius about
  // 8.45/dr^2, so Heun needs dt below ~0.237 dr^2.
  static double cfl_bound(double dr, double safety) { return safety * dr * dr / 5.0; }

  void validate(double dr) const {
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidArgument("cfl_safety must lie in (0, 1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive");
    const double bound = cfl_bound(dr, cfl_safety);
    if (dt > bound * (1.0 + 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "dt = " << dt << " violates the radial CFL bound cfl_safety*dr^2/5 = " << bound << " (dr = " << dr
         << ")";
      throw InvalidArgument(os.str());
    }
    if (snapshot_stride < 1) throw InvalidArgument("snapshot_stride must be >= 1");
    if (!(blowup_threshold > 0.0)) throw InvalidArgument("blowup_threshold must be positive");
  }
};

inline RadialBoundaryFn zero_radial_boundary() {
  return [](double) { return 0.0; };
}

/// Boundary pinned to c(t) = a / (1 - (5/2) a t); infinite past the blow-up time.
inline RadialBoundaryFn riccati_boundary(double a) {
  return [a](double t) {
    const double d = 1.0 - 2.5 * a * t;
    return d > 0.0 ? a / d : std::numeric_limits<double>::infinity();
  };
}

inline double riccati_value(double a, double t) { return riccati_boundary(a)(t); }

/// Centered right-hand side. Node 0 uses v_r -> 0 and (4/r) v_r -> 4 v_rr with
/// the ghost v(-dr) = v(dr). The last node carries Dirichlet data and gets 0.
inline std::vector<double> radial_rhs(const RadialProfile& p) {
  p.validate();
  const std::size_t n = p.size();
  const double dr = p.dr, inv2 = 1.0 / (dr * dr);
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    if (!std::isfinite(p.v[j])) {
      std::ostringstream os;
      os << "radial profile has a non-finite value at r = " << p.r(j);
      throw NumericalFailure(os.str(), p.time, Vec3{p.r(j), 0.0, 0.0}, p.v[j]);
    }
  const double v0 = p.v[0];
  out[0] = 5.0 * (2.0 * (p.v[1] - v0) * inv2) + 2.5 * v0 * v0;
  for (std::size_t j = 1; j + 1 < n; ++j) {
    const double r = p.r(j);
    const double vr = (p.v[j + 1] - p.v[j - 1]) / (2.0 * dr);
    const double vrr = (p.v[j + 1] - 2.0 * p.v[j] + p.v[j - 1]) * inv2;
    const double v = p.v[j];
    out[j] = vrr + 4.0 / r * vr + 1.5 * r * v * vr + 2.5 * v * v;
  }
  return out;
}

inline double radial_max_abs(const RadialProfile& p) {
  double m = 0.0;
  for (double x : p.v) m = std::max(m, std::abs(x));
  return m;
}

inline void check_radial_state(const RadialProfile& p, double threshold) {
  std::size_t worst = 0;
  double worst_mag = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double m = std::abs(p.v[j]);
    if (!std::isfinite(m)) {
      worst = j;
      worst_mag = m;
      break;
    }
    if (m > worst_mag) {
      worst = j;
      worst_mag = m;
    }
  }
  if (!std::isfinite(worst_mag) || worst_mag > threshold) {
    std::ostringstream os;
    os.precision(17);
    os << "blow-up/instability detected at t = " << p.time << ": max|v| = " << worst_mag << " at r = " << p.r(worst);
    throw NumericalFailure(os.str(), p.time, Vec3{p.r(worst), 0.0, 0.0}, worst_mag);
  }
}

inline RadialProfile radial_step(const RadialProfile& p, const RadialConfig& cfg, const RadialBoundaryFn& boundary,
                                 std::optional<double> dt_override = {}) {
  cfg.validate(p.dr);
  const double dt = dt_override.value_or(cfg.dt);
  const double t1 = p.time + dt;
  const std::size_t n = p.size();
  const auto k1 = radial_rhs(p);
  RadialProfile mid(p.dr, n, t1);
  for (std::size_t j = 0; j < n; ++j) mid.v[j] = p.v[j] + dt * k1[j];
  mid.v[n - 1] = boundary(t1);
  check_radial_state(mid, cfg.blowup_threshold);
  const auto k2 = radial_rhs(mid);
  RadialProfile out(p.dr, n, t1);
  for (std::size_t j = 0; j < n; ++j) out.v[j] = p.v[j] + 0.5 * dt * (k1[j] + k2[j]);
  out.v[n - 1] = boundary(t1);
  check_radial_state(out, cfg.blowup_threshold);
  return out;
}

struct RadialTrace {
  double time = 0.0;
  double max_v = 0.0;
  double max_w = 0.0;
};

struct RadialRunResult {
  std::vector<RadialProfile> history;
  std::vector<RadialTrace> trace;  // every step
  std::optional<FailureInfo> failure;
};

inline double weighted_max_abs(const RadialProfile& p) {
  double m = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) m = std::max(m, std::abs(std::pow(p.r(j), 5.0 / 3.0) * p.v[j]));
  return m;
}

inline RadialRunResult radial_run(const RadialProfile& p0, const RadialConfig& cfg, const RadialBoundaryFn& boundary) {
  p0.validate();
  cfg.validate(p0.dr);
  RadialRunResult out;
  RadialProfile p = p0;
  p.v.back() = boundary(p.time);
  out.history.push_back(p);
  out.trace.push_back({p.time, radial_max_abs(p), weighted_max_abs(p)});
  const StepPlan plan = plan_steps(p0.time, cfg.t_end, cfg.dt);
  for (long s = 1; s <= plan.steps; ++s) {
    const double dt = s == plan.steps ? plan.last_dt : cfg.dt;
    RadialProfile next;
    try {
      next = radial_step(p, cfg, boundary, dt);
    } catch (const NumericalFailure& f) {
      out.failure = FailureInfo{f.what(), f.time(), f.location(), f.max_value()};
      if (out.history.back().time != p.time) out.history.push_back(p);
      return out;
    }
    next.time = s == plan.steps ? cfg.t_end : p0.time + static_cast<double>(s) * cfg.dt;
    p = std::move(next);
    out.trace.push_back({p.time, radial_max_abs(p), weighted_max_abs(p)});
    if (s % cfg.snapshot_stride == 0 || s == plan.steps) out.history.push_back(p);
  }
  return out;
}

inline WeightedProfile to_weighted(const RadialProfile& p) {
  WeightedProfile w{p.dr, std::vector<double>(p.size()), p.time};
  for (std::size_t j = 0; j < p.size(); ++j) w.w[j] = std::pow(p.r(j), 5.0 / 3.0) * p.v[j];
  return w;
}

/// Inverse of to_weighted on r > 0. The weight vanishes at r = 0, so v(0) is
/// recovered from evenness: v(0) = (4 v(dr) - v(2 dr)) / 3.
inline RadialProfile from_weighted(const WeightedProfile& w) {
  if (w.w.size() < 3) throw InvalidArgument("from_weighted needs at least 3 nodes");
  RadialProfile p(w.dr, w.w.size(), w.time);
  for (std::size_t j = 1; j < w.w.size(); ++j) p.v[j] = w.w[j] / std::pow(w.r(j), 5.0 / 3.0);
  p.v[0] = (4.0 * p.v[1] - p.v[2]) / 3.0;
  return p;
}

struct RadialWindow {
  double r_lo = 0.0;
  double r_hi = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

struct MaxPrincipleReport {
  RadialWindow window;  // snapped to nodes and available times
  double interior_max = 0.0;
  double boundary_max = 0.0;
  double excess = 0.0;  // interior_max - boundary_max
};

/// Interior and parabolic-boundary maxima of |w| over the window. The
/// parabolic boundary is the bottom slice plus the two lateral sides.
inline MaxPrincipleReport max_principle_check(const std::vector<WeightedProfile>& history, const RadialWindow& win) {
  if (!(win.r_lo > 0.0)) throw InvalidArgument("max principle window needs r_lo > 0");
  if (!(win.r_hi > win.r_lo) || !(win.t_hi > win.t_lo)) throw InvalidArgument("max principle window is empty");
  if (history.empty()) throw InvalidArgument("max principle check needs a history");
  const double dr = history.front().dr;
  const std::size_t n = history.front().w.size();
  const auto j_lo = static_cast<std::size_t>(std::llround(win.r_lo / dr));
  const auto j_hi = static_cast<std::size_t>(std::llround(win.r_hi / dr));
  if (j_lo == 0 || j_hi >= n) throw InvalidArgument("max principle window escapes the radial grid");
  if (j_hi < j_lo + 2) throw InvalidArgument("max principle window under-resolved: fewer than 3 radial nodes");

  std::vector<std::size_t> slices;
  for (std::size_t k = 0; k < history.size(); ++k) {
    const double t = history[k].time;
    const double tol = 1e-9 * std::max(1.0, std::abs(t));
    if (t >= win.t_lo - tol && t <= win.t_hi + tol) slices.push_back(k);
  }
  if (slices.size() < 2) throw InvalidArgument("max principle window under-resolved: fewer than 2 time slices");

  MaxPrincipleReport rep;
  rep.window = {static_cast<double>(j_lo) * dr, static_cast<double>(j_hi) * dr, history[slices.front()].time,
                history[slices.back()].time};
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const auto& w = history[slices[s]].w;
    if (w.size() != n) throw InvalidArgument("max principle history has inconsistent radial grids");
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double a = std::abs(w[j]);
      const bool boundary = s == 0 || j == j_lo || j == j_hi;
      if (boundary) rep.boundary_max = std::max(rep.boundary_max, a);
      else rep.interior_max = std::max(rep.interior_max, a);
    }
  }
  rep.excess = rep.interior_max - rep.boundary_max;
  return rep;
}

/// max_principle_check on [r_lo, r_hi] x [t_lo, t_k] for every history time
/// t_k past the first slice, accumulated in one pass.
inline std::vector<MaxPrincipleReport> max_principle_series(const std::vector<WeightedProfile>& history, double r_lo,
                                                            double r_hi, double t_lo) {
  std::vector<MaxPrincipleReport> out;
  if (history.empty()) throw InvalidArgument("max principle check needs a history");
  if (!(r_lo > 0.0)) throw InvalidArgument("max principle window needs r_lo > 0");
  if (!(r_hi > r_lo)) throw InvalidArgument("max principle window is empty");
  const double dr = history.front().dr;
  const std::size_t n = history.front().w.size();
  const auto j_lo = static_cast<std::size_t>(std::llround(r_lo / dr));
  const auto j_hi = static_cast<std::size_t>(std::llround(r_hi / dr));
  if (j_lo == 0 || j_hi >= n) throw InvalidArgument("max principle window escapes the radial grid");
  if (j_hi < j_lo + 2) throw InvalidArgument("max principle window under-resolved: fewer than 3 radial nodes");
  double interior = 0.0, boundary = 0.0;
  std::optional<double> first;
  for (const auto& slice : history) {
    const double tol = 1e-9 * std::max(1.0, std::abs(slice.time));
    if (slice.time < t_lo - tol) continue;
    if (slice.w.size() != n) throw InvalidArgument("max principle history has inconsistent radial grids");
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const double a = std::abs(slice.w[j]);
      if (!first || j == j_lo || j == j_hi) boundary = std::max(boundary, a);
      else interior = std::max(interior, a);
    }
    if (!first) {
      first = slice.time;
      continue;
    }
    MaxPrincipleReport rep;
    rep.window = {static_cast<double>(j_lo) * dr, static_cast<double>(j_hi) * dr, *first, slice.time};
    rep.interior_max = interior;
    rep.boundary_max = boundary;
    rep.excess = interior - boundary;
    out.push_back(rep);
  }
  return out;
}

/// Linear interpolation of v at radius r; r beyond R_max is an error.
inline double radial_interpolate(const RadialProfile& p, double r) {
  const double q = r / p.dr;
  const double last = static_cast<double>(p.size() - 1);
  if (q > last * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "radius " << r << " exceeds the radial grid R_max = " << p.r_max();
    throw InvalidArgument(os.str());
  }
  const auto j = std::min(static_cast<std::size_t>(q), p.size() - 2);
  const double s = std::min(1.0, q - static_cast<double>(j));
  return (1.0 - s) * p.v[j] + s * p.v[j + 1];
}

/// u(x) = -v(|x|) x on every node of g.
inline VelocityField embed(const RadialProfile& p, const Grid3& g) {
  p.validate();
  VelocityField u(g, p.time);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const Vec3 x = g.position(q);
    const double v = radial_interpolate(p, norm(x));
    u.set(q, {-v * x[0], -v * x[1], -v * x[2]});
  }
  return u;
}

struct RadialExtraction {
  RadialProfile profile;
  double isotropy_defect = 0.0;  // RMS |u + v(|x|) x| / |x|, relative to max |v|
};

inline constexpr double kDefaultIsotropyThreshold = 0.05;

namespace detail {

struct RadialSample {
  double r;
  double v;
};

/// Least-squares value at r0 of a quadratic in (r - r0) through the samples,
/// or of a + b r^2 + c r^4 when the window reaches the origin.
inline std::optional<double> local_quadratic(std::span<const RadialSample> s, double r0, bool even) {
  if (s.empty()) return std::nullopt;
  double m[3][4] = {};
  for (const auto& p : s) {
    const double d = even ? p.r * p.r - r0 * r0 : p.r - r0;
    const double basis[3] = {1.0, d, d * d};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] += basis[i] * basis[j];
      m[i][3] += basis[i] * p.v;
    }
  }
  // Gaussian elimination with partial pivoting
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int i = c + 1; i < 3; ++i)
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    if (std::abs(m[piv][c]) <= 1e-14 * std::abs(m[0][0])) return std::nullopt;
    std::swap(m[c], m[piv]);
    for (int i = c + 1; i < 3; ++i) {
      const double f = m[i][c] / m[c][c];
      for (int j = c; j < 4; ++j) m[i][j] -= f * m[c][j];
    }
  }
  double x[3];
  for (int i = 2; i >= 0; --i) {
    double acc = m[i][3];
    for (int j = i + 1; j < 3; ++j) acc -= m[i][j] * x[j];
    x[i] = acc / m[i][i];
  }
  return x[0];
}

}  // namespace detail

/// Recovers v(r_j) from -u.x/|x|^2 by a local quadratic fit in |x| over a
/// window of half-width 1.5 dr, widened until the fit is determined. Windows
/// touching the origin fit an even polynomial. Radii the grid does not reach hold the outermost fitted value.
inline RadialExtraction extract(const VelocityField& u, double dr, std::size_t n,
                                double threshold = kDefaultIsotropyThreshold) {
  RadialProfile out(dr, n, u.time);
  out.validate();
  const Grid3& g = u.grid;
  std::vector<detail::RadialSample> samples;
  samples.reserve(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) {
    const Vec3 x = g.position(q);
    const double r = norm(x);
    if (r == 0.0) continue;
    samples.push_back({r, -dot(u.at(q), x) / (r * r)});
  }
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.r < b.r; });
  if (samples.empty()) throw InvalidArgument("extract: grid does not resolve the radial nodes");
  const double reach = samples.back().r;
  auto window = [&](double lo, double hi) {
    auto b = std::lower_bound(samples.begin(), samples.end(), lo, [](const auto& p, double v) { return p.r < v; });
    auto e = std::upper_bound(samples.begin(), samples.end(), hi, [](double v, const auto& p) { return v < p.r; });
    return std::span<const detail::RadialSample>(samples.data() + (b - samples.begin()), e - b);
  };
  std::optional<std::size_t> last;
  for (std::size_t j = 0; j < n; ++j) {
    const double r0 = out.r(j);
    if (r0 > reach) break;
    std::optional<double> val;
    for (double hw = 1.5 * dr; !val && hw <= 12.0 * dr; hw *= 1.5) {
      const auto s = window(r0 - hw, r0 + hw);
      std::size_t distinct = 0;
      for (std::size_t i = 0; i < s.size(); ++i)
        if (i == 0 || s[i].r > s[i - 1].r * (1.0 + 1e-12)) ++distinct;
      if (distinct >= 3) val = detail::local_quadratic(s, r0, r0 - hw <= 0.0);
    }
    if (!val) throw InvalidArgument("extract: grid does not resolve the radial nodes");
    out.v[j] = *val;
    last = j;
  }
  if (!last) throw InvalidArgument("extract: grid does not resolve the radial nodes");
  for (std::size_t j = *last + 1; j < n; ++j) out.v[j] = out.v[*last];

  double vmax = radial_max_abs(out);
  double sq = 0.0;
  long used = 0;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const Vec3 x = g.position(q);
    const double r = norm(x);
    if (r == 0.0 || r > out.r_max()) continue;
    const double v = radial_interpolate(out, r);
    const Vec3 uq = u.at(q);
    const Vec3 d{uq[0] + v * x[0], uq[1] + v * x[1], uq[2] + v * x[2]};
    const double e = norm(d) / r;
    sq += e * e;
    ++used;
    vmax = std::max(vmax, norm(uq) / r);
  }
  RadialExtraction res{out, 0.0};
  if (used > 0 && vmax > 0.0) res.isotropy_defect = std::sqrt(sq / static_cast<double>(used)) / vmax;
  if (res.isotropy_defect > threshold) {
    std::ostringstream os;
    os << "field not radial: isotropy defect " << res.isotropy_defect << " exceeds " << threshold;
    throw InvalidArgument(os.str());
  }
  return res;
}

enum class BlowupClass { decay, blowup, persist };

inline const char* to_string(BlowupClass c) {
  switch (c) {
    case BlowupClass::decay: return "decay";
    case BlowupClass::blowup: return "blowup";
    case BlowupClass::persist: return "persist";
  }
  return "?";
}

struct BlowupProbe {
  double amplitude = 0.0;
  BlowupClass verdict = BlowupClass::persist;
  double blowup_time = 0.0;  // only for blowup
  RadialRunResult run;
};

using ProfileFamily = std::function<RadialProfile(double)>;
using BoundaryFamily = std::function<RadialBoundaryFn(double)>;

struct BlowupSearchConfig {
  RadialConfig solver;
  double a_low = 0.0;
  double a_high = 1.0;
  double tolerance = 1e-3;
  double decay_fraction = 0.1;
  int max_iterations = 60;
};

struct BlowupSearchResult {
  double a_low = 0.0;
  double a_high = 0.0;
  BlowupProbe low;
  BlowupProbe high;
  std::vector<std::pair<double, BlowupClass>> probes;  // in evaluation order
};

inline BlowupProbe classify_amplitude(double a, const ProfileFamily& family, const BoundaryFamily& boundary,
                                      const BlowupSearchConfig& cfg) {
  BlowupProbe probe;
  probe.amplitude = a;
  probe.run = radial_run(family(a), cfg.solver, boundary ? boundary(a) : zero_radial_boundary());
  const auto& tr = probe.run.trace;
  if (probe.run.failure) {
    probe.verdict = BlowupClass::blowup;
    probe.blowup_time = probe.run.failure->time;
  } else if (tr.back().max_v <= cfg.decay_fraction * tr.front().max_v) {
    probe.verdict = BlowupClass::decay;
  } else {
    probe.verdict = BlowupClass::persist;
  }
  return probe;
}

/// Bisection between a non-blowup amplitude and a blowup amplitude.
inline BlowupSearchResult blowup_search(const ProfileFamily& family, const BoundaryFamily& boundary,
                                        const BlowupSearchConfig& cfg) {
  if (!(cfg.tolerance > 0.0)) throw InvalidArgument("blowup_search tolerance must be positive");
  BlowupSearchResult res;
  res.low = classify_amplitude(cfg.a_low, family, boundary, cfg);
  res.high = classify_amplitude(cfg.a_high, family, boundary, cfg);
  res.probes = {{cfg.a_low, res.low.verdict}, {cfg.a_high, res.high.verdict}};
  const bool low_blows = res.low.verdict == BlowupClass::blowup;
  const bool high_blows = res.high.verdict == BlowupClass::blowup;
  if (low_blows == high_blows) {
    std::ostringstream os;
    os.precision(17);
    os << "bracket not found: a = " << cfg.a_low << " -> " << to_string(res.low.verdict) << " (max|v| "
       << res.low.run.trace.back().max_v << "), a = " << cfg.a_high << " -> " << to_string(res.high.verdict)
       << " (max|v| " << res.high.run.trace.back().max_v << ")";
    throw InvalidArgument(os.str());
  }
  if (low_blows) std::swap(res.low, res.high);
  for (int it = 0; it < cfg.max_iterations && std::abs(res.high.amplitude - res.low.amplitude) > cfg.tolerance;
       ++it) {
    const double mid = 0.5 * (res.low.amplitude + res.high.amplitude);
    BlowupProbe probe = classify_amplitude(mid, family, boundary, cfg);
    res.probes.emplace_back(mid, probe.verdict);
    if (probe.verdict == BlowupClass::blowup) res.high = std::move(probe);
    else res.low = std::move(probe);
  }
  res.a_low = res.low.amplitude;
  res.a_high = res.high.amplitude;
  return res;
}

}  // namespace toyns
