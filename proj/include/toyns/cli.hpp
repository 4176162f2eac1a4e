#pragma once

// Experiment runner: one subcommand per process, a strict JSON config, and a
// self-describing output directory (manifest.json plus CSV/snapshot files).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toyns/bmo.hpp"
#include "toyns/cli_config.hpp"
#include "toyns/diagnostics.hpp"
#include "toyns/radial.hpp"
#include "toyns/random_field.hpp"
#include "toyns/scaling.hpp"
#include "toyns/selftest.hpp"
#include "toyns/snapshot_io.hpp"
#include "toyns/solver3d.hpp"

namespace toyns::cli {

namespace fs = std::filesystem;

inline const std::vector<std::string>& section_names() {
  static const std::vector<std::string> names{"solver", "radial", "diagnostics", "scaling", "zoom", "blowup"};
  return names;
}

// ---------------------------------------------------------------- inputs

/// Two-column numeric CSV; a non-numeric first line is taken as a header.
inline std::vector<std::pair<double, double>> read_two_columns(const std::string& key, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(key, "cannot open " + path);
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    char* end = nullptr;
    const double a = std::strtod(line.c_str(), &end);
    if (comma == std::string::npos || end != line.c_str() + comma) {
      if (lineno == 1) continue;
      throw ConfigError(key, path + ":" + std::to_string(lineno) + ": expected two numbers");
    }
    const char* second = line.c_str() + comma + 1;
    const double b = std::strtod(second, &end);
    if (end == second || !std::isfinite(a) || !std::isfinite(b))
      throw ConfigError(key, path + ":" + std::to_string(lineno) + ": expected two numbers");
    rows.emplace_back(a, b);
  }
  if (rows.empty()) throw ConfigError(key, path + " holds no data rows");
  return rows;
}

/// Every *.bin snapshot in a directory, ordered by file name.
inline std::vector<VelocityField> load_snapshot_dir(const std::string& key, const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError(key, "not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bin") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError(key, "no snapshot files in " + dir);
  std::vector<VelocityField> out;
  for (const auto& f : files) out.push_back(with_key(key, [&] { return read_snapshot(f); }));
  for (std::size_t k = 1; k < out.size(); ++k)
    if (!(out[k].time > out[k - 1].time)) throw ConfigError(key, "snapshot times must increase with file name");
  return out;
}

inline std::string numbered(const std::string& stem, std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06zu.bin", stem.c_str(), k);
  return buf;
}

inline void write_snapshot_series(RunContext& ctx, const std::string& dir, const std::vector<VelocityField>& snaps) {
  CsvWriter index(ctx.file(dir + "/index.csv"), "index,t,file");
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const std::string name = numbered("snapshot", k);
    write_snapshot(ctx.file(dir + "/" + name), snaps[k]);
    index.row(k, snaps[k].time, name);
  }
}

// ---------------------------------------------------------------- solver section

inline Grid3 parse_grid(Section g) {
  const std::string kind = g.string("boundary", "periodic");
  const long n = g.integer("n");
  if (n < 4 || n > 1024) throw ConfigError(g.key("n"), "must lie in [4, 1024]");
  const int ni = static_cast<int>(n);
  Grid3 grid;
  if (kind == "periodic") {
    if (g.has("spacing") && g.has("length")) throw ConfigError(g.key("spacing"), "give either length or spacing");
    const double h = g.has("spacing") ? g.number("spacing") : g.number("length", 2.0 * std::numbers::pi) / ni;
    const auto o = g.numbers("origin", {0.0, 0.0, 0.0}, 3);
    grid = with_key(g.path(), [&] { return Grid3({ni, ni, ni}, h, {o[0], o[1], o[2]}, BoundaryKind::periodic); });
  } else if (kind == "dirichlet_zero") {
    const double lo = g.number("lo");
    const double hi = g.number("hi");
    if (!(hi > lo)) throw ConfigError(g.key("hi"), "must exceed lo");
    grid = Grid3::dirichlet_cube(ni, lo, hi);
  } else {
    throw ConfigError(g.key("boundary"), "expected periodic or dirichlet_zero, got '" + kind + "'");
  }
  g.finish();
  return grid;
}

struct SolverSetup {
  VelocityField u0;
  SolverConfig cfg;
  bool write_snapshots = true;
};

inline VelocityField parse_initial(Section& s, const std::string& type, const Grid3& g, std::uint64_t seed,
                                   SolverConfig& cfg) {
  if (type == "zero") return VelocityField(g, 0.0);
  if (type == "random") {
    const auto band = s.numbers("band", {1.0, 2.0}, 2);
    const double amp = s.number("amplitude", 1.0);
    s.record_value("seed", seed);
    if (!g.periodic()) throw ConfigError(s.key("type"), "random data need a periodic grid");
    return with_key(s.key("band"), [&] { return make_random_field(g, seed, {band[0], band[1]}, amp); });
  }
  if (type == "constant") {
    const auto c = s.numbers("value", 3);
    return VelocityField::sample(g, 0.0, [&](const Vec3&) { return Vec3{c[0], c[1], c[2]}; });
  }
  if (type == "gaussian") {
    // radial bump u = -v(|x|) x with v = a exp(-|x|^2 / sigma^2)
    const double a = s.number("a");
    const double sigma = s.number("sigma", 1.0);
    if (!(sigma > 0.0)) throw ConfigError(s.key("sigma"), "must be positive");
    if (g.periodic()) throw ConfigError(s.key("type"), "the radial bump needs a dirichlet_zero grid");
    return VelocityField::sample(g, 0.0, [&](const Vec3& x) {
      const double v = a * std::exp(-dot(x, x) / (sigma * sigma));
      return Vec3{-v * x[0], -v * x[1], -v * x[2]};
    });
  }
  if (type == "riccati") {
    // u = -c(t) x with c = c0 / (1 - 5 c0 t / 2); the walls carry the exact c(t)
    const double c0 = s.number("c0");
    if (g.kind != BoundaryKind::dirichlet_zero) throw ConfigError(s.key("type"), "riccati data need a dirichlet_zero grid");
    cfg.boundary = [c0](const Vec3& x, double t) {
      const double c = riccati_value(c0, t);
      return Vec3{-c * x[0], -c * x[1], -c * x[2]};
    };
    return VelocityField::sample(g, 0.0, [&](const Vec3& x) { return Vec3{-c0 * x[0], -c0 * x[1], -c0 * x[2]}; });
  }
  throw ConfigError(s.key("type"), "expected zero, random, constant, gaussian, riccati or snapshot, got '" + type + "'");
}

inline void check_safety(Section& s, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw ConfigError(s.key("cfl_safety"), "must lie in (0, 1]");
}

inline SolverSetup parse_solver(Section s, std::uint64_t seed) {
  SolverSetup out;
  Section init = s.sub("initial");
  const std::string type = init.string("type");
  Grid3 g;
  if (type == "snapshot") {
    s.forbid("grid", "not used when the initial field is a snapshot");
    const std::string path = init.string("path");
    out.u0 = with_key(init.key("path"), [&] { return read_snapshot(path); });
    g = out.u0.grid;
  } else {
    g = parse_grid(s.sub("grid"));
    out.u0 = parse_initial(init, type, g, seed, out.cfg);
  }
  init.finish();

  out.cfg.cfl_safety = s.number("cfl_safety", 0.9);
  check_safety(s, out.cfg.cfl_safety);
  out.cfg.dt = s.number("dt", SolverConfig::cfl_bound(g, out.cfg.cfl_safety));
  out.cfg.t_end = s.number("t_end");
  if (!(out.cfg.t_end > out.u0.time)) throw ConfigError(s.key("t_end"), "must exceed the initial time");
  const long stride = s.integer("snapshot_stride", 10);
  if (stride < 1) throw ConfigError(s.key("snapshot_stride"), "must be >= 1");
  out.cfg.snapshot_stride = static_cast<int>(std::min<long>(stride, 1L << 30));
  out.cfg.blowup_threshold = s.number("blowup_threshold", 1e6);
  if (!(out.cfg.blowup_threshold > 0.0)) throw ConfigError(s.key("blowup_threshold"), "must be positive");
  out.write_snapshots = s.boolean("write_snapshots", true);
  with_key(s.key("dt"), [&] { out.cfg.validate(g); });
  s.finish();
  return out;
}

// ---------------------------------------------------------------- radial sections

struct RadialGrid {
  double dr = 0.0;
  std::size_t n = 0;
};

inline RadialGrid parse_radial_grid(Section& s) {
  const double r_max = s.number("r_max");
  const double dr = s.number("dr");
  if (!(dr > 0.0)) throw ConfigError(s.key("dr"), "must be positive");
  if (!(r_max > 0.0)) throw ConfigError(s.key("r_max"), "must be positive");
  const double q = r_max / dr;
  if (std::abs(q - std::round(q)) > 1e-9 * q) throw ConfigError(s.key("r_max"), "must be a whole multiple of dr");
  const auto n = static_cast<std::size_t>(std::llround(q)) + 1;
  if (n < 4) throw ConfigError(s.key("r_max"), "needs at least 4 radial nodes");
  return {dr, n};
}

inline RadialConfig parse_radial_timing(Section& s, double dr, long default_stride) {
  RadialConfig cfg;
  cfg.cfl_safety = s.number("cfl_safety", 0.9);
  check_safety(s, cfg.cfl_safety);
  cfg.dt = s.number("dt", RadialConfig::cfl_bound(dr, cfg.cfl_safety));
  cfg.t_end = s.number("t_end");
  if (!(cfg.t_end > 0.0)) throw ConfigError(s.key("t_end"), "must be positive");
  const long stride = s.integer("snapshot_stride", default_stride);
  if (stride < 1) throw ConfigError(s.key("snapshot_stride"), "must be >= 1");
  cfg.snapshot_stride = static_cast<int>(std::min<long>(stride, 1L << 30));
  cfg.blowup_threshold = s.number("blowup_threshold", 1e6);
  if (!(cfg.blowup_threshold > 0.0)) throw ConfigError(s.key("blowup_threshold"), "must be positive");
  with_key(s.key("dt"), [&] { cfg.validate(dr); });
  return cfg;
}

inline RadialProfile parse_radial_initial(Section s, const RadialGrid& rg) {
  const std::string type = s.string("type");
  RadialProfile p;
  if (type == "constant") {
    const double a = s.number("a");
    p = RadialProfile::sample(rg.dr, rg.n, 0.0, [&](double) { return a; });
  } else if (type == "gaussian") {
    const double a = s.number("a");
    const double sigma = s.number("sigma", 1.0);
    const double r0 = s.number("r0", 0.0);
    if (!(sigma > 0.0)) throw ConfigError(s.key("sigma"), "must be positive");
    p = RadialProfile::sample(rg.dr, rg.n, 0.0, [&](double r) { return a * std::exp(-(r - r0) * (r - r0) / (sigma * sigma)); });
  } else if (type == "file") {
    const std::string path = s.string("path");
    const auto rows = read_two_columns(s.key("path"), path);
    if (rows.size() != rg.n)
      throw ConfigError(s.key("path"), "expected " + std::to_string(rg.n) + " rows r,v matching r_max and dr");
    p = RadialProfile(rg.dr, rg.n);
    for (std::size_t j = 0; j < rg.n; ++j) {
      if (std::abs(rows[j].first - p.r(j)) > 1e-9 * std::max(1.0, p.r(j)))
        throw ConfigError(s.key("path"), "row " + std::to_string(j) + " is not at r = j*dr");
      p.v[j] = rows[j].second;
    }
  } else {
    throw ConfigError(s.key("type"), "expected constant, gaussian or file, got '" + type + "'");
  }
  s.finish();
  return p;
}

inline RadialBoundaryFn parse_radial_boundary(Section s, double t_end) {
  const std::string type = s.string("type", "zero");
  RadialBoundaryFn fn;
  if (type == "zero") {
    fn = zero_radial_boundary();
  } else if (type == "riccati") {
    fn = riccati_boundary(s.number("a"));
  } else if (type == "file") {
    const std::string path = s.string("path");
    auto rows = read_two_columns(s.key("path"), path);
    for (std::size_t k = 1; k < rows.size(); ++k)
      if (!(rows[k].first > rows[k - 1].first)) throw ConfigError(s.key("path"), "times must increase");
    if (rows.front().first > 0.0 || rows.back().first < t_end)
      throw ConfigError(s.key("path"), "boundary data must cover [0, t_end]");
    fn = [rows = std::move(rows)](double t) {
      const auto it = std::lower_bound(rows.begin(), rows.end(), t,
                                       [](const std::pair<double, double>& a, double x) { return a.first < x; });
      if (it == rows.begin()) return it->second;
      if (it == rows.end()) return rows.back().second;
      const auto& [t1, v1] = *it;
      const auto& [t0, v0] = *(it - 1);
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    };
  } else {
    throw ConfigError(s.key("type"), "expected zero, riccati or file, got '" + type + "'");
  }
  s.finish();
  return fn;
}

// ---------------------------------------------------------------- commands

inline void say(const std::string& line) { std::cout << line << '\n'; }

inline int numerical_exit(RunContext& ctx, const FailureInfo& f) {
  ctx.write_failure(f.message, f.time, f.location, f.max_value);
  ctx.write_manifest("numerical_failure");
  std::cerr << "numerical failure: " << f.message << '\n';
  return kNumericalFailure;
}

inline int cmd_run3d(RunContext& ctx, Section& root) {
  auto setup = parse_solver(root.sub("solver"), ctx.seed);
  root.finish();
  const auto res = run(setup.u0, setup.cfg);
  {
    CsvWriter e(ctx.file("energy.csv"), "t,kinetic,dissipation_cum,residual");
    for (const auto& l : res.ledger) e.row(l.time, l.kinetic, l.dissipation_cum, l.residual);
  }
  if (setup.write_snapshots) write_snapshot_series(ctx, "snapshots", res.snapshots);
  if (res.failure) return numerical_exit(ctx, *res.failure);
  ctx.write_manifest("ok");
  std::ostringstream os;
  os << "run3d: " << res.ledger.size() - 1 << " steps to t = " << res.ledger.back().time << ", "
     << res.snapshots.size() << " snapshots";
  say(os.str());
  return kOk;
}

inline int cmd_run_radial(RunContext& ctx, Section& root) {
  Section s = root.sub("radial");
  const RadialGrid rg = parse_radial_grid(s);
  const RadialConfig cfg = parse_radial_timing(s, rg.dr, 1);
  const RadialProfile p0 = parse_radial_initial(s.sub("initial"), rg);
  const RadialBoundaryFn wall = parse_radial_boundary(s.sub_or_empty("boundary"), cfg.t_end);
  Section mp = s.sub_or_empty("max_principle");
  const bool mp_on = mp.boolean("enabled", true);
  const double r_hi_default = std::min(0.5, rg.dr * static_cast<double>(rg.n - 2));
  const double r_lo = mp.number("r_lo", 0.05);
  const double r_hi = mp.number("r_hi", r_hi_default);
  const double t_lo = mp.number("t_lo", 0.0);
  mp.finish();
  s.finish();
  root.finish();
  if (mp_on) {
    // window geometry fails here rather than after the run
    const std::vector<WeightedProfile> probe{to_weighted(RadialProfile(rg.dr, rg.n, t_lo)),
                                             to_weighted(RadialProfile(rg.dr, rg.n, t_lo + 1.0))};
    with_key(mp.path(), [&] { max_principle_series(probe, r_lo, r_hi, t_lo); });
  }

  const auto res = radial_run(p0, cfg, wall);
  std::vector<WeightedProfile> weighted;
  {
    CsvWriter out(ctx.file("radial.csv"), "t,r,v,w");
    for (const auto& p : res.history) {
      weighted.push_back(to_weighted(p));
      for (std::size_t j = 0; j < p.size(); ++j) out.row(p.time, p.r(j), p.v[j], weighted.back().w[j]);
    }
  }
  {
    CsvWriter tr(ctx.file("radial_trace.csv"), "t,max_v,max_w");
    for (const auto& t : res.trace) tr.row(t.time, t.max_v, t.max_w);
  }
  if (mp_on) {
    CsvWriter m(ctx.file("maxprinciple.csv"), "t,interior_max,boundary_max,excess");
    for (const auto& rep : max_principle_series(weighted, r_lo, r_hi, t_lo))
      m.row(rep.window.t_hi, rep.interior_max, rep.boundary_max, rep.excess);
  }
  if (res.failure) return numerical_exit(ctx, *res.failure);
  ctx.write_manifest("ok");
  std::ostringstream os;
  os << "run-radial: " << res.trace.size() - 1 << " steps to t = " << res.trace.back().time;
  say(os.str());
  return kOk;
}

inline int cmd_blowup_search(RunContext& ctx, Section& root) {
  Section s = root.sub("blowup");
  const RadialGrid rg = parse_radial_grid(s);
  BlowupSearchConfig cfg;
  cfg.solver = parse_radial_timing(s, rg.dr, 1);
  cfg.solver.snapshot_stride = std::numeric_limits<int>::max();
  Section fam = s.sub("family");
  const std::string ftype = fam.string("type");
  ProfileFamily family;
  if (ftype == "constant") {
    family = [rg](double a) { return RadialProfile::sample(rg.dr, rg.n, 0.0, [&](double) { return a; }); };
  } else if (ftype == "gaussian") {
    const double sigma = fam.number("sigma", 1.0);
    const double r0 = fam.number("r0", 0.0);
    if (!(sigma > 0.0)) throw ConfigError(fam.key("sigma"), "must be positive");
    family = [rg, sigma, r0](double a) {
      return RadialProfile::sample(rg.dr, rg.n, 0.0,
                                   [&](double r) { return a * std::exp(-(r - r0) * (r - r0) / (sigma * sigma)); });
    };
  } else {
    throw ConfigError(fam.key("type"), "expected constant or gaussian, got '" + ftype + "'");
  }
  fam.finish();
  const std::string btype = s.string("boundary", "zero");
  BoundaryFamily walls;
  if (btype == "zero") walls = [](double) { return zero_radial_boundary(); };
  else if (btype == "riccati") walls = [](double a) { return riccati_boundary(a); };
  else throw ConfigError(s.key("boundary"), "expected zero or riccati, got '" + btype + "'");
  cfg.a_low = s.number("a_low");
  cfg.a_high = s.number("a_high");
  cfg.tolerance = s.number("tolerance", 1e-3);
  if (!(cfg.tolerance > 0.0)) throw ConfigError(s.key("tolerance"), "must be positive");
  cfg.decay_fraction = s.number("decay_fraction", 0.1);
  if (!(cfg.decay_fraction > 0.0 && cfg.decay_fraction < 1.0)) throw ConfigError(s.key("decay_fraction"), "must lie in (0, 1)");
  const long iters = s.integer("max_iterations", 60);
  if (iters < 1 || iters > 200) throw ConfigError(s.key("max_iterations"), "must lie in [1, 200]");
  cfg.max_iterations = static_cast<int>(iters);
  s.finish();
  root.finish();

  const auto res = with_key(s.key("a_high"), [&] { return blowup_search(family, walls, cfg); });
  {
    CsvWriter b(ctx.file("bracket.csv"), "a_low,a_high,low_verdict,high_verdict,high_blowup_time");
    b.row(res.a_low, res.a_high, std::string(to_string(res.low.verdict)), std::string(to_string(res.high.verdict)),
          res.high.blowup_time);
  }
  {
    CsvWriter p(ctx.file("probes.csv"), "index,amplitude,verdict");
    for (std::size_t k = 0; k < res.probes.size(); ++k)
      p.row(k, res.probes[k].first, std::string(to_string(res.probes[k].second)));
  }
  for (const auto& [name, probe] : {std::pair{"trace_low.csv", &res.low}, std::pair{"trace_high.csv", &res.high}}) {
    CsvWriter t(ctx.file(name), "t,max_v,max_w");
    for (const auto& tr : probe->run.trace) t.row(tr.time, tr.max_v, tr.max_w);
  }
  ctx.write_manifest("ok");
  std::ostringstream os;
  os.precision(10);
  os << "blowup-search: bracket [" << res.a_low << ", " << res.a_high << "] after " << res.probes.size() << " probes";
  say(os.str());
  return kOk;
}

inline std::vector<SpaceTimePoint> parse_centers(Section& s) {
  const bool list = s.has("centers"), grid = s.has("center_grid");
  if (list == grid) throw ConfigError(s.key("centers"), "give exactly one of centers or center_grid");
  std::vector<SpaceTimePoint> out;
  if (list) {
    for (const auto& c : s.tuples("centers", 4)) out.push_back({{c[0], c[1], c[2]}, c[3]});
    s.ignore("center_grid");
    return out;
  }
  s.ignore("centers");
  Section cg = s.sub("center_grid");
  const auto xs = cg.numbers("x"), ys = cg.numbers("y"), zs = cg.numbers("z"), ts = cg.numbers("t");
  cg.finish();
  for (double t : ts)
    for (double z : zs)
      for (double y : ys)
        for (double x : xs) out.push_back({{x, y, z}, t});
  return out;
}

inline int cmd_diagnose(RunContext& ctx, Section& root) {
  Section s = root.sub("diagnostics");
  const std::string dir = s.string("snapshots");
  const auto centers = parse_centers(s);
  auto radii = s.numbers("radii");
  for (double r : radii)
    if (!(r > 0.0)) throw ConfigError(s.key("radii"), "radii must be positive");
  std::sort(radii.begin(), radii.end(), std::greater<>());
  Thresholds th;
  th.eps = s.number("eps", th.eps);
  th.eps0 = s.number("eps0", th.eps0);
  th.eps1 = s.number("eps1", th.eps1);
  th.delta = s.number("delta", th.delta);
  if (!(th.eps > 0.0)) throw ConfigError(s.key("eps"), "must be positive");
  if (!(th.eps0 > 0.0)) throw ConfigError(s.key("eps0"), "must be positive");
  if (!(th.eps1 > 0.0)) throw ConfigError(s.key("eps1"), "must be positive");
  if (!(th.delta > 0.0 && th.delta <= 1.0)) throw ConfigError(s.key("delta"), "must lie in (0, 1]");
  const double small_r = s.number("smallness_radius", radii.front());
  std::vector<std::pair<double, double>> pairs;
  if (s.has("lemma_pairs")) {
    for (const auto& p : s.tuples("lemma_pairs", 2)) pairs.emplace_back(p[0], p[1]);
  } else {
    for (std::size_t i = 1; i < radii.size(); ++i) pairs.emplace_back(radii[i], radii[i - 1]);
    json echo = json::array();
    for (const auto& [r, rho] : pairs) echo.push_back({r, rho});
    s.record_value("lemma_pairs", echo);
  }
  const long samples = s.integer("ball_samples", 64);
  if (samples < 0 || samples > 100000) throw ConfigError(s.key("ball_samples"), "must lie in [0, 100000]");
  const auto snaps = load_snapshot_dir(s.key("snapshots"), dir);
  const bool bmo = s.boolean("bmo", snaps.front().grid.periodic());
  if (bmo && !snaps.front().grid.periodic()) throw ConfigError(s.key("bmo"), "the BMO proxy needs a periodic grid");
  s.record_value("seed", ctx.seed);
  s.finish();
  root.finish();

  const auto hist = pointwise_history(snaps);
  const std::string ckey = s.key("centers");
  const auto scan = with_key(ckey, [&] { return singular_scan(hist, centers, radii, th); });

  {
    CsvWriter q(ctx.file("quantities.csv"), "x0,y0,z0,t0,r,A,E,C,M");
    CsvWriter f(ctx.file("flags.csv"),
                "x0,y0,z0,t0,regular,witness_r,max_E,smallness_r,int_10_3,int_cube,M,flag_10_3,flag_cube,flag_M");
    CsvWriter hw(ctx.file("holder.csv"), "x0,y0,z0,t0,delta,r,E,D,c,c_h,bound,holds");
    CsvWriter lw(ctx.file("lemmas.csv"), "x0,y0,z0,t0,lemma,r,rho,lhs,rhs,constant,status");
    for (const auto& c : scan.centers) {
      const auto& z = c.z;
      with_key(ckey, [&] {
        for (double r : radii) {
          const auto sq = scaled_quantities(hist, ParabolicCylinder(z.x, z.t, r));
          q.row(z.x[0], z.x[1], z.x[2], z.t, r, sq.A, sq.E, sq.C, sq.M);
        }
        const auto sm = smallness_flags(hist, ParabolicCylinder(z.x, z.t, small_r), th);
        f.row(z.x[0], z.x[1], z.x[2], z.t, c.flag.regular, c.flag.witness_radius, c.flag.max_E, small_r,
              sm.integral_10_3, sm.integral_cube, sm.M, sm.flag_10_3, sm.flag_cube, sm.flag_M);
        for (const auto& row : higher_integrability(hist, z, radii, th.delta).rows)
          hw.row(z.x[0], z.x[1], z.x[2], z.t, th.delta, row.r, row.E, row.D, row.c_continuum, row.c_discrete, row.bound,
                 row.holds);
        for (const auto& row : lemma_reports(hist, z, pairs))
          lw.row(z.x[0], z.x[1], z.x[2], z.t, row.lemma, row.r, row.rho, row.lhs, row.rhs, row.constant, row.status);
      });
    }
  }
  {
    std::ofstream d(ctx.file("dimension.txt"));
    d << "centers " << scan.centers.size() << '\n';
    d << "flagged " << scan.flagged.size() << '\n';
    d << "eps " << fmt17(th.eps) << '\n';
    d << "snapshot_cadence " << fmt17(scan.snapshot_cadence) << '\n';
    d << "status " << scan.box.status << '\n';
    d << "slope " << (scan.box.slope ? fmt17(*scan.box.slope) : std::string("undefined")) << '\n';
    d << "r,N\n";
    for (std::size_t i = 0; i < scan.box.radii.size(); ++i) d << fmt17(scan.box.radii[i]) << ',' << scan.box.counts[i] << '\n';
  }
  if (bmo) {
    // the toy flow does not conserve the mean, so the proxy sees u - [u]
    VelocityField u = snaps.back();
    Vec3 mean{};
    for (std::size_t c = 0; c < 3; ++c) {
      mean[c] = deterministic_sum(u.comp[c]) / static_cast<double>(u.grid.size());
      for (double& v : u.comp[c]) v -= mean[c];
    }
    const auto proxy = with_key(s.key("bmo"), [&] { return bmo_proxy(u, static_cast<int>(samples), ctx.seed); });
    CsvWriter b(ctx.file("bmo.csv"), "t,x,y,z,r,mean_oscillation");
    for (const auto& smp : proxy.samples)
      b.row(u.time, smp.ball.center[0], smp.ball.center[1], smp.ball.center[2], smp.ball.radius, smp.mean_oscillation);
    CsvWriter bs(ctx.file("bmo_summary.csv"), "t,seminorm,divergence_error,samples,mean_1,mean_2,mean_3");
    bs.row(u.time, proxy.seminorm, proxy.divergence_error, proxy.samples.size(), mean[0], mean[1], mean[2]);
  }
  ctx.write_manifest("ok");
  say("diagnose: " + std::to_string(scan.flagged.size()) + " of " + std::to_string(scan.centers.size()) +
      " centers flagged");
  return kOk;
}

inline int cmd_compare_scaling(RunContext& ctx, Section& root) {
  auto setup = parse_solver(root.sub("solver"), ctx.seed);
  Section s = root.sub("scaling");
  std::vector<double> lambdas;
  if (s.has("lambda") && s.has("lambdas")) throw ConfigError(s.key("lambdas"), "give either lambda or lambdas");
  if (s.has("lambdas")) lambdas = s.numbers("lambdas");
  else lambdas = {s.number("lambda")};
  for (double l : lambdas)
    if (!(l > 0.0)) throw ConfigError(s.key("lambda"), "lambda must be positive");
  const std::string mode = s.string("mode", "auto");
  std::optional<RescaleMode> forced;
  if (mode == "exact") forced = RescaleMode::exact;
  else if (mode == "interpolated") forced = RescaleMode::interpolated;
  else if (mode != "auto") throw ConfigError(s.key("mode"), "expected auto, exact or interpolated, got '" + mode + "'");
  s.finish();
  root.finish();
  if (!setup.u0.grid.periodic()) throw ConfigError("solver.grid.boundary", "compare-scaling needs a periodic grid");
  if (setup.cfg.boundary) throw ConfigError("solver.initial.type", "compare-scaling runs the unforced periodic problem");

  std::vector<EquivarianceReport> reps;
  try {
    for (double l : lambdas) reps.push_back(with_key(s.key("lambda"), [&] { return equivariance_check(setup.u0, setup.cfg, l, forced); }));
  } catch (const NumericalFailure& f) {
    CsvWriter e(ctx.file("equivariance.csv"), "lambda,mode,steps,physical_time,deviation,interpolation_bound");
    for (const auto& r : reps) e.row(r.lambda, std::string(to_string(r.mode)), r.steps, r.physical_time, r.deviation, r.interpolation_bound);
    return numerical_exit(ctx, {f.what(), f.time(), f.location(), f.max_value()});
  }
  {
    CsvWriter e(ctx.file("equivariance.csv"), "lambda,mode,steps,physical_time,deviation,interpolation_bound");
    for (const auto& r : reps) e.row(r.lambda, std::string(to_string(r.mode)), r.steps, r.physical_time, r.deviation, r.interpolation_bound);
  }
  ctx.write_manifest("ok");
  for (const auto& r : reps) {
    std::ostringstream os;
    os << "compare-scaling: lambda = " << r.lambda << " (" << to_string(r.mode) << ") deviation " << r.deviation;
    say(os.str());
  }
  return kOk;
}

inline int cmd_zoom(RunContext& ctx, Section& root) {
  Section s = root.sub("zoom");
  const std::string dir = s.string("snapshots");
  const auto z = s.numbers("z0", 4);
  const long K = s.integer("K");
  if (K < 0 || K > 40) throw ConfigError(s.key("K"), "must lie in [0, 40]");
  const bool write = s.boolean("write_snapshots", true);
  const auto snaps = load_snapshot_dir(s.key("snapshots"), dir);
  s.finish();
  root.finish();
  const auto seq = with_key(s.key("z0"), [&] { return zoom_sequence(snaps, {{z[0], z[1], z[2]}, z[3]}, static_cast<int>(K)); });
  {
    CsvWriter q(ctx.file("zoom_quantities.csv"), "k,lambda,A,E,C,M,sup_speed,sup_weighted,sup_homogeneous");
    for (const auto& lv : seq.levels)
      q.row(lv.k, lv.lambda, lv.quantities.A, lv.quantities.E, lv.quantities.C, lv.quantities.M, lv.sup_speed,
            lv.sup_weighted, lv.sup_homogeneous);
  }
  if (write)
    for (const auto& lv : seq.levels) {
      char name[32];
      std::snprintf(name, sizeof name, "zoom/level_%02d", lv.k);
      write_snapshot_series(ctx, name, lv.snapshots);
    }
  if (seq.notice) {
    std::ofstream n(ctx.file("zoom_notice.txt"));
    n << *seq.notice << '\n';
  }
  ctx.write_manifest("ok");
  say("zoom: " + std::to_string(seq.levels.size()) + " levels" + (seq.notice ? " (" + *seq.notice + ")" : ""));
  return kOk;
}

inline int cmd_selftest(RunContext* ctx) {
  const auto results = run_selftest();
  std::size_t failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.module << ": " << r.name;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
    std::cout << '\n';
    failed += r.passed ? 0 : 1;
  }
  std::cout << results.size() - failed << " of " << results.size() << " checks passed\n";
  if (ctx) {
    CsvWriter w(ctx->file("selftest.csv"), "module,check,passed");
    for (const auto& r : results) w.row(r.module, r.name, r.passed);
    ctx->write_manifest(failed ? "failed" : "ok");
  }
  return failed ? kFailed : kOk;
}

// ---------------------------------------------------------------- entry point

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

inline json load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot open " + path);
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", path + ": " + e.what());
  }
}

inline int dispatch(const Invocation& inv) {
  RunContext ctx;
  ctx.command = inv.command;
  const json doc = inv.config_path.empty() ? json::object() : load_config(inv.config_path);
  Section root(doc, "", ctx.resolved);
  for (const auto& name : section_names()) root.ignore(name);

  const long seed = root.integer("seed", 0);
  if (seed < 0) throw ConfigError("seed", "must be non-negative");
  ctx.seed = inv.seed.value_or(static_cast<std::uint64_t>(seed));
  root.record_value("seed", ctx.seed);
  const long workers = inv.workers ? *inv.workers : root.integer("worker_count", 1);
  if (workers < 1 || workers > 256) throw ConfigError("worker_count", "must lie in [1, 256]");
  ctx.workers = static_cast<int>(workers);
  root.record_value("worker_count", ctx.workers);
  set_worker_count(ctx.workers);

  std::optional<std::string> out = inv.output_dir;
  if (!out && root.has("output_dir")) out = root.string("output_dir");
  root.ignore("output_dir");
  if (!out)
    if (const char* env = std::getenv("TOYNS_OUTPUT_DIR"); env && *env) out = env;

  if (inv.command == "selftest") {
    root.finish();
    if (!out) return cmd_selftest(nullptr);
    root.record_value("output_dir", *out);
    ctx.out = *out;
    fs::create_directories(ctx.out);
    return cmd_selftest(&ctx);
  }
  if (inv.config_path.empty()) throw ConfigError("--config", inv.command + " needs a config file");
  if (!out) throw ConfigError("output_dir", "not set in the config, on the command line, or in TOYNS_OUTPUT_DIR");
  root.record_value("output_dir", *out);
  ctx.out = *out;

  fs::create_directories(ctx.out);
  try {
    if (inv.command == "run3d") return cmd_run3d(ctx, root);
    if (inv.command == "run-radial") return cmd_run_radial(ctx, root);
    if (inv.command == "diagnose") return cmd_diagnose(ctx, root);
    if (inv.command == "compare-scaling") return cmd_compare_scaling(ctx, root);
    if (inv.command == "zoom") return cmd_zoom(ctx, root);
    if (inv.command == "blowup-search") return cmd_blowup_search(ctx, root);
  } catch (const NumericalFailure& f) {
    return numerical_exit(ctx, {f.what(), f.time(), f.location(), f.max_value()});
  }
  throw ConfigError("<command>", "unknown subcommand " + inv.command);
}

/// Parses argv, runs one subcommand and returns the process exit code:
/// 0 success, 1 selftest failure or I/O error, 2 config error, 3 numerical failure.
inline int run_command(int argc, const char* const* argv) {
  CLI::App app{"numerical lab for the toy model u_t - Lap u + u.grad u + u div u / 2 = 0", "toyns"};
  app.require_subcommand(1);
  app.set_version_flag("--version", TOYNS_VERSION);
  Invocation inv;
  std::string out_dir;
  int workers = 0;
  std::uint64_t seed = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"run3d", "integrate the 3D toy model; writes snapshots and energy.csv"},
      {"run-radial", "integrate the radial reduction; writes radial.csv and maxprinciple.csv"},
      {"diagnose", "regularity diagnostics on a snapshot directory"},
      {"compare-scaling", "solve/rescale commutation test; writes equivariance.csv"},
      {"zoom", "parabolic zoom sequence around a space-time point"},
      {"blowup-search", "bisection for the radial blow-up threshold amplitude"},
      {"selftest", "run the trivial example suite of every module"}};
  std::vector<CLI::App*> subs;
  std::vector<CLI::Option*> out_opts, worker_opts, seed_opts;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* cfg = sub->add_option("-c,--config", inv.config_path, "JSON config file");
    if (name != "selftest") cfg->required();
    out_opts.push_back(sub->add_option("-o,--output-dir", out_dir, "output directory (overrides output_dir)"));
    worker_opts.push_back(sub->add_option("-j,--workers", workers, "worker threads (overrides worker_count)")
                              ->check(CLI::Range(1, 256)));
    seed_opts.push_back(sub->add_option("--seed", seed, "random seed (overrides seed)"));
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    inv.command = subs[i]->get_name();
    if (out_opts[i]->count()) inv.output_dir = out_dir;
    if (worker_opts[i]->count()) inv.workers = workers;
    if (seed_opts[i]->count()) inv.seed = seed;
  }
  try {
    return dispatch(inv);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
}

}  // namespace toyns::cli
