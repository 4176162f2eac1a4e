#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "toyns/cli.hpp"

namespace fs = std::filesystem;
using toyns::cli::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("toyns_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "toyns");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return toyns::cli::run_command(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json small_run3d() {
  return json::parse(R"({
    "seed": 4,
    "solver": {
      "grid": {"boundary": "periodic", "n": 12, "length": 6.283185307179586},
      "initial": {"type": "random", "band": [1, 2], "amplitude": 0.3},
      "t_end": 0.2,
      "snapshot_stride": 2
    }
  })");
}

}  // namespace

TEST(Cli, SelftestPasses) { EXPECT_EQ(run({"selftest"}), 0); }

TEST(Cli, Run3dWritesManifestLedgerAndSnapshots) {
  const auto dir = scratch("run3d");
  const auto cfg = write_config(dir, small_run3d());
  ASSERT_EQ(run({"run3d", "-c", cfg.string(), "-o", (dir / "out").string()}), 0);
  const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["schema_version"], toyns::cli::kSchemaVersion);
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["config"]["solver"]["cfl_safety"], 0.9);
  EXPECT_TRUE(manifest["config"]["solver"].contains("dt"));
  EXPECT_EQ(manifest["config"]["solver"]["initial"]["seed"], 4);
  std::ifstream energy(dir / "out" / "energy.csv");
  std::string header;
  std::getline(energy, header);
  EXPECT_EQ(header, "t,kinetic,dissipation_cum,residual");
  EXPECT_TRUE(fs::exists(dir / "out" / "snapshots" / "snapshot_000000.bin"));
  const auto u0 = toyns::read_snapshot(dir / "out" / "snapshots" / "snapshot_000000.bin");
  EXPECT_EQ(u0.grid.n[0], 12);
}

TEST(Cli, CflViolationIsAConfigErrorCitingTheBound) {
  const auto dir = scratch("cfl");
  auto j = small_run3d();
  j["solver"]["dt"] = 0.1;
  const auto cfg = write_config(dir, j);
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run3d", "-c", cfg.string(), "-o", (dir / "out").string()}), 2);
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("solver.dt"), std::string::npos) << err;
  EXPECT_NE(err.find("h^2/6"), std::string::npos) << err;
}

TEST(Cli, UnknownKeysAreRejectedByName) {
  const auto dir = scratch("strict");
  for (const auto& [path, key] : std::vector<std::pair<std::string, std::string>>{
           {"/solver/grid/size", "solver.grid.size"},
           {"/solver/initial/ampl", "solver.initial.ampl"},
           {"/verbose", "verbose"}}) {
    auto j = small_run3d();
    j[json::json_pointer(path)] = 1;
    const auto cfg = write_config(dir, j);
    testing::internal::CaptureStderr();
    EXPECT_EQ(run({"run3d", "-c", cfg.string(), "-o", (dir / "out").string()}), 2);
    const std::string err = testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("'" + key + "'"), std::string::npos) << err;
  }
  auto j = small_run3d();
  j["solver"]["initial"]["amplitude"] = "large";
  const auto cfg = write_config(dir, j);
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run3d", "-c", cfg.string(), "-o", (dir / "out").string()}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("solver.initial.amplitude"), std::string::npos);
}

TEST(Cli, OutputDirFallsBackToEnvironment) {
  const auto dir = scratch("env");
  const auto cfg = write_config(dir, small_run3d());
  ::unsetenv("TOYNS_OUTPUT_DIR");
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run3d", "-c", cfg.string()}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("output_dir"), std::string::npos);
  ::setenv("TOYNS_OUTPUT_DIR", (dir / "from_env").c_str(), 1);
  EXPECT_EQ(run({"run3d", "-c", cfg.string()}), 0);
  ::unsetenv("TOYNS_OUTPUT_DIR");
  EXPECT_TRUE(fs::exists(dir / "from_env" / "manifest.json"));
}

TEST(Cli, RadialRiccatiBlowUpExitsThreeWithFailureRecord) {
  const auto dir = scratch("riccati");
  const double a = 1.0;
  const auto cfg = write_config(dir, json::parse(R"({
    "radial": {"r_max": 1.0, "dr": 0.05, "t_end": 1.0, "snapshot_stride": 500,
               "initial": {"type": "constant", "a": 1.0},
               "boundary": {"type": "riccati", "a": 1.0}}
  })"));
  EXPECT_EQ(run({"run-radial", "-c", cfg.string(), "-o", (dir / "out").string()}), 3);
  const auto failure = json::parse(slurp(dir / "out" / "failure.json"));
  for (const char* k : {"time", "location", "max_value", "message"}) EXPECT_TRUE(failure.contains(k)) << k;
  EXPECT_EQ(json::parse(slurp(dir / "out" / "manifest.json"))["status"], "numerical_failure");
  // blow-up time estimate: last time in radial.csv
  std::ifstream is(dir / "out" / "radial.csv");
  std::string line, last;
  while (std::getline(is, line))
    if (!line.empty()) last = line;
  const double t_est = std::stod(last.substr(0, last.find(',')));
  EXPECT_NEAR(t_est, 2.0 / (5.0 * a), 0.05 * 2.0 / (5.0 * a));
  EXPECT_NEAR(failure["time"].get<double>(), 0.4, 0.02);
}

TEST(Cli, RadialDefaultsAndFileInputs) {
  const auto dir = scratch("radial_files");
  {
    std::ofstream p(dir / "profile.csv");
    p << "r,v\n";
    for (int j = 0; j <= 20; ++j) p << 0.05 * j << "," << 0.3 * std::exp(-0.0025 * j * j) << "\n";
    std::ofstream b(dir / "wall.csv");
    b << "t,v\n0,0\n1,0\n";
  }
  json j = json::parse(R"({"radial": {"r_max": 1.0, "dr": 0.05, "t_end": 0.05, "snapshot_stride": 50,
                                       "initial": {"type": "file"}, "boundary": {"type": "file"}}})");
  j["radial"]["initial"]["path"] = (dir / "profile.csv").string();
  j["radial"]["boundary"]["path"] = (dir / "wall.csv").string();
  ASSERT_EQ(run({"run-radial", "-c", write_config(dir, j).string(), "-o", (dir / "out").string()}), 0);
  std::ifstream mp(dir / "out" / "maxprinciple.csv");
  std::string header;
  std::getline(mp, header);
  EXPECT_EQ(header, "t,interior_max,boundary_max,excess");
  j["radial"]["r_max"] = 1.01;
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"run-radial", "-c", write_config(dir, j).string(), "-o", (dir / "out2").string()}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("radial.r_max"), std::string::npos);
}

TEST(Cli, DiagnoseZoomAndScalingPipeline) {
  const auto dir = scratch("pipeline");
  auto j = small_run3d();
  j["solver"]["grid"]["n"] = 16;
  j["solver"]["t_end"] = 1.0;
  j["solver"]["snapshot_stride"] = 1;
  ASSERT_EQ(run({"run3d", "-c", write_config(dir, j).string(), "-o", (dir / "run").string()}), 0);
  const std::string snaps = (dir / "run" / "snapshots").string();

  json d;
  d["diagnostics"] = {{"snapshots", snaps},
                      {"centers", {{3.141592653589793, 3.141592653589793, 3.141592653589793, 1.0}}},
                      {"radii", {1.0, 0.75}},
                      {"ball_samples", 8}};
  ASSERT_EQ(run({"diagnose", "-c", write_config(dir, d).string(), "-o", (dir / "diag").string()}), 0);
  for (const char* f : {"quantities.csv", "flags.csv", "dimension.txt", "bmo.csv", "lemmas.csv", "holder.csv"})
    EXPECT_TRUE(fs::exists(dir / "diag" / f)) << f;
  d["diagnostics"]["eps"] = -1.0;
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"diagnose", "-c", write_config(dir, d).string(), "-o", (dir / "diag2").string()}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("diagnostics.eps"), std::string::npos);

  json z;
  z["zoom"] = {{"snapshots", snaps}, {"z0", {3.141592653589793, 3.141592653589793, 3.141592653589793, 1.0}}, {"K", 2}};
  ASSERT_EQ(run({"zoom", "-c", write_config(dir, z).string(), "-o", (dir / "zoom").string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "zoom" / "zoom_quantities.csv"));
  EXPECT_TRUE(fs::exists(dir / "zoom" / "zoom" / "level_00" / "snapshot_000000.bin"));

  auto s = small_run3d();
  s["solver"]["cfl_safety"] = 0.2;
  s["scaling"] = {{"lambda", 3.0}, {"mode", "exact"}};
  testing::internal::CaptureStderr();
  EXPECT_EQ(run({"compare-scaling", "-c", write_config(dir, s).string(), "-o", (dir / "cs").string()}), 2);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("dyadic"), std::string::npos);
  s["scaling"] = {{"lambdas", {2.0, 3.0}}};
  ASSERT_EQ(run({"compare-scaling", "-c", write_config(dir, s).string(), "-o", (dir / "cs").string()}), 0);
  const std::string eq = slurp(dir / "cs" / "equivariance.csv");
  EXPECT_NE(eq.find("\n2,exact,"), std::string::npos) << eq;
  EXPECT_NE(eq.find("\n3,interpolated,"), std::string::npos) << eq;
}

TEST(Cli, BlowupSearchWritesBracketAndTraces) {
  const auto dir = scratch("blowup");
  const auto cfg = write_config(dir, json::parse(R"({
    "blowup": {"r_max": 1.0, "dr": 0.1, "t_end": 1.0, "family": {"type": "constant"}, "boundary": "riccati",
               "a_low": 0.0, "a_high": 1.0, "tolerance": 0.02}
  })"));
  ASSERT_EQ(run({"blowup-search", "-c", cfg.string(), "-o", (dir / "out").string()}), 0);
  std::ifstream b(dir / "out" / "bracket.csv");
  std::string header, row;
  std::getline(b, header);
  std::getline(b, row);
  const double lo = std::stod(row.substr(0, row.find(',')));
  const double hi = std::stod(row.substr(row.find(',') + 1));
  EXPECT_LE(lo, 0.4);
  EXPECT_GE(hi, 0.4);
  EXPECT_LE(hi - lo, 0.02);
  EXPECT_TRUE(fs::exists(dir / "out" / "trace_low.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "trace_high.csv"));
}
