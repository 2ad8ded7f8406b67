#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "triosc/config.hpp"
#include "triosc/dataset.hpp"
#include "triosc/figures.hpp"
#include "triosc/spectrum.hpp"
#include "triosc/sweep.hpp"

using namespace triosc;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
std::filesystem::path tmpdir() {
  auto d = std::filesystem::temp_directory_path() / "triosc_cli_test";
  std::filesystem::create_directories(d);
  return d;
}
}  // namespace

TEST_CASE("config: minimal file parses and validates") {
  const auto path = tmpdir() / "ok.cfg";
  std::ofstream(path) << "# comment\n"
                      << "f = 0.5\n"
                      << "lambda = 0.004\n"
                      << "kappa = 0.01\n"
                      << "nbar = 0\n";
  const auto cfg = parse_config_file(path.string());
  CHECK(cfg.model.f == 0.5);
  CHECK(cfg.model.lambda == 0.004);
  CHECK(cfg.model.kappa == 0.01);
  CHECK(cfg.model.nbar == 0.0);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config: out-of-range and unknown keys are rejected") {
  const auto path = tmpdir() / "bad.cfg";
  std::ofstream(path) << "nbar = -0.1\n";
  auto cfg = parse_config_file(path.string());
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  const auto path2 = tmpdir() / "unknown.cfg";
  std::ofstream(path2) << "frequencyy = 3\n";
  CHECK_THROWS_AS(parse_config_file(path2.string()), ConfigError);

  RunConfig c;
  CHECK_THROWS_AS(apply_config_entry(c, "f", "abc"), ConfigError);
  CHECK_THROWS_AS(apply_config_entry(c, "g_points", ""), ConfigError);
}

TEST_CASE("config: overrides replace file values") {
  const auto path = tmpdir() / "base.cfg";
  std::ofstream(path) << "nbar = 0\nf = 0.3\n";
  auto cfg = parse_config_file(path.string());
  apply_config_entry(cfg, "nbar", "0.05");
  CHECK(cfg.model.nbar == 0.05);
  CHECK(cfg.model.f == 0.3);
  apply_config_entry(cfg, "f_points", "0.1,0.2,0.4");
  CHECK(cfg.f_points.size() == 3);
  apply_config_entry(cfg, "kappa_points", "0:1:5");
  REQUIRE(cfg.kappa_points.size() == 5);
  CHECK(cfg.kappa_points[1] == doctest::Approx(0.25));
}

TEST_CASE("dataset: provenance header and deterministic bytes") {
  Dataset ds;
  ds.columns = {"x", "y"};
  ds.provenance = {"param a=1"};
  ds.add_row({1.0, 2.0});
  ds.add_row({0.1, -3.4e-12});
  const auto p1 = tmpdir() / "d1.csv";
  const auto p2 = tmpdir() / "d2.csv";
  write_csv(ds, p1);
  write_csv(ds, p2);
  const std::string s1 = slurp(p1);
  CHECK(s1 == slurp(p2));
  CHECK(s1.find("# param a=1") != std::string::npos);
  CHECK(s1.find("x,y") != std::string::npos);
  CHECK_THROWS_AS(ds.add_row({1.0}), DatasetError);
}

TEST_CASE("figure fig13 satisfies the bifurcation closed form") {
  RunConfig cfg;
  const auto sets = run_figure("fig13", cfg);
  REQUIRE(sets.size() == 1);
  const auto& ds = sets[0].second;
  REQUIRE(ds.rows.size() > 10);
  for (const auto& row : ds.rows) {
    const double inv_kappa = row[0], val = row[1];
    const double kappa = 1.0 / inv_kappa;
    const double fb2 = 2.0 * (std::sqrt(1.0 + kappa * kappa) - 1.0);
    CHECK(val == doctest::Approx(fb2 / kappa).epsilon(1e-12));
  }
}

TEST_CASE("figure fig4 harmonic rows match the closed form") {
  RunConfig cfg;
  const auto sets = run_figure("fig4", cfg);
  const auto& harm = sets[0].second;
  for (const auto& row : harm.rows) {
    if (row[0] != 1.0) continue;  // nbar = 1 curve
    ModelParams m = cfg.model;
    m.nbar = 1.0;
    m.f = row[1];
    const auto hd = harmonic_distribution(m);
    CHECK(row[2] == doctest::Approx(hd.inv_temperature).epsilon(1e-12));
  }
}

TEST_CASE("unknown figure id raises a figure error") {
  RunConfig cfg;
  CHECK_THROWS_AS(run_figure("fig99", cfg), FigureError);
}

TEST_CASE("sweep: cartesian grid, per-point failures, determinism") {
  RunConfig cfg;
  cfg.sweep_op = "harmonic_distribution";
  cfg.f_points = {0.3, 0.5, 0.8};
  cfg.nbar_points = {0.0, 0.1, 1.0};
  const Dataset ds = sweep(cfg);
  CHECK(ds.rows.size() == 9);
  for (const auto& row : ds.rows) CHECK(row[3] == 0.0);  // all succeeded

  // a sweep point beyond the bifurcation fails without aborting the sweep
  RunConfig cfg2;
  cfg2.sweep_op = "simulate_slow_mode";
  cfg2.model.f = 0.5;
  cfg2.model.lambda = 0.02;
  cfg2.n_trajectories = 50;
  cfg2.dt = 0.01;
  const double kb = kappa_bifurcation(cfg2.model);
  cfg2.kappa_points = {0.9 * kb, 1.2 * kb};
  const Dataset ds2 = sweep(cfg2);
  REQUIRE(ds2.rows.size() == 2);
  CHECK(ds2.rows[0][3] == 0.0);
  CHECK(ds2.rows[1][3] == 1.0);  // kappa above threshold: recorded failure

  // repeated sweep with the same seed gives bit-identical files
  const auto p1 = tmpdir() / "s1.csv";
  const auto p2 = tmpdir() / "s2.csv";
  write_csv(sweep(cfg2), p1);
  write_csv(sweep(cfg2), p2);
  CHECK(slurp(p1) == slurp(p2));

  RunConfig bad;
  bad.sweep_op = "no_such_op";
  CHECK_THROWS_AS(sweep(bad), SweepError);
}

TEST_CASE("sweep: 3x3 activation energy grid") {
  RunConfig cfg;
  cfg.sweep_op = "activation_energy";
  cfg.grid_points = 10;
  cfg.f_points = {0.3, 0.6, 1.0};
  cfg.nbar_points = {0.05, 0.3, 1.0};
  const Dataset ds = sweep(cfg);
  CHECK(ds.rows.size() == 9);
  for (const auto& row : ds.rows) {
    CHECK(row[3] == 0.0);
    CHECK(row[4] > 0.0);  // R_A
  }
}

TEST_CASE("figure fig7: the nbar=0 eikonal curve terminates inside the well") {
  RunConfig cfg;
  const auto sets = run_figure("fig7", cfg);
  const Dataset* eik = nullptr;
  const Dataset* wan = nullptr;
  for (const auto& [name, ds] : sets) {
    if (name == "fig7_eikonal") eik = &ds;
    if (name == "fig7_wannier") wan = &ds;
  }
  REQUIRE(eik != nullptr);
  REQUIRE(wan != nullptr);
  bool nonlocal_row = false, local_row = false;
  for (const auto& row : eik->rows) {
    if (row[0] != 0.0) continue;  // nbar = 0 curve
    if (row[2] == 0.0) nonlocal_row = true;   // curve terminated
    if (row[2] == 1.0 && row[1] < 0.3) local_row = true;
  }
  CHECK(local_row);
  CHECK(nonlocal_row);
  CHECK(wan->rows.size() > 80);  // both nbar values, ~50+ levels each
}

TEST_CASE("figure fig1d: zero-drive rows equal the closed-form diagonal") {
  RunConfig cfg;
  const auto sets = run_figure("fig1d", cfg);
  const auto& levels = sets[0].second;
  ModelParams m = cfg.model;
  m.lambda = 0.04;
  m.f = 0.0;
  for (const auto& row : levels.rows) {
    if (row[0] != 0.0) continue;  // f = 0 slice
    const int k = static_cast<int>(row[1]);
    const auto sm = build_sector_matrix(m, k, 200);
    std::vector<double> sorted = sm.diag;
    std::sort(sorted.begin(), sorted.end());
    const size_t idx = static_cast<size_t>(row[2]);
    REQUIRE(idx < sorted.size());
    CHECK(row[3] == doctest::Approx(sorted[idx]).epsilon(1e-12));
  }
}
