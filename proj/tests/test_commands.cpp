#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "visco/commands.hpp"
#include "visco/errors.hpp"
#include "visco/io.hpp"

using namespace visco;
namespace fs = std::filesystem;

namespace {

fs::path workdir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "visco_cmd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "exp.ini";
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* const bingham = R"(
[model]
name = power_law
alpha = 1
[basis]
m_max = 4
[run]
eps = 1e-8
t_end = 10
[u0]
preset = modes
norm = 1
[u0_mode.a]
xi = [1, 0]
amplitude = 1
[u0_mode.b]
xi = [1, 1]
phase = sin
amplitude = 1
)";

const char* const stokes = R"(
[model]
name = constant
value = 0
[basis]
m_max = 2
[run]
t_end = 1
[u0]
preset = single_mode
xi = [1, 0]
)";

}  // namespace

TEST_CASE("cmd_models: catalog, negative controls, unknown names") {
  std::ostringstream out, err;
  CHECK(cmd_models({"all"}, out, err) == exit_ok);
  CHECK(out.str().find("FAIL") == std::string::npos);

  const auto dir = workdir("models");
  {
    std::ofstream t(dir / "steep.csv");
    t << "t,F\n";
    for (int k = -12; k <= 7; ++k) {
      const double x = std::pow(10.0, 0.5 * k);
      t << x << "," << std::pow(x, -1.5) << "\n";
    }
  }
  std::ostringstream out2, err2;
  CHECK(cmd_models({"table:" + (dir / "steep.csv").string()}, out2, err2) == exit_condition);
  CHECK(out2.str().find("C3 at t=") != std::string::npos);

  std::ostringstream out3, err3;
  CHECK(cmd_models({"power_law:alpha=1.5"}, out3, err3) == exit_condition);
  CHECK(cmd_models({"carreau:mu=2,alpha=0.5"}, out3, err3) == exit_ok);

  std::ostringstream out4, err4;
  CHECK(cmd_models({"oobleck"}, out4, err4) == exit_usage);
  CHECK(err4.str().find("oobleck") != std::string::npos);
  CHECK(cmd_models({"carreau:viscocity=1"}, out4, err4) == exit_usage);
  CHECK(cmd_models({}, out4, err4) == exit_usage);
}

TEST_CASE("cmd_run: Stokes trajectory follows exp(-t/2)") {
  const auto dir = workdir("stokes");
  std::ostringstream out, err;
  REQUIRE(cmd_run(write_config(dir, stokes), (dir / "out").string(), out, err) == exit_ok);
  const auto rows = read_trajectory((dir / "out" / "trajectory.csv").string());
  REQUIRE(rows.size() > 2);
  CHECK(rows.front().t == 0.0);
  CHECK(rows.back().t == 1.0);
  for (const auto& r : rows) CHECK(r.l2 == doctest::Approx(std::exp(-0.5 * r.t)).epsilon(1e-8));
  for (const char* f : {"config.ini", "snapshots.csv", "energy_report.csv", "events.log", "summary.txt"})
    CHECK(fs::exists(dir / "out" / f));
  CHECK_FALSE(fs::exists(dir / "out" / "FAILED"));
  const auto snaps = read_snapshots((dir / "out" / "snapshots.csv").string(), build_basis(2, 2));
  REQUIRE(snaps.size() == 2);
  CHECK(snaps.back().t == 1.0);
}

TEST_CASE("cmd_run: Bingham run logs a STOP line") {
  const auto dir = workdir("bingham");
  std::ostringstream out, err;
  REQUIRE(cmd_run(write_config(dir, bingham), (dir / "out").string(), out, err) == exit_ok);
  const std::string log = slurp(dir / "out" / "events.log");
  CHECK(log.find("STOP T0=") != std::string::npos);
  CHECK(log.find("END t=") != std::string::npos);
}

TEST_CASE("cmd_run: config errors exit 1, integrator failures exit 3 with FAILED") {
  const auto dir = workdir("failures");
  std::ostringstream out, err;
  std::string text = stokes;
  text.replace(text.find("t_end = 1"), 9, "t_end = 0");
  CHECK(cmd_run(write_config(dir, text), (dir / "out").string(), out, err) == exit_usage);
  CHECK(err.str().find("run.t_end") != std::string::npos);
  CHECK(cmd_run((dir / "missing.ini").string(), std::nullopt, out, err) == exit_usage);

  const std::string stiff = R"(
[model]
name = power_law
alpha = 1
[basis]
m_max = 4
[run]
eps = 1e-10
t_end = 1
dt_init = 0.5
dt_min = 0.5
dt_max = 0.5
[u0]
preset = taylor_green
)";
  std::ostringstream out2, err2;
  CHECK(cmd_run(write_config(dir, stiff), (dir / "stiff").string(), out2, err2) == exit_integrator);
  CHECK(fs::exists(dir / "stiff" / "FAILED"));
  CHECK(fs::exists(dir / "stiff" / "trajectory.csv"));
  CHECK(slurp(dir / "stiff" / "events.log").find("FAIL") != std::string::npos);
}

TEST_CASE("cmd_run: byte-identical reruns, reproducible from the echo") {
  const auto dir = workdir("rerun");
  std::string text = bingham;
  text.replace(text.find("t_end = 10"), 10, "t_end = 0.05");
  const auto cfg = write_config(dir, text);
  std::ostringstream out, err;
  REQUIRE(cmd_run(cfg, (dir / "a").string(), out, err) == exit_ok);
  REQUIRE(cmd_run(cfg, (dir / "b").string(), out, err) == exit_ok);
  REQUIRE(cmd_run((dir / "a" / "config.ini").string(), (dir / "c").string(), out, err) == exit_ok);
  for (const char* f : {"trajectory.csv", "snapshots.csv", "energy_report.csv"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    CHECK(slurp(dir / "a" / f) == slurp(dir / "c" / f));
  }
}

TEST_CASE("cmd_stoptime: exponent range and lower bound") {
  const auto dir = workdir("stop_range");
  std::ostringstream out, err;
  std::string text = bingham;
  text.replace(text.find("t_end = 10"), 10, "t_end = 0.05");
  const auto cfg = write_config(dir, text);
  // alpha = 1 is admissible for N = 2; the short horizon leaves the run above stop_tol.
  CHECK(cmd_stoptime(cfg, (dir / "a").string(), std::nullopt, {}, out, err) == exit_no_extinction);
  CHECK(cmd_stoptime(cfg, (dir / "b").string(), 1.2, {}, out, err) == exit_usage);
  CHECK(cmd_stoptime(cfg, (dir / "b").string(), 0.0, {}, out, err) == exit_usage);

  const auto dir3 = workdir("stop_3d");
  const std::string three = R"(
[model]
name = power_law
alpha = 0.9
[basis]
N = 3
m_max = 2
[u0]
preset = taylor_green
)";
  std::ostringstream out3, err3;
  CHECK(cmd_stoptime(write_config(dir3, three), (dir3 / "o").string(), std::nullopt, {}, out3, err3) == exit_usage);
  CHECK(err3.str().find("0.8") != std::string::npos);

  const auto dirc = workdir("stop_carreau");
  std::ostringstream outc, errc;
  CHECK(cmd_stoptime(write_config(dirc, "[model]\nname = carreau\n[basis]\nm_max = 2\n"), (dirc / "o").string(), 1.0,
                     {}, outc, errc) == exit_condition);
  CHECK(errc.str().find("witness") != std::string::npos);
}

TEST_CASE("cmd_stoptime: three-eps Bingham sweep") {
  const auto dir = workdir("stop_sweep");
  std::ostringstream out, err;
  REQUIRE(cmd_stoptime(write_config(dir, bingham), (dir / "o").string(), std::nullopt, {1e-6, 1e-7, 1e-8}, out, err) ==
          exit_ok);
  const std::string report = slurp(dir / "o" / "stopping_report.csv");
  CHECK(report.rfind("eps,T0_measured,T0_bound", 0) == 0);
  CHECK(slurp(dir / "o" / "stopping_summary.txt").find("eps_table_monotone: true") != std::string::npos);
  for (const char* e : {"eps_1e-06", "eps_1e-07", "eps_1e-08"}) CHECK(fs::exists(dir / "o" / e / "config.ini"));
}

TEST_CASE("cmd_converge: constant law and list lengths") {
  const auto dir = workdir("converge");
  const std::string text = R"(
[model]
name = constant
value = 1
[basis]
m_max = 4
[run]
t_end = 0.5
[u0]
preset = taylor_green
[forcing_term.a]
xi = [1, 2]
amplitude = 1
)";
  const auto cfg = write_config(dir, text);
  std::ostringstream out, err;
  CHECK(cmd_converge(cfg, (dir / "o").string(), {1e-2, 1e-3, 1e-4}, {4}, out, err) == exit_usage);
  CHECK(cmd_converge(cfg, (dir / "o").string(), {1e-2, 1e-3}, {2, 4, 8}, out, err) == exit_usage);
  CHECK(cmd_converge(cfg, (dir / "o").string(), {1e-2, 1e-3, 1e-4}, {8, 4, 2}, out, err) == exit_usage);

  std::ostringstream out2, err2;
  CHECK(cmd_converge(cfg, (dir / "o").string(), {1e-2, 1e-3, 1e-4}, {2, 4, 8}, out2, err2) == exit_ok);
  std::ifstream csv(dir / "o" / "convergence.csv");
  std::string line;
  std::getline(csv, line);
  int eps_rows = 0;
  while (std::getline(csv, line))
    if (line.rfind("eps,", 0) == 0) {
      ++eps_rows;
      CHECK(std::stod(line.substr(line.rfind(',') + 1)) <= 1e-12);
    }
  CHECK(eps_rows == 6);
}
