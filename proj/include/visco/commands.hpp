#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "visco/config.hpp"
#include "visco/diagnostics.hpp"
#include "visco/time_integrator.hpp"

namespace visco {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_condition = 2,
  exit_integrator = 3,
  exit_no_extinction = 4,
  exit_no_convergence = 5,
};

/// One simulation with its outputs in `dir`:
///   config.ini          resolved config echo
///   trajectory.csv      one row per record, written as the run proceeds
///   snapshots.csv       states at t = 0, T1, sample times, t_end or the stop,
///                       and every `snapshot_every` records
///   energy_report.csv   per-record energy margins (and eta with output.eta)
///   events.log          START / T1 / STOP / END / FAIL lines
///   summary.txt
///   FAILED              only when the integrator threw
struct ExperimentOutcome {
  RunResult result;
  EnergyReport energy;
  double u0_norm = 0.0;
  std::string failure;  // non-empty when the integrator threw

  bool failed() const { return !failure.empty(); }
};

/// Runs `cfg` writing into `dir`. Integrator errors are caught and reported
/// through `failure`; configuration errors propagate.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Checks (C1)-(C4) and the near-zero bound for each entry of `names`:
///   all             the whole catalog
///   <name>          a catalog entry or law kind at default parameters
///   <name>:k=v,...  with parameter overrides
///   table:<path>    a tabulated law
/// Prints one row per model. Exit 0 if all pass, 2 on a failure, 1 on a bad name.
int cmd_models(const std::vector<std::string>& names, std::ostream& out, std::ostream& err);

/// One run. `out_dir` overrides output.dir. Exit 3 on integrator failure,
/// 1 on an invalid config.
int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err);

/// Stopping-time sweep: one run per eps in `<out>/eps_<eps>`, fits of
/// l2^alpha on the late window, stopping_report.csv. `alpha` defaults to the
/// model's exponent and must lie in (0, 4/(N+2)]. Exit 2 when the law misses
/// F >= kappa t^-alpha, 4 when a run does not extinguish or overshoots the bound.
int cmd_stoptime(const std::string& config_path, const std::optional<std::string>& out_dir,
                 std::optional<double> alpha, std::vector<double> eps_list, std::ostream& out, std::ostream& err);

/// Double-limit study over eps_list x m_list, convergence.csv. Exit 5 when a
/// refinement axis is not monotone, 1 on lists shorter than 3.
int cmd_converge(const std::string& config_path, const std::optional<std::string>& out_dir,
                 const std::vector<double>& eps_list, const std::vector<int>& m_list, std::ostream& out,
                 std::ostream& err);

}  // namespace visco
