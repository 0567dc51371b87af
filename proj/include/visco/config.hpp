#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "visco/diagnostics.hpp"
#include "visco/galerkin_rhs.hpp"
#include "visco/spectral_basis.hpp"
#include "visco/time_integrator.hpp"
#include "visco/viscosity.hpp"

namespace visco {

struct ModelConfig {
  std::string name;
  std::map<std::string, double> params;  // alpha, mu, gamma, beta, kappa, value, K, t0
  std::string table;                     // tabulated: two-column CSV path
};

struct ModeAmplitude {
  std::array<int, 3> xi{};
  Phase phase = Phase::cos;
  int polarization = 0;
  double amplitude = 0.0;
};

/// Initial data presets.
///   single_mode    one basis mode (xi, phase, polarization, amplitude)
///   taylor_green   (cos x sin y, -sin x cos y) scaled by amplitude
///   random_seeded  coefficients z_i |xi|^-slope, z_i standard normal from a
///                  splitmix64 counter stream keyed by seed and mode index
///   modes          sum of [u0_mode.*] sections
///   snapshot       state at `time` (default: last) in a snapshots.csv file
/// `norm`, when set, rescales the projected state to that L2 norm.
struct U0Config {
  std::string preset = "taylor_green";
  ModeAmplitude mode{{1, 0, 0}, Phase::cos, 0, 1.0};
  std::uint64_t seed = 0;
  double slope = 1.0;
  std::optional<double> norm;
  std::vector<ModeAmplitude> modes;
  std::string file;
  std::optional<double> time;
};

struct ExperimentConfig {
  ModelConfig model;
  int N = 2;
  int m_max = 0;
  int grid_size = 0;  // resolved to default_grid_size(m_max) when absent
  double eps = 1e-6;
  U0Config u0;
  ForcingSpec forcing;
  IntegratorConfig integrator;
  std::string out_dir = "out";
  int snapshot_every = 0;  // records between snapshots; 0 keeps landings only
  bool eta = false;        // add energy-equality eta columns to the energy report (power law)
};

/// Parses and validates an INI document:
///
///   [model]    name, alpha, mu, gamma, beta, kappa, value, K, t0, table
///   [basis]    N, m_max, grid_size
///   [run]      eps, t_end, dt_init, dt_min, dt_max, rel_tol, abs_tol, stop_tol, sample_times
///   [u0]       preset, xi, phase, polarization, amplitude, seed, slope, norm, file, time
///   [u0_mode.<label>]       xi, phase, polarization, amplitude
///   [forcing]  T1
///   [forcing_term.<label>]  xi, phase, polarization, amplitude, envelope, omega, shift
///   [output]   dir, record_every, snapshot_every, eta
///
/// Lists are written [a, b, c]. Comments start with ';' or '#'. Relative paths
/// resolve against `base_dir`. Throws ParseError (with line) or ValidationError
/// (with key).
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "");

/// Reads `path` and parses it with paths relative to its directory.
ExperimentConfig load_config(const std::string& path);

/// Every resolved field, in the format parse_config reads.
std::string echo_config(const ExperimentConfig& cfg);

ViscosityModel build_model(const ModelConfig& cfg);
BasisPtr build_basis(const ExperimentConfig& cfg);
CoefficientVector build_u0(const ExperimentConfig& cfg, BasisPtr basis);
RunSetup to_run_setup(const ExperimentConfig& cfg);

/// splitmix64 output for (seed, counter).
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace visco
