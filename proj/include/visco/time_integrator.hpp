#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "visco/galerkin_rhs.hpp"
#include "visco/spectral_basis.hpp"
#include "visco/viscosity.hpp"

namespace visco {

struct IntegratorConfig {
  double dt_init = 1e-3;
  double dt_min = 1e-12;
  double dt_max = 0.1;
  double rel_tol = 1e-8;
  double abs_tol = 1e-14;
  double t_end = 1.0;
  double stop_tol = 1e-10;
  int record_every = 1;
  /// Extra times the stepper lands on and records, e.g. to compare runs.
  std::vector<double> sample_times;
  /// Keep the coefficient vector of every record.
  bool keep_states = true;

  /// Throws ConfigurationError.
  void validate() const;
};

/// Scalars at one record. The `int_*` fields are time integrals from the
/// start of the run, accumulated over the Runge-Kutta stages of every step.
struct RecordScalars {
  double t = 0.0;
  double l2 = 0.0;
  double h1 = 0.0;
  double dissipation = 0.0;
  double j_eps_value = 0.0;
  double jprime_pairing = 0.0;
  double forcing_power = 0.0;
  double l4 = 0.0;

  double int_h1_sq = 0.0;           // int ||u||^2_{H^1_0}
  double int_forcing_dual = 0.0;    // int ||f||^2_{H^-1}
  double int_forcing_power = 0.0;   // int <f,u>
  double int_work = 0.0;            // int (dissipation + jprime_pairing - forcing_power)
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<CoefficientVector> states;  // empty unless keep_states
  std::vector<RecordScalars> scalars;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

struct StoppingEvent {
  double T0 = 0.0;
  double attained_norm = 0.0;
};

struct RunResult {
  TrajectoryRecord trajectory;
  std::optional<StoppingEvent> stop;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

/// Called once per record, in order.
using RecordObserver = std::function<void(const RecordScalars&, const CoefficientVector&)>;

/// One integrating-factor RK4 step of size dt. The Stokes part is integrated
/// exactly through exp(-lambda_i dt / 2). Throws NonfiniteStateError.
CoefficientVector step(const CoefficientVector& state, double dt, const ViscosityModel& model, double eps,
                       const ForcingSpec& spec);

/// Scalars of one state (integrals left at zero).
RecordScalars record_scalars(const CoefficientVector& state, const ViscosityModel& model, double eps,
                             const ForcingSpec& spec);

/// Adaptive integration from u0.t to cfg.t_end by step doubling. Records at the
/// start, every `record_every` accepted steps, and exactly at T1, t_end and the
/// sample times. Halts at the first accepted step with l2 <= stop_tol, which is
/// recorded and reported as the stopping event. Throws StepUnderflowError.
RunResult run(const CoefficientVector& u0, const IntegratorConfig& cfg, const ViscosityModel& model, double eps,
              const ForcingSpec& spec, const RecordObserver& observer = {});

/// First record with l2 <= stop_tol. With `alpha`, the time is refined by
/// linear interpolation of l2^alpha between the bracketing records.
std::optional<StoppingEvent> detect_stopping(const TrajectoryRecord& traj, double stop_tol,
                                             std::optional<double> alpha = std::nullopt);

}  // namespace visco
