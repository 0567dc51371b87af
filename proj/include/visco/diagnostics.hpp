#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "visco/galerkin_rhs.hpp"
#include "visco/spectral_basis.hpp"
#include "visco/time_integrator.hpp"
#include "visco/viscosity.hpp"

namespace visco {

// ---------------------------------------------------------------------------
// Energy inequality and energy equality

struct EnergyReport {
  /// min over records of RHS - LHS of
  ///   ||u(t)||^2 + 1/2 int ||u||^2_{H1} <= 2 int ||f||^2_{H-1} + ||u0||^2.
  double worst_inequality_margin = 0.0;
  /// min over records of ||u0||^2 + 2 int <f,u> - ||u(t)||^2 - int ||u||^2_{H1},
  /// i.e. the same balance with only the j' term dropped. Zero for Stokes flow.
  double worst_sharp_margin = 0.0;
  /// max over consecutive records of |1/2 (l2^2_{k+1} - l2^2_k) + int work|.
  double balance_residual_max = 0.0;
  std::vector<double> margins;
  std::vector<double> balance_residuals;  // per interval, size() - 1 entries
  std::vector<double> eta_series;
};

/// Evaluates both sides of the energy inequality at every record from the
/// integrals accumulated by the integrator. Requires a record at t = 0.
EnergyReport energy_inequality_check(const TrajectoryRecord& traj, double u0_norm);

struct EtaPoint {
  double t = 0.0;
  double eta = 1.0;
  double residual = 0.0;  // phi(eta) - tau at the returned eta
  bool bracketed = true;  // sign change found on [theta, 1]
  double residual_lo = 0.0;  // phi(theta) - tau
  double residual_hi = 0.0;  // phi(1) - tau
};

/// <j'(v), u> with the unregularized law: int F(|D(v)|) D(v) : D(u), with
/// the integrand taken as 0 where D(v) vanishes.
double jprime_pairing_unregularized(const CoefficientVector& v, const CoefficientVector& u, const ViscosityModel& model);

/// Per record, solves
///   phi(eta) = (1/eta) <j'(eta u), eta u> = tau
/// for eta in [theta, 1] by bisection, where tau = <j'_eps(u), u> is the drain
/// of the recorded run (fp - dissipation - 1/2 d/dt l2^2 on the Galerkin ODE)
/// and j' is unregularized. Records with u = 0 get eta = 1. When the bracket
/// has no sign change, the endpoint with the smaller residual is returned with
/// `bracketed = false`. Requires stored states.
std::vector<EtaPoint> energy_equality_eta(const TrajectoryRecord& traj, const ViscosityModel& model, double theta);

// ---------------------------------------------------------------------------
// Estimates on j'

struct JprimeBound {
  double lhs = 0.0;                // L^{4/N} norm in time of ||j'_eps(u)||_{H-1}
  std::vector<double> dual_norms;  // per record
};

/// Requires stored states. Time integral by the trapezoid rule over records.
JprimeBound jprime_bound_check(const TrajectoryRecord& traj, const ViscosityModel& model, double eps);

/// True when consecutive values differ by a ratio of at most 1 + tol.
bool uniformly_bounded(const std::vector<double>& values, double tol = 0.1);

/// l4^2 / (h1^{N/2} l2^{(4-N)/2}). Throws DiagnosticError on the zero state.
double gn_ratio(const CoefficientVector& coeffs);

/// j(u) - j_eps(u) by grid quadrature. Throws DiagnosticError when j(u) is not finite.
double j_gap(const ViscosityModel& model, const CoefficientVector& coeffs, double eps);

/// 2^{gamma - 1/2} (a^gamma + b^gamma) - s^gamma for norms a = |u|, b = |v|,
/// s = |u + v|. Non-negative for gamma >= 1/2. Throws DiagnosticError otherwise.
double power_sum_margin(double norm_u, double norm_v, double norm_sum, double gamma);

struct ContinuityReport {
  double lipschitz = 0.0;  // L
  double worst_ratio = 0.0;  // max |l2^2_{k+1} - l2^2_k| / (L dt)
};

/// |l2(t_{k+1})^2 - l2(t_k)^2| <= L (t_{k+1} - t_k), with
/// L = 2 (max(dissipation + jprime_pairing) + max |forcing_power|) over the records.
ContinuityReport continuity_check(const TrajectoryRecord& traj);

// ---------------------------------------------------------------------------
// Stopping time

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

/// Least squares fit of l2^alpha against t over records with t in
/// [t_lo, t_hi] and l2 > 0. Throws DiagnosticError with fewer than 10 records.
DecayFit alpha_decay_fit(const TrajectoryRecord& traj, double alpha, double t_lo, double t_hi);

/// Records after T1 with l2^alpha between `lo` and `hi` times l2(T1)^alpha.
std::pair<double, double> late_window(const TrajectoryRecord& traj, double T1, double alpha, double lo = 0.05,
                                      double hi = 0.5);

/// l2 at t by linear interpolation between records.
double l2_at(const TrajectoryRecord& traj, double t);

struct StoppingReport {
  double alpha = 1.0;
  double fit_slope = 0.0;
  double fit_intercept = 0.0;
  double fit_r2 = 0.0;
  double T1 = 0.0;
  double T0_bound = 0.0;  // T1 + l2(T1)^alpha / |slope|
  std::optional<double> T0_measured;
  bool bound_ok = true;   // T0_measured <= T0_bound * 1.05 when measured
  std::vector<std::pair<double, double>> eps_extrapolation;  // (eps, T0)
  std::optional<double> T0_extrapolated;
};

/// Throws DiagnosticError unless fit.slope < 0.
StoppingReport stopping_bound(const TrajectoryRecord& traj, double T1, double alpha, const DecayFit& fit,
                              std::optional<StoppingEvent> stop = std::nullopt);

/// Linear least squares of T0 against eps, evaluated at eps = 0.
/// Throws DiagnosticError with fewer than 2 points or a single eps value.
double extrapolate_T0(const std::vector<std::pair<double, double>>& table);

/// True when T0 is strictly monotone in eps (either direction).
bool monotone_in_eps(std::vector<std::pair<double, double>> table);

// ---------------------------------------------------------------------------
// Double limit

/// One simulation family: everything but eps and m_max.
struct RunSetup {
  int N = 2;
  ViscosityModel model;
  std::function<CoefficientVector(BasisPtr)> u0;
  ForcingSpec forcing;  // modes named by xi so they resolve in every basis
  IntegratorConfig integrator;
  int grid_size = 0;    // 0: default_grid_size(m)
};

struct ConvergenceTable {
  std::vector<double> eps_list;
  std::vector<int> m_list;
  std::vector<double> sample_times;
  /// eps_diff[j][i]: difference between (eps_i, m_j) and (eps_{i+1}, m_j).
  std::vector<std::vector<double>> eps_diff;
  /// m_diff[i][j]: difference between (eps_i, m_j) and (eps_i, m_{j+1}) on the m_j modes.
  std::vector<std::vector<double>> m_diff;
  bool eps_monotone = false;
  bool m_monotone = false;

  bool converged() const { return eps_monotone && m_monotone; }
};

/// L^2((0,T); L^2) distance of two runs sampled at the same times, by the
/// trapezoid rule, after restricting both to the basis of `a`.
double l2l2_difference(const std::vector<CoefficientVector>& a, const std::vector<CoefficientVector>& b,
                       const std::vector<double>& times);

/// Runs the (eps, m) matrix and compares consecutive refinements at
/// `n_samples` uniform times on [0, t_end]. Lists need at least 3 entries;
/// eps decreasing, m increasing. Runs are spread over `threads` workers.
/// An axis is monotone when its differences strictly decrease; neighbours
/// both below 1e-12 count as converged.
ConvergenceTable convergence_study(const RunSetup& setup, const std::vector<double>& eps_list,
                                   const std::vector<int>& m_list, int n_samples = 64, unsigned threads = 1);

/// Worker count from VISCO_THREADS, else the hardware concurrency.
unsigned sweep_threads();

/// Runs f(0) .. f(n-1) on up to `threads` workers. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f);

}  // namespace visco
