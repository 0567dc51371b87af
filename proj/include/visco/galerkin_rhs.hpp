#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "visco/spectral_basis.hpp"
#include "visco/viscosity.hpp"

namespace visco {

enum class Envelope { constant, harmonic };

/// One forced mode, named either by its basis index or by (xi, phase,
/// polarization). xi must be the stored representative of +-xi (first nonzero
/// component positive).
struct ForcingTerm {
  std::optional<std::size_t> index;
  std::array<int, 3> xi{};
  Phase phase = Phase::cos;
  int polarization = 0;
  double amplitude = 0.0;
  Envelope envelope = Envelope::constant;
  double omega = 0.0;  // harmonic: amplitude * cos(omega t + shift)
  double shift = 0.0;

  double value(double t) const;
};

/// Modal forcing, identically zero for t >= T1.
struct ForcingSpec {
  std::vector<ForcingTerm> terms;
  double T1 = std::numeric_limits<double>::infinity();

  bool empty() const { return terms.empty(); }
};

struct RhsBreakdown {
  std::vector<double> stokes;
  std::vector<double> viscous_nl;
  std::vector<double> convection;
  std::vector<double> forcing;
  std::vector<double> total;
};

/// -lambda_i d_i / 2.
std::vector<double> stokes_term(const CoefficientVector& coeffs);

/// -int F(sqrt(eps + |D(u)|^2)) D(u) : D(w_i). Throws DomainError for eps = 0
/// with a law singular at 0 and OverflowError if the viscosity exceeds 1e300.
std::vector<double> viscous_nonlinear_term(const CoefficientVector& coeffs, const ViscosityModel& model, double eps);

/// -int (u . grad u) . w_i.
std::vector<double> convection_term(const CoefficientVector& coeffs);

/// Forcing vector at t. With `left_limit` the cutoff is evaluated from the left,
/// so t = T1 still sees the active forcing. Throws UnknownModeError for modes
/// outside the basis.
std::vector<double> forcing_term(double t, const ForcingSpec& spec, const BasisSpec& basis, bool left_limit = false);

/// Full right-hand side d' = stokes + viscous_nl + convection + forcing.
RhsBreakdown rhs(const CoefficientVector& coeffs, const ViscosityModel& model, double eps, const ForcingSpec& spec,
                 bool left_limit = false);

/// j_eps(u) = int G_eps(|D(u)|) by grid quadrature.
double j_eps(const CoefficientVector& coeffs, const ViscosityModel& model, double eps);

/// <j'_eps(u), w_i> for every mode, i.e. -viscous_nonlinear_term.
std::vector<double> jprime(const CoefficientVector& coeffs, const ViscosityModel& model, double eps);

/// <j'_eps(u), u>.
double jprime_pairing(const CoefficientVector& coeffs, const ViscosityModel& model, double eps);

/// sum_i g_i^2 / lambda_i, the squared H^-1 norm of a modal functional.
double dual_norm_sq(const BasisSpec& basis, const std::vector<double>& g);

}  // namespace visco
