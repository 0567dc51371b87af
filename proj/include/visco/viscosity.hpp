#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace visco {

enum class ViscosityKind { power_law, carreau, cross, log_power, constant, tabulated };

std::string to_string(ViscosityKind kind);
ViscosityKind kind_from_string(const std::string& name);

/// Tabulated viscosity law. Interpolates log(t F(t)) against log t with a
/// monotone piecewise cubic, so a non-decreasing t F(t) stays non-decreasing
/// between and beyond the samples.
class TabulatedLaw {
 public:
  TabulatedLaw(std::vector<double> t, std::vector<double> F);

  double operator()(double t) const;
  double t_min() const { return t_.front(); }
  double t_max() const { return t_.back(); }
  std::size_t size() const { return t_.size(); }

 private:
  struct Spline;

  std::vector<double> t_;
  double s_lo_, s_hi_, y_lo_, y_hi_;
  double slope_lo_, slope_hi_;  // end slopes of log(tF) vs log t, used to extrapolate
  std::shared_ptr<const Spline> spline_;
  std::vector<double> linear_s_, linear_y_;  // fewer than four samples
};

/// Load a two-column CSV (t, F) with strictly increasing t. A non-numeric first
/// line is treated as a header.
std::shared_ptr<const TabulatedLaw> load_tabulated_law(const std::string& path);

/// Constants (exponent, K, t0) of the upper growth bound F(t) <= K t^-exponent for t >= t0.
struct GrowthBound {
  double exponent;
  double K;
  double t0;
};

/// A viscosity law F with its parameters.
///
/// `alpha` is the law's exponent. For power_law, carreau and log_power it is
/// also the exponent of the growth bound; cross and constant laws are bounded
/// at infinity and use exponent 0 there. `K` / `t0` override the per-kind
/// defaults of the growth bound. `kappa` is the constant of the lower bound
/// F(t) >= kappa t^-alpha used by the stopping-time study.
struct ViscosityModel {
  ViscosityKind kind = ViscosityKind::power_law;
  double alpha = 1.0;
  double mu = 1.0;     // carreau smoothing
  double gamma = 1.0;  // cross offset, log_power cutoff
  double beta = 0.25;  // log_power exponent
  double kappa = 1.0;
  double value = 1.0;  // constant law
  std::optional<double> K;
  std::optional<double> t0;
  std::shared_ptr<const TabulatedLaw> table;

  static ViscosityModel power_law(double alpha);
  static ViscosityModel carreau(double mu, double alpha);
  static ViscosityModel cross(double gamma, double alpha);
  static ViscosityModel log_power(double alpha, double beta, double gamma);
  static ViscosityModel constant(double value);
  static ViscosityModel tabulated(std::shared_ptr<const TabulatedLaw> table, double alpha = 0.0);

  /// True when F has a finite limit at t -> 0+.
  bool bounded_at_zero() const;
  GrowthBound growth_bound() const;
  /// Structural parameter checks (positivity, finiteness). Throws ParameterError.
  void validate() const;
  std::string describe() const;
};

/// Named entries of the model catalog at default parameters.
std::vector<std::pair<std::string, ViscosityModel>> model_catalog();

/// Build a catalog model by name, overriding defaults from `params`
/// (keys alpha, mu, gamma, beta, kappa, value, K, t0).
ViscosityModel make_model(const std::string& name, const std::map<std::string, double>& params = {});

/// F(t). Throws DomainError for t <= 0 on laws singular at 0.
double eval_F(const ViscosityModel& model, double t);

/// F(sqrt(s2)) without the square root where the law allows it. No domain checks;
/// used on collocation grids after the caller has validated the regularization.
double eval_F_of_square(const ViscosityModel& model, double s2);

/// G_eps'(t) = t F(sqrt(eps + t^2)).
double eval_Gprime(const ViscosityModel& model, double t, double eps);

struct QuadratureTolerance {
  double abs = 1e-10;
  double rel = 1e-8;
};

/// G_eps(t) = int_0^t s F(sqrt(eps + s^2)) ds. Closed form for power_law,
/// carreau, cross and constant; adaptive Gauss-Kronrod otherwise.
double eval_G(const ViscosityModel& model, double t, double eps, QuadratureTolerance tol = {});

/// Adaptive Gauss-Kronrod integral of G_eps' on [0, t], ignoring closed forms.
double integrate_Gprime(const ViscosityModel& model, double t, double eps, QuadratureTolerance tol = {});

struct Witness {
  std::string condition;
  double t;
  double violation;
};

struct ConditionReport {
  bool c1 = true;  // F > 0
  bool c2 = true;  // locally Lipschitz
  bool c3 = true;  // t F(t) non-decreasing
  bool c4 = true;  // F(t) <= K t^-alpha for t >= t0
  bool near_zero = true;  // F(t) <= t^-(1+beta) near 0
  std::vector<Witness> witnesses;

  bool all_passed() const { return c1 && c2 && c3 && c4 && near_zero; }
};

/// Log-spaced sampling grid, `n` points on [lo, hi].
std::vector<double> log_grid(double lo = 1e-6, double hi = 1e3, std::size_t n = 512);

/// Sample the hypotheses on `t_grid` (strictly increasing, spanning [1e-6, 1e3]).
/// `beta` in (0, 1/2) sets the near-zero bound.
ConditionReport check_conditions(const ViscosityModel& model, std::span<const double> t_grid,
                                 double beta = 0.25);

/// Sampled check of F(t) >= kappa t^-alpha. Returns the violations.
std::vector<Witness> check_lower_bound(const ViscosityModel& model, std::span<const double> t_grid);

/// theta with G(t) = theta t^2 F(theta t) for the power law t^-alpha, alpha in (0, 1].
double theta_for_power_law(double alpha);

}  // namespace visco
