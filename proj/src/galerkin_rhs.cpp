#include "visco/galerkin_rhs.hpp"

#include <cmath>
#include <string>

#include "visco/errors.hpp"

namespace visco {

namespace {

constexpr double overflow_limit = 1e300;

void require_regularizable(const ViscosityModel& model, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw DomainError("eps must be finite and >= 0");
  if (eps == 0.0 && !model.bounded_at_zero())
    throw DomainError("eps = 0 requires a law bounded at 0; " + model.describe() + " is singular");
}

// F(sqrt(eps + |D|^2)) D on the grid, from the velocity gradient.
GridField viscous_stress(const GridField& grad, const ViscosityModel& model, double eps) {
  const int N = grad.N;
  GridField T = GridField::zeros(Rank::tensor, N, grad.grid_size);
  const std::size_t P = grad.points();
  for (std::size_t x = 0; x < P; ++x) {
    double d2 = 0.0;
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j) {
        const double D = 0.5 * (grad.at(k, j)[x] + grad.at(j, k)[x]);
        d2 += D * D;
      }
    const double F = eval_F_of_square(model, eps + d2);
    if (!(F <= overflow_limit)) throw OverflowError("viscosity field exceeds 1e300 (|D|^2 = " + std::to_string(d2) + ")");
    for (int k = 0; k < N; ++k)
      for (int j = 0; j < N; ++j) T.at(k, j)[x] = F * 0.5 * (grad.at(k, j)[x] + grad.at(j, k)[x]);
  }
  return T;
}

// (u . grad) u on the grid.
GridField advection(const GridField& u, const GridField& grad) {
  const int N = u.N;
  GridField a = GridField::zeros(Rank::vector, N, u.grid_size);
  const std::size_t P = u.points();
  for (int k = 0; k < N; ++k) {
    auto& ak = a.comps[static_cast<std::size_t>(k)];
    for (int j = 0; j < N; ++j) {
      const auto& uj = u.comps[static_cast<std::size_t>(j)];
      const auto& gkj = grad.at(k, j);
      for (std::size_t x = 0; x < P; ++x) ak[x] += uj[x] * gkj[x];
    }
  }
  return a;
}

bool all_zero(const std::vector<double>& d) {
  for (double v : d)
    if (v != 0.0) return false;
  return true;
}

void negate(std::vector<double>& v) {
  for (double& x : v) x = -x;
}

std::size_t resolve(const ForcingTerm& f, const BasisSpec& basis) {
  if (f.index) {
    if (*f.index >= basis.size())
      throw UnknownModeError("forcing references mode index " + std::to_string(*f.index) + " outside a basis of " +
                             std::to_string(basis.size()) + " modes");
    return *f.index;
  }
  const auto i = basis.find(f.xi, f.phase, f.polarization);
  if (!i || basis.modes[*i].xi != f.xi) {
    std::string xi = "(";
    for (int d = 0; d < basis.N; ++d) xi += (d ? "," : "") + std::to_string(f.xi[static_cast<std::size_t>(d)]);
    throw UnknownModeError("forcing references mode xi=" + xi + ") " + (f.phase == Phase::cos ? "cos" : "sin") +
                           " pol=" + std::to_string(f.polarization) + " which is not in the basis");
  }
  return *i;
}

}  // namespace

double ForcingTerm::value(double t) const {
  switch (envelope) {
    case Envelope::constant: return amplitude;
    case Envelope::harmonic: return amplitude * std::cos(omega * t + shift);
  }
  return 0.0;
}

std::vector<double> stokes_term(const CoefficientVector& coeffs) {
  std::vector<double> out(coeffs.d.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -0.5 * coeffs.basis->modes[i].lambda * coeffs.d[i];
  return out;
}

std::vector<double> viscous_nonlinear_term(const CoefficientVector& coeffs, const ViscosityModel& model, double eps) {
  require_regularizable(model, eps);
  if (all_zero(coeffs.d)) return std::vector<double>(coeffs.d.size(), 0.0);
  const GridField grad = synthesize(coeffs, FieldKind::gradient);
  auto out = analyze(*coeffs.basis, viscous_stress(grad, model, eps), Pairing::sym_gradient);
  negate(out);
  return out;
}

std::vector<double> convection_term(const CoefficientVector& coeffs) {
  if (all_zero(coeffs.d)) return std::vector<double>(coeffs.d.size(), 0.0);
  const GridField u = synthesize(coeffs, FieldKind::velocity);
  const GridField grad = synthesize(coeffs, FieldKind::gradient);
  auto out = analyze(*coeffs.basis, advection(u, grad), Pairing::velocity);
  negate(out);
  return out;
}

std::vector<double> forcing_term(double t, const ForcingSpec& spec, const BasisSpec& basis, bool left_limit) {
  std::vector<double> out(basis.size(), 0.0);
  std::vector<std::size_t> idx;
  idx.reserve(spec.terms.size());
  for (const auto& f : spec.terms) idx.push_back(resolve(f, basis));
  const bool active = left_limit ? t <= spec.T1 : t < spec.T1;
  if (!active) return out;
  for (std::size_t k = 0; k < spec.terms.size(); ++k) out[idx[k]] += spec.terms[k].value(t);
  return out;
}

RhsBreakdown rhs(const CoefficientVector& coeffs, const ViscosityModel& model, double eps, const ForcingSpec& spec,
                 bool left_limit) {
  require_regularizable(model, eps);
  const BasisSpec& basis = *coeffs.basis;
  RhsBreakdown r;
  r.stokes = stokes_term(coeffs);
  r.forcing = forcing_term(coeffs.t, spec, basis, left_limit);
  if (all_zero(coeffs.d)) {
    r.viscous_nl.assign(basis.size(), 0.0);
    r.convection.assign(basis.size(), 0.0);
  } else {
    const GridField u = synthesize(coeffs, FieldKind::velocity);
    const GridField grad = synthesize(coeffs, FieldKind::gradient);
    r.viscous_nl = analyze(basis, viscous_stress(grad, model, eps), Pairing::sym_gradient);
    r.convection = analyze(basis, advection(u, grad), Pairing::velocity);
    negate(r.viscous_nl);
    negate(r.convection);
  }
  r.total.resize(r.stokes.size());
  for (std::size_t i = 0; i < r.total.size(); ++i)
    r.total[i] = r.stokes[i] + r.viscous_nl[i] + r.convection[i] + r.forcing[i];
  return r;
}

double j_eps(const CoefficientVector& coeffs, const ViscosityModel& model, double eps) {
  require_regularizable(model, eps);
  if (all_zero(coeffs.d)) return 0.0;
  const GridField D = synthesize(coeffs, FieldKind::sym_gradient);
  std::vector<double> g(D.points());
  for (std::size_t x = 0; x < g.size(); ++x) {
    double d2 = 0.0;
    for (const auto& c : D.comps) d2 += c[x] * c[x];
    g[x] = eval_G(model, std::sqrt(d2), eps);
  }
  return integrate(*coeffs.basis, g);
}

std::vector<double> jprime(const CoefficientVector& coeffs, const ViscosityModel& model, double eps) {
  auto g = viscous_nonlinear_term(coeffs, model, eps);
  negate(g);
  return g;
}

double jprime_pairing(const CoefficientVector& coeffs, const ViscosityModel& model, double eps) {
  const auto g = jprime(coeffs, model, eps);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * coeffs.d[i];
  return s;
}

double dual_norm_sq(const BasisSpec& basis, const std::vector<double>& g) {
  if (g.size() != basis.size()) throw ShapeError("dual_norm_sq: vector does not match the basis");
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * g[i] / basis.modes[i].lambda;
  return s;
}

}  // namespace visco
