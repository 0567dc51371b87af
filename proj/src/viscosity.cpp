#include "visco/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

// Boost 1.74's pchip calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "visco/errors.hpp"

namespace visco {

namespace {

bool finite(double x) { return std::isfinite(x); }

// (eps + t^2)^(1 - a/2) - eps^(1 - a/2), divided by (2 - a), without cancellation for t^2 << eps.
double power_law_potential(double a, double eps, double t) {
  const double t2 = t * t;
  if (eps <= 0.0) {
    if (a == 2.0) throw DomainError("G_0 diverges for exponent 2");
    return std::pow(t2, 1.0 - 0.5 * a) / (2.0 - a);
  }
  const double x = t2 / eps;
  if (a == 2.0) return 0.5 * std::log1p(x);
  const double p = 1.0 - 0.5 * a;
  return std::pow(eps, p) * std::expm1(p * std::log1p(x)) / (2.0 * p);
}

double log_power_F(const ViscosityModel& m, double t) {
  if (t <= m.gamma) return std::pow(t, -m.alpha) * std::pow(std::log1p(t), -m.beta);
  return std::pow(std::log1p(m.gamma), -m.beta) * std::pow(t, -m.alpha);
}

}  // namespace

std::string to_string(ViscosityKind kind) {
  switch (kind) {
    case ViscosityKind::power_law: return "power_law";
    case ViscosityKind::carreau: return "carreau";
    case ViscosityKind::cross: return "cross";
    case ViscosityKind::log_power: return "log_power";
    case ViscosityKind::constant: return "constant";
    case ViscosityKind::tabulated: return "tabulated";
  }
  return "unknown";
}

ViscosityKind kind_from_string(const std::string& name) {
  if (name == "power_law") return ViscosityKind::power_law;
  if (name == "carreau") return ViscosityKind::carreau;
  if (name == "cross") return ViscosityKind::cross;
  if (name == "log_power") return ViscosityKind::log_power;
  if (name == "constant") return ViscosityKind::constant;
  if (name == "tabulated") return ViscosityKind::tabulated;
  throw ParameterError("unknown viscosity kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// TabulatedLaw

struct TabulatedLaw::Spline : boost::math::interpolators::pchip<std::vector<double>> {
  using pchip::pchip;
};

TabulatedLaw::TabulatedLaw(std::vector<double> t, std::vector<double> F) : t_(std::move(t)) {
  if (t_.size() != F.size()) throw ParameterError("tabulated law: t and F differ in length");
  if (t_.size() < 2) throw ParameterError("tabulated law needs at least two samples");
  std::vector<double> s, y;
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!(t_[i] > 0.0) || !finite(t_[i])) throw ParameterError("tabulated law: t must be positive");
    if (!(F[i] > 0.0) || !finite(F[i])) throw ParameterError("tabulated law: F must be positive");
    if (i > 0 && !(t_[i] > t_[i - 1])) throw ParameterError("tabulated law: t must be strictly increasing");
    s.push_back(std::log(t_[i]));
    y.push_back(std::log(t_[i] * F[i]));
  }
  s_lo_ = s.front();
  s_hi_ = s.back();
  y_lo_ = y.front();
  y_hi_ = y.back();
  const std::size_t n = s.size();
  slope_lo_ = (y[1] - y[0]) / (s[1] - s[0]);
  slope_hi_ = (y[n - 1] - y[n - 2]) / (s[n - 1] - s[n - 2]);
  if (n >= 4) {
    spline_ = std::make_shared<const Spline>(std::move(s), std::move(y));
  } else {
    linear_s_ = std::move(s);
    linear_y_ = std::move(y);
  }
}

double TabulatedLaw::operator()(double t) const {
  const double s = std::log(t);
  double y;
  if (s <= s_lo_) {
    y = y_lo_ + slope_lo_ * (s - s_lo_);
  } else if (s >= s_hi_) {
    y = y_hi_ + slope_hi_ * (s - s_hi_);
  } else if (spline_) {
    y = (*spline_)(s);
  } else {
    const auto it = std::upper_bound(linear_s_.begin(), linear_s_.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - linear_s_.begin());
    const double w = (s - linear_s_[k - 1]) / (linear_s_[k] - linear_s_[k - 1]);
    y = (1 - w) * linear_y_[k - 1] + w * linear_y_[k];
  }
  return std::exp(y) / t;
}

std::shared_ptr<const TabulatedLaw> load_tabulated_law(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open tabulated law '" + path + "'");
  std::vector<double> t, F;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a >> b)) {
      if (t.empty() && lineno == 1) continue;  // header
      throw ParseError("expected two numeric columns in '" + path + "'", lineno);
    }
    t.push_back(a);
    F.push_back(b);
  }
  return std::make_shared<const TabulatedLaw>(std::move(t), std::move(F));
}

// ---------------------------------------------------------------------------
// ViscosityModel

ViscosityModel ViscosityModel::power_law(double alpha) {
  ViscosityModel m;
  m.kind = ViscosityKind::power_law;
  m.alpha = alpha;
  return m;
}

ViscosityModel ViscosityModel::carreau(double mu, double alpha) {
  ViscosityModel m;
  m.kind = ViscosityKind::carreau;
  m.mu = mu;
  m.alpha = alpha;
  return m;
}

ViscosityModel ViscosityModel::cross(double gamma, double alpha) {
  ViscosityModel m;
  m.kind = ViscosityKind::cross;
  m.gamma = gamma;
  m.alpha = alpha;
  return m;
}

ViscosityModel ViscosityModel::log_power(double alpha, double beta, double gamma) {
  ViscosityModel m;
  m.kind = ViscosityKind::log_power;
  m.alpha = alpha;
  m.beta = beta;
  m.gamma = gamma;
  return m;
}

ViscosityModel ViscosityModel::constant(double value) {
  ViscosityModel m;
  m.kind = ViscosityKind::constant;
  m.value = value;
  m.alpha = 0.0;
  return m;
}

ViscosityModel ViscosityModel::tabulated(std::shared_ptr<const TabulatedLaw> table, double alpha) {
  ViscosityModel m;
  m.kind = ViscosityKind::tabulated;
  m.table = std::move(table);
  m.alpha = alpha;
  return m;
}

bool ViscosityModel::bounded_at_zero() const {
  switch (kind) {
    case ViscosityKind::carreau: return mu > 0.0 || alpha == 0.0;
    case ViscosityKind::constant: return true;
    case ViscosityKind::cross:
    case ViscosityKind::power_law: return alpha == 0.0;
    case ViscosityKind::log_power:
    case ViscosityKind::tabulated: return false;
  }
  return false;
}

GrowthBound ViscosityModel::growth_bound() const {
  GrowthBound g{alpha, 1.0, 1.0};
  switch (kind) {
    case ViscosityKind::power_law:
    case ViscosityKind::carreau: break;
    case ViscosityKind::cross:
      g.exponent = 0.0;
      g.K = gamma + 1.0;
      break;
    case ViscosityKind::constant:
      g.exponent = 0.0;
      g.K = value;
      break;
    case ViscosityKind::log_power:
      g.t0 = gamma;
      g.K = std::pow(std::log1p(gamma), -beta);
      break;
    case ViscosityKind::tabulated: break;
  }
  if (K) g.K = *K;
  if (t0) g.t0 = *t0;
  return g;
}

void ViscosityModel::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ParameterError(what);
  };
  require(finite(alpha) && alpha >= 0.0, "alpha must be finite and >= 0");
  require(finite(kappa) && kappa > 0.0, "kappa must be > 0");
  if (K) require(finite(*K) && *K > 0.0, "K must be > 0");
  if (t0) require(finite(*t0) && *t0 > 0.0, "t0 must be > 0");
  switch (kind) {
    case ViscosityKind::power_law: break;
    case ViscosityKind::carreau: require(finite(mu) && mu >= 0.0, "carreau: mu must be >= 0"); break;
    case ViscosityKind::cross: require(finite(gamma) && gamma > 0.0, "cross: gamma must be > 0"); break;
    case ViscosityKind::log_power:
      require(finite(gamma) && gamma > 0.0, "log_power: gamma must be > 0");
      require(finite(beta) && beta > 0.0, "log_power: beta must be > 0");
      break;
    case ViscosityKind::constant: require(finite(value) && value >= 0.0, "constant: value must be >= 0"); break;
    case ViscosityKind::tabulated: require(table != nullptr, "tabulated: missing table"); break;
  }
}

std::string ViscosityModel::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case ViscosityKind::power_law: os << "(alpha=" << alpha << ")"; break;
    case ViscosityKind::carreau: os << "(mu=" << mu << ", alpha=" << alpha << ")"; break;
    case ViscosityKind::cross: os << "(gamma=" << gamma << ", alpha=" << alpha << ")"; break;
    case ViscosityKind::log_power:
      os << "(alpha=" << alpha << ", beta=" << beta << ", gamma=" << gamma << ")";
      break;
    case ViscosityKind::constant: os << "(value=" << value << ")"; break;
    case ViscosityKind::tabulated: os << "(" << (table ? table->size() : 0) << " samples)"; break;
  }
  return os.str();
}

std::vector<std::pair<std::string, ViscosityModel>> model_catalog() {
  return {
      {"power_law", ViscosityModel::power_law(0.5)},
      {"bingham", ViscosityModel::power_law(1.0)},
      {"carreau", ViscosityModel::carreau(1.0, 1.0)},
      {"cross", ViscosityModel::cross(1.0, 1.0)},
      {"log_power", ViscosityModel::log_power(0.5, 0.25, 0.5)},
      {"constant", ViscosityModel::constant(1.0)},
  };
}

ViscosityModel make_model(const std::string& name, const std::map<std::string, double>& params) {
  ViscosityModel m;
  bool found = false;
  for (auto& [n, model] : model_catalog()) {
    if (n == name) {
      m = model;
      found = true;
    }
  }
  if (!found) m.kind = kind_from_string(name);  // throws on unknown names
  for (const auto& [key, v] : params) {
    if (key == "alpha") m.alpha = v;
    else if (key == "mu") m.mu = v;
    else if (key == "gamma") m.gamma = v;
    else if (key == "beta") m.beta = v;
    else if (key == "kappa") m.kappa = v;
    else if (key == "value") m.value = v;
    else if (key == "K") m.K = v;
    else if (key == "t0") m.t0 = v;
    else throw ParameterError("unknown model parameter '" + key + "'");
  }
  return m;
}

// ---------------------------------------------------------------------------
// Evaluation

double eval_F(const ViscosityModel& m, double t) {
  if (!(t >= 0.0)) throw DomainError("F(t) requires t >= 0");
  if (t == 0.0 && !m.bounded_at_zero()) throw DomainError(to_string(m.kind) + " is singular at t = 0");
  switch (m.kind) {
    case ViscosityKind::power_law: return std::pow(t, -m.alpha);
    case ViscosityKind::carreau: return std::pow(m.mu + t * t, -0.5 * m.alpha);
    case ViscosityKind::cross: return m.gamma + std::pow(t, -m.alpha);
    case ViscosityKind::log_power: return log_power_F(m, t);
    case ViscosityKind::constant: return m.value;
    case ViscosityKind::tabulated:
      if (!m.table) throw ParameterError("tabulated: missing table");
      return (*m.table)(t);
  }
  return 0.0;
}

double eval_F_of_square(const ViscosityModel& m, double s2) {
  switch (m.kind) {
    case ViscosityKind::power_law:
      if (m.alpha == 1.0) return 1.0 / std::sqrt(s2);
      return std::pow(s2, -0.5 * m.alpha);
    case ViscosityKind::carreau:
      if (m.alpha == 1.0) return 1.0 / std::sqrt(m.mu + s2);
      return std::pow(m.mu + s2, -0.5 * m.alpha);
    case ViscosityKind::cross: return m.gamma + std::pow(s2, -0.5 * m.alpha);
    case ViscosityKind::log_power: return log_power_F(m, std::sqrt(s2));
    case ViscosityKind::constant: return m.value;
    case ViscosityKind::tabulated: return (*m.table)(std::sqrt(s2));
  }
  return 0.0;
}

double eval_Gprime(const ViscosityModel& m, double t, double eps) {
  if (!(t >= 0.0) || !(eps >= 0.0)) throw DomainError("G' requires t >= 0 and eps >= 0");
  if (t == 0.0) {
    if (eps == 0.0 && !m.bounded_at_zero())
      throw DomainError("G_0'(0) is undefined for " + to_string(m.kind));
    return 0.0;
  }
  return t * eval_F(m, std::sqrt(eps + t * t));
}

double integrate_Gprime(const ViscosityModel& m, double t, double eps, QuadratureTolerance tol) {
  if (!(t >= 0.0) || !(eps >= 0.0)) throw DomainError("G requires t >= 0 and eps >= 0");
  if (t == 0.0) return 0.0;
  auto integrand = [&](double s) { return s * eval_F(m, std::sqrt(eps + s * s)); };
  // Geometric panels toward 0 resolve the sqrt(eps) layer and, for eps = 0,
  // the endpoint singularity of s F(s).
  std::vector<double> breaks{0.0};
  const double floor_t = std::max(t * 1e-12, 1e-3 * std::sqrt(eps));
  for (double b = t; b > floor_t; b *= 0.5) breaks.push_back(b);
  // Split at the log_power cutoff so each panel is smooth.
  if (m.kind == ViscosityKind::log_power && eps < m.gamma * m.gamma) {
    const double kink = std::sqrt(m.gamma * m.gamma - eps);
    if (kink > 0.0 && kink < t) breaks.push_back(kink);
  }
  breaks.push_back(t);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    // Integrate on the reference interval [-1, 1]: Boost 1.74 compares
    // unscaled leaf errors against scaled tolerances otherwise.
    const double mid = 0.5 * (breaks[i] + breaks[i + 1]);
    const double half = 0.5 * (breaks[i + 1] - breaks[i]);
    auto mapped = [&](double x) { return half * integrand(mid + half * x); };
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(mapped, -1.0, 1.0, 12, tol.rel * 1e-2, &err);
    total_err += err;
  }
  if (!finite(total) || total_err > std::max(tol.abs, tol.rel * std::abs(total))) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", total_err);
    throw QuadratureError(std::string("G quadrature missed tolerance (estimated error ") + buf + ")");
  }
  return total;
}

double eval_G(const ViscosityModel& m, double t, double eps, QuadratureTolerance tol) {
  if (!(t >= 0.0) || !(eps >= 0.0)) throw DomainError("G requires t >= 0 and eps >= 0");
  if (t == 0.0) return 0.0;
  switch (m.kind) {
    case ViscosityKind::power_law: return power_law_potential(m.alpha, eps, t);
    case ViscosityKind::carreau: return power_law_potential(m.alpha, m.mu + eps, t);
    case ViscosityKind::cross: return 0.5 * m.gamma * t * t + power_law_potential(m.alpha, eps, t);
    case ViscosityKind::constant: return 0.5 * m.value * t * t;
    case ViscosityKind::log_power:
    case ViscosityKind::tabulated: return integrate_Gprime(m, t, eps, tol);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Hypothesis checks

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw ParameterError("log_grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

namespace {

double safe_F(const ViscosityModel& m, double t) {
  try {
    return eval_F(m, t);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

ConditionReport check_conditions(const ViscosityModel& m, std::span<const double> grid, double beta) {
  if (grid.empty()) throw ParameterError("check_conditions: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ParameterError("check_conditions: grid must be strictly increasing");
  if (!(grid.front() > 0.0) || grid.front() > 1e-6 || grid.back() < 1e3)
    throw ParameterError("check_conditions: grid must be positive and span [1e-6, 1e3]");
  if (!(beta > 0.0 && beta < 0.5)) throw ParameterError("check_conditions: beta must lie in (0, 1/2)");

  ConditionReport r;
  std::vector<double> F(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) F[i] = safe_F(m, grid[i]);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(F[i] > 0.0) || !finite(F[i])) {
      r.c1 = false;
      r.witnesses.push_back({"C1", grid[i], finite(F[i]) ? -F[i] : std::numeric_limits<double>::infinity()});
    }
  }

  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double a = grid[i - 1] * F[i - 1];
    const double b = grid[i] * F[i];
    if (!finite(a) || !finite(b)) continue;  // already reported under C1
    const double drop = a - b;
    if (drop > 1e-12 * std::max(std::abs(a), std::abs(b))) {
      r.c3 = false;
      r.witnesses.push_back({"C3", grid[i], drop});
    }
  }

  const GrowthBound g = m.growth_bound();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < g.t0 || !finite(F[i])) continue;
    const double bound = g.K * std::pow(grid[i], -g.exponent);
    if (F[i] > bound * (1.0 + 1e-12)) {
      r.c4 = false;
      r.witnesses.push_back({"C4", grid[i], F[i] - bound});
    }
  }

  // Local Lipschitz surrogate: on each dyadic interval, difference quotients
  // must not grow when the sampling is refined with midpoints.
  const int k_lo = static_cast<int>(std::floor(std::log2(grid.front())));
  const int k_hi = static_cast<int>(std::ceil(std::log2(grid.back())));
  for (int k = k_lo; k < k_hi; ++k) {
    const double a = std::ldexp(1.0, k);
    const double b = std::ldexp(1.0, k + 1);
    std::vector<double> pts;
    for (double t : grid)
      if (t >= a && t <= b) pts.push_back(t);
    if (pts.size() < 2) continue;
    double coarse = 0.0;
    double fine = 0.0;
    bool ok = true;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double t0 = pts[i - 1];
      const double t1 = pts[i];
      const double tm = 0.5 * (t0 + t1);
      const double f0 = safe_F(m, t0);
      const double f1 = safe_F(m, t1);
      const double fm = safe_F(m, tm);
      if (!finite(f0) || !finite(f1) || !finite(fm)) {
        ok = false;
        break;
      }
      coarse = std::max(coarse, std::abs(f1 - f0) / (t1 - t0));
      fine = std::max({fine, std::abs(fm - f0) / (tm - t0), std::abs(f1 - fm) / (t1 - tm)});
    }
    const double scale = std::max(1.0, std::abs(safe_F(m, a)));
    if (!ok || !finite(fine) || fine > 1.5 * coarse + 1e-9 * scale) {
      r.c2 = false;
      r.witnesses.push_back({"C2", a, ok ? fine - coarse : std::numeric_limits<double>::infinity()});
    }
  }

  // Near-zero bound on the lowest three decades of the grid.
  const double delta0 = grid.front() * 1e3;
  for (std::size_t i = 0; i < grid.size() && grid[i] <= delta0; ++i) {
    const double bound = std::pow(grid[i], -(1.0 + beta));
    if (!finite(F[i]) || F[i] > bound) {
      r.near_zero = false;
      r.witnesses.push_back({"near_zero", grid[i], finite(F[i]) ? F[i] - bound : std::numeric_limits<double>::infinity()});
    }
  }
  return r;
}

std::vector<Witness> check_lower_bound(const ViscosityModel& m, std::span<const double> grid) {
  std::vector<Witness> out;
  for (double t : grid) {
    const double F = safe_F(m, t);
    const double bound = m.kappa * std::pow(t, -m.alpha);
    if (!finite(F) || F < bound * (1.0 - 1e-12)) out.push_back({"lower_bound", t, bound - F});
  }
  return out;
}

double theta_for_power_law(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("theta requires alpha in (0, 1]");
  if (alpha == 1.0) return 1.0;
  return std::pow(2.0 - alpha, -1.0 / (1.0 - alpha));
}

}  // namespace visco
