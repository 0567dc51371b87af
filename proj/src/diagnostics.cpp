#include "visco/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "visco/errors.hpp"

namespace visco {

namespace {

constexpr double converged_floor = 1e-12;

void require_states(const TrajectoryRecord& traj, const char* who) {
  if (traj.states.size() != traj.size())
    throw DiagnosticError(std::string(who) + ": trajectory was recorded without states");
}

// |D(u)| at every collocation point.
std::vector<double> strain_magnitude(const CoefficientVector& u) {
  const GridField D = synthesize(u, FieldKind::sym_gradient);
  std::vector<double> m(D.points(), 0.0);
  for (const auto& c : D.comps)
    for (std::size_t x = 0; x < m.size(); ++x) m[x] += c[x] * c[x];
  for (double& v : m) v = std::sqrt(v);
  return m;
}

// (1/eta) <j'(eta u), eta u> = int eta |D|^2 F(eta |D|).
double scaled_pairing(const BasisSpec& basis, const std::vector<double>& Dmag, const ViscosityModel& model, double eta) {
  std::vector<double> g(Dmag.size(), 0.0);
  for (std::size_t x = 0; x < g.size(); ++x) {
    const double s = Dmag[x];
    if (s > 0.0) g[x] = eta * s * s * eval_F(model, eta * s);
  }
  return integrate(basis, g);
}

bool decreasing(const std::vector<double>& v, double floor) {
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    if (v[k] <= floor && v[k + 1] <= floor) continue;
    if (!(v[k + 1] < v[k])) return false;
  }
  return true;
}

}  // namespace

EnergyReport energy_inequality_check(const TrajectoryRecord& traj, double u0_norm) {
  EnergyReport rep;
  if (traj.empty()) return rep;
  const double u0sq = u0_norm * u0_norm;
  const auto& s = traj.scalars;
  rep.worst_inequality_margin = std::numeric_limits<double>::infinity();
  rep.worst_sharp_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double l2sq = s[k].l2 * s[k].l2;
    const double margin = 2.0 * s[k].int_forcing_dual + u0sq - (l2sq + 0.5 * s[k].int_h1_sq);
    const double sharp = u0sq + 2.0 * s[k].int_forcing_power - l2sq - s[k].int_h1_sq;
    rep.margins.push_back(margin);
    rep.worst_inequality_margin = std::min(rep.worst_inequality_margin, margin);
    rep.worst_sharp_margin = std::min(rep.worst_sharp_margin, sharp);
    if (k > 0) {
      const double r = 0.5 * (l2sq - s[k - 1].l2 * s[k - 1].l2) + (s[k].int_work - s[k - 1].int_work);
      rep.balance_residuals.push_back(r);
      rep.balance_residual_max = std::max(rep.balance_residual_max, std::abs(r));
    }
  }
  return rep;
}

double jprime_pairing_unregularized(const CoefficientVector& v, const CoefficientVector& u, const ViscosityModel& model) {
  if (v.basis != u.basis) throw ShapeError("jprime_pairing_unregularized: states live in different bases");
  const GridField Dv = synthesize(v, FieldKind::sym_gradient);
  const GridField Du = synthesize(u, FieldKind::sym_gradient);
  std::vector<double> g(Dv.points(), 0.0);
  for (std::size_t x = 0; x < g.size(); ++x) {
    double s2 = 0.0, dd = 0.0;
    for (std::size_t c = 0; c < Dv.comps.size(); ++c) {
      s2 += Dv.comps[c][x] * Dv.comps[c][x];
      dd += Dv.comps[c][x] * Du.comps[c][x];
    }
    if (s2 > 0.0) g[x] = eval_F(model, std::sqrt(s2)) * dd;
  }
  return integrate(*v.basis, g);
}

std::vector<EtaPoint> energy_equality_eta(const TrajectoryRecord& traj, const ViscosityModel& model, double theta) {
  require_states(traj, "energy_equality_eta");
  if (!(theta > 0.0 && theta <= 1.0)) throw DiagnosticError("energy_equality_eta: theta must lie in (0, 1]");
  std::vector<EtaPoint> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    EtaPoint p;
    p.t = traj.times[k];
    const auto& u = traj.states[k];
    if (std::all_of(u.d.begin(), u.d.end(), [](double v) { return v == 0.0; })) {
      out.push_back(p);
      continue;
    }
    const double tau = traj.scalars[k].jprime_pairing;
    const auto Dmag = strain_magnitude(u);
    auto g = [&](double eta) { return scaled_pairing(*u.basis, Dmag, model, eta) - tau; };
    p.residual_lo = g(theta);
    p.residual_hi = theta == 1.0 ? p.residual_lo : g(1.0);
    p.bracketed = p.residual_lo * p.residual_hi <= 0.0;
    if (!p.bracketed) {
      const bool hi = std::abs(p.residual_hi) <= std::abs(p.residual_lo);
      p.eta = hi ? 1.0 : theta;
      p.residual = hi ? p.residual_hi : p.residual_lo;
    } else if (p.residual_hi == 0.0 || theta == 1.0) {
      p.eta = 1.0;
      p.residual = p.residual_hi;
    } else {
      double lo = theta, hi = 1.0, glo = p.residual_lo;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm <= 0.0) == (glo <= 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      p.eta = 0.5 * (lo + hi);
      p.residual = g(p.eta);
    }
    out.push_back(p);
  }
  return out;
}

JprimeBound jprime_bound_check(const TrajectoryRecord& traj, const ViscosityModel& model, double eps) {
  require_states(traj, "jprime_bound_check");
  JprimeBound b;
  if (traj.empty()) return b;
  const double p = 4.0 / traj.states.front().basis->N;
  for (const auto& u : traj.states) b.dual_norms.push_back(std::sqrt(dual_norm_sq(*u.basis, jprime(u, model, eps))));
  double integral = 0.0;
  for (std::size_t k = 1; k < traj.size(); ++k)
    integral += 0.5 * (traj.times[k] - traj.times[k - 1]) *
                (std::pow(b.dual_norms[k], p) + std::pow(b.dual_norms[k - 1], p));
  b.lhs = std::pow(integral, 1.0 / p);
  return b;
}

bool uniformly_bounded(const std::vector<double>& values, double tol) {
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double a = values[k - 1], b = values[k];
    if (a == 0.0 && b == 0.0) continue;
    if (!(a > 0.0 && b > 0.0) || std::max(a, b) / std::min(a, b) > 1.0 + tol) return false;
  }
  return true;
}

double gn_ratio(const CoefficientVector& coeffs) {
  const Norms n = norms(coeffs);
  if (!(n.l2 > 0.0)) throw DiagnosticError("gn_ratio: zero state");
  const double N = coeffs.basis->N;
  return n.l4 * n.l4 / (std::pow(n.h1, N / 2.0) * std::pow(n.l2, (4.0 - N) / 2.0));
}

double j_gap(const ViscosityModel& model, const CoefficientVector& coeffs, double eps) {
  if (eps == 0.0) return 0.0;
  const auto Dmag = strain_magnitude(coeffs);
  std::vector<double> g(Dmag.size());
  try {
    for (std::size_t x = 0; x < g.size(); ++x) g[x] = eval_G(model, Dmag[x], 0.0);
  } catch (const Error& e) {
    throw DiagnosticError(std::string("j_gap: j(u) is not computable: ") + e.what());
  }
  const double j = integrate(*coeffs.basis, g);
  if (!std::isfinite(j)) throw DiagnosticError("j_gap: j(u) is not finite for " + model.describe());
  return j - j_eps(coeffs, model, eps);
}

double power_sum_margin(double a, double b, double s, double gamma) {
  if (!(gamma >= 0.5)) throw DiagnosticError("power_sum_margin: gamma must be >= 1/2");
  if (!(a >= 0.0 && b >= 0.0 && s >= 0.0)) throw DiagnosticError("power_sum_margin: norms must be >= 0");
  return std::pow(2.0, gamma - 0.5) * (std::pow(a, gamma) + std::pow(b, gamma)) - std::pow(s, gamma);
}

ContinuityReport continuity_check(const TrajectoryRecord& traj) {
  ContinuityReport r;
  double drain = 0.0, power = 0.0;
  for (const auto& s : traj.scalars) {
    drain = std::max(drain, s.dissipation + s.jprime_pairing);
    power = std::max(power, std::abs(s.forcing_power));
  }
  r.lipschitz = 2.0 * (drain + power);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const double a = traj.scalars[k - 1].l2, b = traj.scalars[k].l2;
    const double jump = std::abs(b * b - a * a);
    if (jump == 0.0) continue;
    const double allowed = r.lipschitz * (traj.times[k] - traj.times[k - 1]);
    r.worst_ratio = std::max(r.worst_ratio, allowed > 0.0 ? jump / allowed : std::numeric_limits<double>::infinity());
  }
  return r;
}

DecayFit alpha_decay_fit(const TrajectoryRecord& traj, double alpha, double t_lo, double t_hi) {
  if (!(alpha > 0.0)) throw DiagnosticError("alpha_decay_fit: alpha must be > 0");
  std::vector<double> t, y;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double l2 = traj.scalars[k].l2;
    if (traj.times[k] < t_lo || traj.times[k] > t_hi || !(l2 > 0.0)) continue;
    t.push_back(traj.times[k]);
    y.push_back(std::pow(l2, alpha));
  }
  if (t.size() < 10)
    throw DiagnosticError("alpha_decay_fit: window [" + std::to_string(t_lo) + ", " + std::to_string(t_hi) +
                          "] holds " + std::to_string(t.size()) + " records, need at least 10");
  const double n = static_cast<double>(t.size());
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(stt > 0.0)) throw DiagnosticError("alpha_decay_fit: all window records share one time");
  DecayFit f;
  f.n = t.size();
  f.slope = sty / stt;
  f.intercept = my - f.slope * mt;
  double ssr = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * t[i]);
    ssr += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - ssr / syy : (ssr == 0.0 ? 1.0 : 0.0);
  return f;
}

double l2_at(const TrajectoryRecord& traj, double t) {
  if (traj.empty()) throw DiagnosticError("l2_at: empty trajectory");
  const auto& T = traj.times;
  if (t <= T.front()) return traj.scalars.front().l2;
  if (t >= T.back()) return traj.scalars.back().l2;
  const auto k = static_cast<std::size_t>(std::upper_bound(T.begin(), T.end(), t) - T.begin());
  const double w = (t - T[k - 1]) / (T[k] - T[k - 1]);
  return (1.0 - w) * traj.scalars[k - 1].l2 + w * traj.scalars[k].l2;
}

std::pair<double, double> late_window(const TrajectoryRecord& traj, double T1, double alpha, double lo, double hi) {
  const double A = std::pow(l2_at(traj, T1), alpha);
  std::optional<double> t_lo, t_hi;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] < T1) continue;
    const double y = std::pow(traj.scalars[k].l2, alpha);
    if (y <= hi * A && y >= lo * A) {
      if (!t_lo) t_lo = traj.times[k];
      t_hi = traj.times[k];
    }
  }
  if (!t_lo) throw DiagnosticError("late_window: no records decay into the window");
  return {*t_lo, *t_hi};
}

StoppingReport stopping_bound(const TrajectoryRecord& traj, double T1, double alpha, const DecayFit& fit,
                              std::optional<StoppingEvent> stop) {
  if (!(fit.slope < 0.0)) throw DiagnosticError("stopping_bound: fitted slope must be < 0, got " + std::to_string(fit.slope));
  StoppingReport r;
  r.alpha = alpha;
  r.fit_slope = fit.slope;
  r.fit_intercept = fit.intercept;
  r.fit_r2 = fit.r2;
  r.T1 = T1;
  r.T0_bound = T1 + std::pow(l2_at(traj, T1), alpha) / std::abs(fit.slope);
  if (stop) {
    r.T0_measured = stop->T0;
    r.bound_ok = stop->T0 <= r.T0_bound * 1.05;
  }
  return r;
}

double extrapolate_T0(const std::vector<std::pair<double, double>>& table) {
  if (table.size() < 2) throw DiagnosticError("extrapolate_T0: need at least 2 (eps, T0) pairs");
  const double n = static_cast<double>(table.size());
  double me = 0.0, mt = 0.0;
  for (const auto& [e, t] : table) {
    me += e;
    mt += t;
  }
  me /= n;
  mt /= n;
  double see = 0.0, set = 0.0;
  for (const auto& [e, t] : table) {
    see += (e - me) * (e - me);
    set += (e - me) * (t - mt);
  }
  if (!(see > 0.0)) throw DiagnosticError("extrapolate_T0: eps values must differ");
  return mt - (set / see) * me;
}

bool monotone_in_eps(std::vector<std::pair<double, double>> table) {
  std::sort(table.begin(), table.end());
  bool up = true, down = true;
  for (std::size_t k = 1; k < table.size(); ++k) {
    up = up && table[k].second > table[k - 1].second;
    down = down && table[k].second < table[k - 1].second;
  }
  return up || down;
}

double l2l2_difference(const std::vector<CoefficientVector>& a, const std::vector<CoefficientVector>& b,
                       const std::vector<double>& times) {
  if (a.size() != times.size() || b.size() != times.size())
    throw ShapeError("l2l2_difference: sample counts differ");
  std::vector<double> sq(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto bk = b[k].basis == a[k].basis ? b[k] : restrict_to(b[k], a[k].basis);
    double s = 0.0;
    for (std::size_t i = 0; i < a[k].d.size(); ++i) s += (a[k].d[i] - bk.d[i]) * (a[k].d[i] - bk.d[i]);
    sq[k] = s;
  }
  double integral = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) integral += 0.5 * (times[k] - times[k - 1]) * (sq[k] + sq[k - 1]);
  return std::sqrt(integral);
}

ConvergenceTable convergence_study(const RunSetup& setup, const std::vector<double>& eps_list,
                                   const std::vector<int>& m_list, int n_samples, unsigned threads) {
  if (eps_list.size() < 3 || m_list.size() < 3)
    throw ConfigurationError("convergence_study: eps and m lists need at least 3 entries");
  for (std::size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1])) throw ConfigurationError("convergence_study: eps list must decrease");
  for (std::size_t k = 1; k < m_list.size(); ++k)
    if (!(m_list[k] > m_list[k - 1])) throw ConfigurationError("convergence_study: m list must increase");
  if (n_samples < 2) throw ConfigurationError("convergence_study: need at least 2 samples");
  if (!setup.u0) throw ConfigurationError("convergence_study: missing initial data");

  ConvergenceTable tab;
  tab.eps_list = eps_list;
  tab.m_list = m_list;
  const double t0 = 0.0, t_end = setup.integrator.t_end;
  for (int k = 0; k <= n_samples; ++k) tab.sample_times.push_back(t0 + (t_end - t0) * k / n_samples);

  std::vector<BasisPtr> bases;
  for (int m : m_list) bases.push_back(build_basis(setup.N, m, setup.grid_size));

  const std::size_t ne = eps_list.size(), nm = m_list.size();
  // samples[i * nm + j]: run (eps_i, m_j) at tab.sample_times.
  std::vector<std::vector<CoefficientVector>> samples(ne * nm);
  parallel_for(ne * nm, threads, [&](std::size_t r) {
    const std::size_t i = r / nm, j = r % nm;
    IntegratorConfig cfg = setup.integrator;
    cfg.keep_states = false;
    cfg.sample_times.assign(tab.sample_times.begin() + 1, tab.sample_times.end() - 1);
    CoefficientVector u0 = setup.u0(bases[j]);
    u0.t = t0;
    std::vector<CoefficientVector> got(tab.sample_times.size(), CoefficientVector::zeros(bases[j]));
    auto observe = [&](const RecordScalars& s, const CoefficientVector& state) {
      const auto it = std::lower_bound(tab.sample_times.begin(), tab.sample_times.end(), s.t);
      if (it != tab.sample_times.end() && *it == s.t) got[static_cast<std::size_t>(it - tab.sample_times.begin())] = state;
    };
    run(u0, cfg, setup.model, eps_list[i], setup.forcing, observe);
    // After extinction the state stays at rest.
    samples[r] = std::move(got);
  });

  tab.eps_diff.assign(nm, std::vector<double>(ne - 1));
  tab.m_diff.assign(ne, std::vector<double>(nm - 1));
  for (std::size_t j = 0; j < nm; ++j)
    for (std::size_t i = 0; i + 1 < ne; ++i)
      tab.eps_diff[j][i] = l2l2_difference(samples[i * nm + j], samples[(i + 1) * nm + j], tab.sample_times);
  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t j = 0; j + 1 < nm; ++j)
      tab.m_diff[i][j] = l2l2_difference(samples[i * nm + j], samples[i * nm + j + 1], tab.sample_times);

  auto axis = [](const std::vector<std::vector<double>>& rows) {
    return std::all_of(rows.begin(), rows.end(), [](const auto& v) { return decreasing(v, converged_floor); });
  };
  tab.eps_monotone = axis(tab.eps_diff);
  tab.m_monotone = axis(tab.m_diff);
  return tab;
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("VISCO_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& f) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(m);
        if (!first) first = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace visco
