#include "visco/time_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "visco/errors.hpp"

namespace visco {

void IntegratorConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigurationError(what);
  };
  require(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max && std::isfinite(dt_max),
          "need 0 < dt_min <= dt_init <= dt_max");
  require(rel_tol > 0.0 && std::isfinite(rel_tol), "rel_tol must be > 0");
  require(abs_tol >= 0.0 && std::isfinite(abs_tol), "abs_tol must be >= 0");
  require(stop_tol > 0.0 && std::isfinite(stop_tol), "stop_tol must be > 0");
  require(std::isfinite(t_end), "t_end must be finite");
  require(record_every >= 1, "record_every must be >= 1");
  for (double s : sample_times) require(std::isfinite(s), "sample times must be finite");
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

struct StageIntegrals {
  double h1_sq = 0.0;
  double forcing_dual = 0.0;
  double forcing_power = 0.0;
  double work = 0.0;

  StageIntegrals& operator+=(const StageIntegrals& o) {
    h1_sq += o.h1_sq;
    forcing_dual += o.forcing_dual;
    forcing_power += o.forcing_power;
    work += o.work;
    return *this;
  }
};

struct Stage {
  std::vector<double> n;  // viscous + convection + forcing
  StageIntegrals g;       // integrands at the stage state
};

Stage evaluate(const CoefficientVector& y, const ViscosityModel& model, double eps, const ForcingSpec& spec,
               bool left_limit) {
  const RhsBreakdown r = rhs(y, model, eps, spec, left_limit);
  Stage s;
  s.n.resize(y.d.size());
  double h1_sq = 0.0;
  for (std::size_t i = 0; i < s.n.size(); ++i) {
    s.n[i] = r.viscous_nl[i] + r.convection[i] + r.forcing[i];
    h1_sq += y.basis->modes[i].lambda * y.d[i] * y.d[i];
  }
  const double jp = -dot(r.viscous_nl, y.d);
  const double fp = dot(r.forcing, y.d);
  s.g.h1_sq = h1_sq;
  s.g.forcing_dual = dual_norm_sq(*y.basis, r.forcing);
  s.g.forcing_power = fp;
  s.g.work = 0.5 * h1_sq + jp - fp;
  return s;
}

struct StepOut {
  CoefficientVector y;
  StageIntegrals integrals;
};

// Lawson-type integrating-factor RK4. Forcing is evaluated from the left when
// the step starts before T1; the stepper never crosses T1.
StepOut if_rk4(const CoefficientVector& x, double dt, const ViscosityModel& model, double eps, const ForcingSpec& spec) {
  const std::size_t M = x.d.size();
  const auto& modes = x.basis->modes;
  const bool left = x.t < spec.T1;
  std::vector<double> E(M), Eh(M);
  for (std::size_t i = 0; i < M; ++i) {
    E[i] = std::exp(-0.5 * modes[i].lambda * dt);
    Eh[i] = std::exp(-0.25 * modes[i].lambda * dt);
  }

  CoefficientVector y = x;
  const Stage k1 = evaluate(x, model, eps, spec, left);
  y.t = x.t + 0.5 * dt;
  for (std::size_t i = 0; i < M; ++i) y.d[i] = Eh[i] * (x.d[i] + 0.5 * dt * k1.n[i]);
  const Stage k2 = evaluate(y, model, eps, spec, left);
  for (std::size_t i = 0; i < M; ++i) y.d[i] = Eh[i] * x.d[i] + 0.5 * dt * k2.n[i];
  const Stage k3 = evaluate(y, model, eps, spec, left);
  y.t = x.t + dt;
  for (std::size_t i = 0; i < M; ++i) y.d[i] = E[i] * x.d[i] + dt * Eh[i] * k3.n[i];
  const Stage k4 = evaluate(y, model, eps, spec, left);

  StepOut out;
  out.y = x;
  out.y.t = x.t + dt;
  for (std::size_t i = 0; i < M; ++i) {
    out.y.d[i] = E[i] * x.d[i] + dt / 6.0 * (E[i] * k1.n[i] + 2.0 * Eh[i] * (k2.n[i] + k3.n[i]) + k4.n[i]);
    if (!std::isfinite(out.y.d[i])) throw NonfiniteStateError("nonfinite coefficient after step at t=" + std::to_string(x.t));
  }
  auto quad = [&](double StageIntegrals::*f) { return dt / 6.0 * (k1.g.*f + 2.0 * (k2.g.*f + k3.g.*f) + k4.g.*f); };
  out.integrals.h1_sq = quad(&StageIntegrals::h1_sq);
  out.integrals.forcing_dual = quad(&StageIntegrals::forcing_dual);
  out.integrals.forcing_power = quad(&StageIntegrals::forcing_power);
  out.integrals.work = quad(&StageIntegrals::work);
  return out;
}

}  // namespace

CoefficientVector step(const CoefficientVector& state, double dt, const ViscosityModel& model, double eps,
                       const ForcingSpec& spec) {
  if (!(dt > 0.0)) throw ConfigurationError("step: dt must be > 0");
  return if_rk4(state, dt, model, eps, spec).y;
}

RecordScalars record_scalars(const CoefficientVector& state, const ViscosityModel& model, double eps,
                             const ForcingSpec& spec) {
  RecordScalars s;
  const Norms n = norms(state);
  s.t = state.t;
  s.l2 = n.l2;
  s.h1 = n.h1;
  s.dissipation = n.dissipation;
  s.l4 = n.l4;
  s.j_eps_value = j_eps(state, model, eps);
  s.jprime_pairing = jprime_pairing(state, model, eps);
  s.forcing_power = dot(forcing_term(state.t, spec, *state.basis), state.d);
  return s;
}

RunResult run(const CoefficientVector& u0, const IntegratorConfig& cfg, const ViscosityModel& model, double eps,
              const ForcingSpec& spec, const RecordObserver& observer) {
  cfg.validate();
  if (!u0.basis || u0.d.size() != u0.basis->size()) throw ShapeError("run: initial state does not match its basis");
  if (!(cfg.t_end > u0.t)) throw ConfigurationError("t_end must exceed the start time; the trajectory would be empty");

  std::vector<double> landings;
  if (spec.T1 > u0.t && spec.T1 < cfg.t_end) landings.push_back(spec.T1);
  for (double s : cfg.sample_times)
    if (s > u0.t && s < cfg.t_end) landings.push_back(s);
  landings.push_back(cfg.t_end);
  std::sort(landings.begin(), landings.end());
  landings.erase(std::unique(landings.begin(), landings.end()), landings.end());

  RunResult res;
  CoefficientVector state = u0;
  StageIntegrals acc;

  auto record = [&]() {
    RecordScalars s = record_scalars(state, model, eps, spec);
    s.int_h1_sq = acc.h1_sq;
    s.int_forcing_dual = acc.forcing_dual;
    s.int_forcing_power = acc.forcing_power;
    s.int_work = acc.work;
    res.trajectory.times.push_back(state.t);
    res.trajectory.scalars.push_back(s);
    if (cfg.keep_states) res.trajectory.states.push_back(state);
    if (observer) observer(s, state);
    return s.l2;
  };
  auto stop_here = [&]() { res.stop = StoppingEvent{state.t, l2_norm(state.d)}; };

  record();
  if (l2_norm(state.d) <= cfg.stop_tol) {
    stop_here();
    return res;
  }

  double dt = cfg.dt_init;
  std::size_t next_landing = 0;
  std::size_t since_record = 0;
  while (state.t < cfg.t_end) {
    while (landings[next_landing] <= state.t) ++next_landing;
    const double target = landings[next_landing];
    double h = dt;
    bool landing = false;
    if (state.t + h >= target - 1e-3 * h) {
      h = target - state.t;
      landing = true;
    }

    const double tol = std::max(cfg.abs_tol, cfg.rel_tol * l2_norm(state.d));
    double err = std::numeric_limits<double>::infinity();
    StepOut half1, half2;
    try {
      const StepOut full = if_rk4(state, h, model, eps, spec);
      half1 = if_rk4(state, 0.5 * h, model, eps, spec);
      half2 = if_rk4(half1.y, 0.5 * h, model, eps, spec);
      double diff = 0.0;
      for (std::size_t i = 0; i < state.d.size(); ++i) {
        const double e = half2.y.d[i] - full.y.d[i];
        diff += e * e;
      }
      err = std::sqrt(diff) / 15.0;
    } catch (const NonfiniteStateError&) {
    } catch (const OverflowError&) {
      if (h <= cfg.dt_min) throw;
    }
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();

    if (err > tol) {
      ++res.rejected_steps;
      if (h <= cfg.dt_min)
        throw StepUnderflowError("step size reached dt_min = " + std::to_string(cfg.dt_min) + " at t = " +
                                 std::to_string(state.t) + " with error " + std::to_string(err) + " > " + std::to_string(tol));
      const double factor = std::isfinite(err) ? std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 1.0) : 0.2;
      dt = std::max(cfg.dt_min, h * factor);
      continue;
    }

    ++res.accepted_steps;
    ++since_record;
    state = half2.y;
    state.t = landing ? target : state.t;
    acc += half1.integrals;
    acc += half2.integrals;
    // A step shortened to land on a target says little about dt; keep the proposal.
    if (!(landing && h < dt)) {
      const double factor = err == 0.0 ? 4.0 : std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 4.0);
      dt = std::clamp(h * factor, cfg.dt_min, cfg.dt_max);
    }

    if (l2_norm(state.d) <= cfg.stop_tol) {
      record();
      stop_here();
      return res;
    }
    if (landing || since_record >= static_cast<std::size_t>(cfg.record_every)) {
      record();
      since_record = 0;
    }
  }
  return res;
}

std::optional<StoppingEvent> detect_stopping(const TrajectoryRecord& traj, double stop_tol, std::optional<double> alpha) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double l2 = traj.scalars[k].l2;
    if (l2 > stop_tol) continue;
    StoppingEvent ev{traj.times[k], l2};
    if (alpha && k > 0 && *alpha > 0.0) {
      const double a = std::pow(traj.scalars[k - 1].l2, *alpha);
      const double b = std::pow(l2, *alpha);
      const double target = std::pow(stop_tol, *alpha);
      if (a > b) {
        const double w = std::clamp((a - target) / (a - b), 0.0, 1.0);
        ev.T0 = traj.times[k - 1] + w * (traj.times[k] - traj.times[k - 1]);
      }
    }
    return ev;
  }
  return std::nullopt;
}

}  // namespace visco
