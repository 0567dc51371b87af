#include "visco/commands.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "visco/errors.hpp"
#include "visco/io.hpp"
#include "visco/spectral_basis.hpp"
#include "visco/viscosity.hpp"

namespace visco {

namespace fs = std::filesystem;

namespace {

std::string conditions_cell(bool ok) { return ok ? "pass" : "FAIL"; }

double effective_T1(const ExperimentConfig& cfg) { return cfg.forcing.terms.empty() ? 0.0 : cfg.forcing.T1; }

std::string summary_text(const ExperimentConfig& cfg, const ViscosityModel& model, const BasisSpec& basis,
                         const ExperimentOutcome& o) {
  std::ostringstream s;
  const auto& tr = o.result.trajectory;
  s << "model: " << model.describe() << "\n";
  s << "domain: periodic torus [0, 2pi)^" << cfg.N
    << " with mean-free divergence-free fields; it stands in for a bounded domain with no-slip walls\n";
  s << "basis: m_max=" << cfg.m_max << " modes=" << basis.size() << " grid=" << basis.grid_size << "^" << cfg.N << "\n";
  s << "eps: " << format_double(cfg.eps) << "\n";
  s << "u0_norm: " << format_double(o.u0_norm) << "\n";
  s << "steps: accepted=" << o.result.accepted_steps << " rejected=" << o.result.rejected_steps << "\n";
  s << "records: " << tr.size() << "\n";
  if (!tr.empty()) s << "final: t=" << format_double(tr.scalars.back().t) << " l2=" << format_double(tr.scalars.back().l2) << "\n";
  if (o.result.stop)
    s << "stop: T0=" << format_double(o.result.stop->T0) << " norm=" << format_double(o.result.stop->attained_norm) << "\n";
  else if (!o.failed())
    s << "stop: none above stop_tol=" << format_double(cfg.integrator.stop_tol) << "\n";
  if (!o.failed() && tr.size() > 0) {
    s << "worst_inequality_margin: " << format_double(o.energy.worst_inequality_margin) << "\n";
    s << "worst_sharp_margin: " << format_double(o.energy.worst_sharp_margin) << "\n";
    s << "balance_residual_max: " << format_double(o.energy.balance_residual_max) << "\n";
  }
  if (o.failed()) s << "failed: " << o.failure << "\n";
  return s.str();
}

std::optional<ViscosityModel> parse_model_arg(const std::string& arg, std::string& label, std::ostream& err) {
  try {
    if (arg.rfind("table:", 0) == 0) {
      label = arg;
      auto m = ViscosityModel::tabulated(load_tabulated_law(arg.substr(6)));
      return m;
    }
    const auto colon = arg.find(':');
    const std::string name = arg.substr(0, colon);
    std::map<std::string, double> params;
    if (colon != std::string::npos) {
      std::stringstream ss(arg.substr(colon + 1));
      std::string kv;
      while (std::getline(ss, kv, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + kv + "'");
        std::size_t used = 0;
        const std::string v = kv.substr(eq + 1);
        const double x = std::stod(v, &used);
        if (used != v.size()) throw ParameterError("bad number '" + v + "'");
        params[kv.substr(0, eq)] = x;
      }
    }
    label = arg;
    auto m = make_model(name, params);
    if (m.kind == ViscosityKind::tabulated) throw ParameterError("use table:<path> for tabulated laws");
    m.validate();
    return m;
  } catch (const std::exception& e) {
    err << "models: " << arg << ": " << e.what() << "\n";
    return std::nullopt;
  }
}

template <class F>
int guarded(const char* cmd, std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << cmd << ": config " << e.what() << "\n";
  } catch (const ValidationError& e) {
    err << cmd << ": invalid config: " << e.what() << "\n";
  } catch (const ConfigurationError& e) {
    err << cmd << ": " << e.what() << "\n";
  } catch (const StepUnderflowError& e) {
    err << cmd << ": integrator failure: " << e.what() << "\n";
    return exit_integrator;
  } catch (const NonfiniteStateError& e) {
    err << cmd << ": integrator failure: " << e.what() << "\n";
    return exit_integrator;
  } catch (const Error& e) {
    err << cmd << ": " << e.what() << "\n";
  }
  return exit_usage;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const fs::path& dir) {
  const ViscosityModel model = build_model(cfg.model);
  const BasisPtr basis = build_basis(cfg);
  const CoefficientVector u0 = build_u0(cfg, basis);

  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  fs::remove(dir / "events.log");
  ExperimentConfig echo = cfg;
  echo.out_dir = dir.string();
  write_text(dir / "config.ini", echo_config(echo));

  IntegratorConfig ic = cfg.integrator;
  ic.keep_states = cfg.eta;
  const double T1 = effective_T1(cfg);
  std::set<double> landings(ic.sample_times.begin(), ic.sample_times.end());
  landings.insert({u0.t, ic.t_end});
  if (T1 > u0.t && T1 < ic.t_end) landings.insert(T1);

  TrajectoryWriter traj_out(dir / "trajectory.csv");
  SnapshotWriter snap_out(dir / "snapshots.csv");
  const fs::path events = dir / "events.log";

  ExperimentOutcome o;
  o.u0_norm = norms(u0).l2;
  append_line(events, "START t=" + format_double(u0.t) + " norm=" + format_double(o.u0_norm));

  std::size_t n_records = 0;
  double last_snapshot = -std::numeric_limits<double>::infinity();
  std::optional<CoefficientVector> last_state;
  double last_t = u0.t;
  auto observer = [&](const RecordScalars& s, const CoefficientVector& c) {
    traj_out.write(s);
    const bool every = cfg.snapshot_every > 0 && n_records % static_cast<std::size_t>(cfg.snapshot_every) == 0;
    if (landings.count(s.t) || every) {
      snap_out.write(c);
      last_snapshot = s.t;
    }
    if (T1 > u0.t && s.t == T1) append_line(events, "T1 t=" + format_double(s.t) + " norm=" + format_double(s.l2));
    last_state = c;
    last_t = s.t;
    ++n_records;
  };

  try {
    o.result = run(u0, ic, model, cfg.eps, cfg.forcing, observer);
  } catch (const Error& e) {
    o.failure = e.what();
    append_line(events, "FAIL t=" + format_double(last_t) + " " + o.failure);
    write_text(dir / "FAILED", o.failure + "\n");
    write_text(dir / "summary.txt", summary_text(cfg, model, *basis, o));
    return o;
  }
  if (last_state && last_snapshot != last_state->t) snap_out.write(*last_state);

  const auto& tr = o.result.trajectory;
  if (o.result.stop)
    append_line(events, "STOP T0=" + format_double(o.result.stop->T0) + " norm=" + format_double(o.result.stop->attained_norm));
  append_line(events, "END t=" + format_double(tr.scalars.back().t) + " norm=" + format_double(tr.scalars.back().l2));

  o.energy = energy_inequality_check(tr, o.u0_norm);
  std::vector<EtaPoint> eta;
  if (cfg.eta) eta = energy_equality_eta(tr, model, theta_for_power_law(model.alpha));
  write_energy_report(dir / "energy_report.csv", tr, o.energy, eta);
  write_text(dir / "summary.txt", summary_text(cfg, model, *basis, o));
  return o;
}

int cmd_models(const std::vector<std::string>& names, std::ostream& out, std::ostream& err) {
  if (names.empty()) {
    err << "models: give model names or 'all'\n";
    return exit_usage;
  }
  std::vector<std::pair<std::string, ViscosityModel>> models;
  for (const auto& n : names) {
    if (n == "all") {
      for (auto& entry : model_catalog()) models.push_back(entry);
      continue;
    }
    std::string label;
    const auto m = parse_model_arg(n, label, err);
    if (!m) return exit_usage;
    models.emplace_back(label, *m);
  }

  const auto grid = log_grid();
  bool all_ok = true;
  out << std::left << std::setw(28) << "model" << std::setw(6) << "C1" << std::setw(6) << "C2" << std::setw(6) << "C3"
      << std::setw(6) << "C4" << std::setw(8) << "near0" << "witness\n";
  for (const auto& [label, m] : models) {
    const ConditionReport r = check_conditions(m, grid);
    all_ok = all_ok && r.all_passed();
    out << std::setw(28) << label << std::setw(6) << conditions_cell(r.c1) << std::setw(6) << conditions_cell(r.c2)
        << std::setw(6) << conditions_cell(r.c3) << std::setw(6) << conditions_cell(r.c4) << std::setw(8)
        << conditions_cell(r.near_zero);
    if (!r.witnesses.empty()) {
      const auto& w = r.witnesses.front();
      out << w.condition << " at t=" << format_double(w.t) << " (violation " << format_double(w.violation) << ")";
    }
    out << "\n";
  }
  return all_ok ? exit_ok : exit_condition;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
            std::ostream& err) {
  return guarded("run", err, [&] {
    const ExperimentConfig cfg = load_config(config_path);
    const fs::path dir = out_dir ? *out_dir : cfg.out_dir;
    const ExperimentOutcome o = run_experiment(cfg, dir);
    if (o.failed()) {
      err << "run: integrator failure: " << o.failure << " (partial output in " << dir.string() << ")\n";
      return static_cast<int>(exit_integrator);
    }
    const auto& last = o.result.trajectory.scalars.back();
    out << "run: " << o.result.trajectory.size() << " records, t=" << format_double(last.t)
        << " l2=" << format_double(last.l2);
    if (o.result.stop) out << ", stopped at T0=" << format_double(o.result.stop->T0);
    out << "\nrun: worst energy margin " << format_double(o.energy.worst_inequality_margin) << ", output in "
        << dir.string() << "\n";
    return static_cast<int>(exit_ok);
  });
}

int cmd_stoptime(const std::string& config_path, const std::optional<std::string>& out_dir,
                 std::optional<double> alpha_opt, std::vector<double> eps_list, std::ostream& out,
                 std::ostream& err) {
  return guarded("stoptime", err, [&]() -> int {
    const ExperimentConfig cfg = load_config(config_path);
    const fs::path dir = out_dir ? *out_dir : cfg.out_dir;
    ViscosityModel model = build_model(cfg.model);
    const double alpha = alpha_opt.value_or(model.alpha);
    const double alpha_max = 4.0 / (cfg.N + 2);
    if (!(alpha > 0.0 && alpha <= alpha_max)) {
      err << "stoptime: alpha = " << format_double(alpha) << " is outside (0, 4/(N+2)] = (0, " << format_double(alpha_max)
          << "] for N = " << cfg.N << "\n";
      return exit_usage;
    }
    const double T1 = effective_T1(cfg);
    if (!(T1 < cfg.integrator.t_end)) {
      err << "stoptime: forcing must switch off before t_end (T1 = " << format_double(T1) << ")\n";
      return exit_usage;
    }
    model.alpha = alpha;
    const auto violations = check_lower_bound(model, log_grid());
    if (!violations.empty()) {
      const auto& w = violations.front();
      err << "stoptime: " << model.describe() << " misses F(t) >= kappa t^-alpha with kappa = " << format_double(model.kappa)
          << ", alpha = " << format_double(alpha) << "; witness t=" << format_double(w.t) << " deficit "
          << format_double(w.violation) << "\n";
      return exit_condition;
    }
    if (eps_list.empty()) eps_list = {cfg.eps};
    std::sort(eps_list.begin(), eps_list.end(), std::greater<>());
    for (double e : eps_list)
      if (!(e > 0.0 || (e == 0.0 && model.bounded_at_zero()))) {
        err << "stoptime: eps = " << format_double(e) << " is not usable with " << model.describe() << "\n";
        return exit_usage;
      }

    fs::create_directories(dir);
    write_text(dir / "config.ini", echo_config(cfg));
    std::vector<ExperimentOutcome> runs(eps_list.size());
    parallel_for(eps_list.size(), sweep_threads(), [&](std::size_t i) {
      ExperimentConfig c = cfg;
      c.eps = eps_list[i];
      c.eta = false;
      runs[i] = run_experiment(c, dir / ("eps_" + format_double(eps_list[i])));
    });

    struct Row {
      double eps;
      std::optional<StoppingReport> rep;
      std::pair<double, double> window{0.0, 0.0};
      std::string note;
    };
    std::vector<Row> rows;
    bool integrator_failed = false, all_extinct = true, bounds_ok = true;
    std::vector<std::pair<double, double>> table;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      Row row{eps_list[i], std::nullopt, {}, ""};
      const auto& r = runs[i];
      if (r.failed()) {
        integrator_failed = true;
        row.note = "integrator failure: " + r.failure;
      } else if (!r.result.stop) {
        all_extinct = false;
        row.note = "no extinction by t_end";
      } else {
        try {
          const auto& tr = r.result.trajectory;
          row.window = late_window(tr, T1, alpha);
          const DecayFit fit = alpha_decay_fit(tr, alpha, row.window.first, row.window.second);
          row.rep = stopping_bound(tr, T1, alpha, fit, r.result.stop);
          bounds_ok = bounds_ok && row.rep->bound_ok;
          table.emplace_back(eps_list[i], r.result.stop->T0);
        } catch (const DiagnosticError& e) {
          bounds_ok = false;
          row.note = e.what();
        }
      }
      rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "eps,T0_measured,T0_bound,bound_ok,fit_slope,fit_intercept,fit_r2,window_lo,window_hi,note\n";
    for (const auto& row : rows) {
      csv << format_double(row.eps) << ',';
      if (row.rep)
        csv << format_double(*row.rep->T0_measured) << ',' << format_double(row.rep->T0_bound) << ','
            << (row.rep->bound_ok ? "true" : "false") << ',' << format_double(row.rep->fit_slope) << ','
            << format_double(row.rep->fit_intercept) << ',' << format_double(row.rep->fit_r2) << ','
            << format_double(row.window.first) << ',' << format_double(row.window.second) << ',';
      else
        csv << ",,,,,,,,";
      csv << row.note << '\n';
    }
    write_text(dir / "stopping_report.csv", csv.str());

    std::ostringstream summary;
    summary << "alpha: " << format_double(alpha) << "\nT1: " << format_double(T1) << "\n";
    const bool monotone = table.size() >= 2 && monotone_in_eps(table);
    std::optional<double> extrapolated;
    if (table.size() >= 2) {
      try {
        extrapolated = extrapolate_T0(table);
      } catch (const DiagnosticError&) {
      }
    }
    if (!rows.empty() && rows.back().rep) {
      const auto& h = *rows.back().rep;
      summary << "headline_eps: " << format_double(rows.back().eps) << "\nT0_measured: " << format_double(*h.T0_measured)
              << "\nT0_bound: " << format_double(h.T0_bound) << "\nfit_r2: " << format_double(h.fit_r2) << "\n";
    }
    summary << "eps_table_monotone: " << (monotone ? "true" : "false") << "\n";
    if (extrapolated) summary << "T0_extrapolated: " << format_double(*extrapolated) << "\n";
    write_text(dir / "stopping_summary.txt", summary.str());

    for (const auto& row : rows) {
      out << "stoptime: eps=" << format_double(row.eps);
      if (row.rep)
        out << " T0=" << format_double(*row.rep->T0_measured) << " bound=" << format_double(row.rep->T0_bound)
            << " r2=" << format_double(row.rep->fit_r2) << (row.rep->bound_ok ? "" : " BOUND EXCEEDED");
      else
        out << " " << row.note;
      out << "\n";
    }
    out << summary.str();
    if (integrator_failed) return exit_integrator;
    if (!all_extinct || !bounds_ok) return exit_no_extinction;
    return exit_ok;
  });
}

int cmd_converge(const std::string& config_path, const std::optional<std::string>& out_dir,
                 const std::vector<double>& eps_list, const std::vector<int>& m_list, std::ostream& out,
                 std::ostream& err) {
  if (eps_list.size() < 3 || m_list.size() < 3) {
    err << "converge: need at least 3 eps values and 3 m values (got " << eps_list.size() << " and " << m_list.size()
        << ")\n";
    return exit_usage;
  }
  return guarded("converge", err, [&]() -> int {
    const ExperimentConfig cfg = load_config(config_path);
    const fs::path dir = out_dir ? *out_dir : cfg.out_dir;
    fs::create_directories(dir);
    write_text(dir / "config.ini", echo_config(cfg));
    const ConvergenceTable tab = convergence_study(to_run_setup(cfg), eps_list, m_list, 64, sweep_threads());

    std::ostringstream csv;
    csv << "axis,eps,m,eps_next,m_next,l2l2_difference\n";
    for (std::size_t j = 0; j < tab.m_list.size(); ++j)
      for (std::size_t i = 0; i + 1 < tab.eps_list.size(); ++i)
        csv << "eps," << format_double(tab.eps_list[i]) << ',' << tab.m_list[j] << ',' << format_double(tab.eps_list[i + 1])
            << ',' << tab.m_list[j] << ',' << format_double(tab.eps_diff[j][i]) << '\n';
    for (std::size_t i = 0; i < tab.eps_list.size(); ++i)
      for (std::size_t j = 0; j + 1 < tab.m_list.size(); ++j)
        csv << "m," << format_double(tab.eps_list[i]) << ',' << tab.m_list[j] << ',' << format_double(tab.eps_list[i])
            << ',' << tab.m_list[j + 1] << ',' << format_double(tab.m_diff[i][j]) << '\n';
    write_text(dir / "convergence.csv", csv.str());

    out << "converge: eps axis " << (tab.eps_monotone ? "monotone" : "NOT monotone") << ", m axis "
        << (tab.m_monotone ? "monotone" : "NOT monotone") << "\n";
    for (std::size_t j = 0; j < tab.m_list.size(); ++j) {
      out << "  m=" << tab.m_list[j] << " eps diffs:";
      for (double d : tab.eps_diff[j]) out << " " << format_double(d);
      out << "\n";
    }
    for (std::size_t i = 0; i < tab.eps_list.size(); ++i) {
      out << "  eps=" << format_double(tab.eps_list[i]) << " m diffs:";
      for (double d : tab.m_diff[i]) out << " " << format_double(d);
      out << "\n";
    }
    return tab.converged() ? exit_ok : exit_no_convergence;
  });
}

}  // namespace visco
