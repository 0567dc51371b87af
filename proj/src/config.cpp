#include "visco/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "visco/errors.hpp"
#include "visco/io.hpp"

namespace visco {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

const std::map<std::string, std::set<std::string>> known_keys = {
    {"model", {"name", "alpha", "mu", "gamma", "beta", "kappa", "value", "K", "t0", "table"}},
    {"basis", {"N", "m_max", "grid_size"}},
    {"run", {"eps", "t_end", "dt_init", "dt_min", "dt_max", "rel_tol", "abs_tol", "stop_tol", "sample_times"}},
    {"u0", {"preset", "xi", "phase", "polarization", "amplitude", "seed", "slope", "norm", "file", "time"}},
    {"u0_mode", {"xi", "phase", "polarization", "amplitude"}},
    {"forcing", {"T1"}},
    {"forcing_term", {"xi", "phase", "polarization", "amplitude", "envelope", "omega", "shift"}},
    {"output", {"dir", "record_every", "snapshot_every", "eta"}},
};

const std::set<std::string> model_params = {"alpha", "mu", "gamma", "beta", "kappa", "value", "K", "t0"};
const std::set<std::string> presets = {"single_mode", "taylor_green", "random_seeded", "modes", "snapshot"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Value of one key, with trailing comments removed.
class Value {
 public:
  Value(std::string key, const std::string& raw) : key_(std::move(key)) {
    const auto c = raw.find_first_of(";#");
    text_ = trim(c == std::string::npos ? raw : raw.substr(0, c));
    if (text_.size() >= 2 && text_.front() == '"' && text_.back() == '"') text_ = text_.substr(1, text_.size() - 2);
  }

  const std::string& key() const { return key_; }
  const std::string& str() const { return text_; }

  double number() const { return parse_number(text_); }

  int integer() const {
    const double v = number();
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(key_, "expected an integer, got '" + text_ + "'");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer() const {
    std::uint64_t v = 0;
    const auto r = std::from_chars(text_.data(), text_.data() + text_.size(), v);
    if (r.ec != std::errc() || r.ptr != text_.data() + text_.size())
      throw ValidationError(key_, "expected a non-negative integer, got '" + text_ + "'");
    return v;
  }

  bool boolean() const {
    if (text_ == "true" || text_ == "1") return true;
    if (text_ == "false" || text_ == "0") return false;
    throw ValidationError(key_, "expected true or false, got '" + text_ + "'");
  }

  std::vector<double> list() const {
    if (text_.size() < 2 || text_.front() != '[' || text_.back() != ']')
      throw ValidationError(key_, "expected a list [a, b, ...], got '" + text_ + "'");
    std::vector<double> out;
    const std::string body = trim(text_.substr(1, text_.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(trim(item)));
    return out;
  }

 private:
  double parse_number(const std::string& s) const {
    double v = 0.0;
    const char* b = s.data();
    if (!s.empty() && s.front() == '+') ++b;
    const auto r = std::from_chars(b, s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size() || std::isnan(v))
      throw ValidationError(key_, "expected a number, got '" + s + "'");
    return v;
  }

  std::string key_;
  std::string text_;
};

std::string section_kind(const std::string& name) {
  const auto dot = name.find('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

Phase parse_phase(const Value& v) {
  if (v.str() == "cos") return Phase::cos;
  if (v.str() == "sin") return Phase::sin;
  throw ValidationError(v.key(), "phase must be cos or sin, got '" + v.str() + "'");
}

std::array<int, 3> parse_xi(const Value& v, int N) {
  const auto l = v.list();
  if (static_cast<int>(l.size()) != N)
    throw ValidationError(v.key(), "wavevector needs " + std::to_string(N) + " components");
  std::array<int, 3> xi{};
  for (int d = 0; d < N; ++d) {
    const double c = l[static_cast<std::size_t>(d)];
    if (c != std::floor(c)) throw ValidationError(v.key(), "wavevector components must be integers");
    xi[static_cast<std::size_t>(d)] = static_cast<int>(c);
  }
  return xi;
}

bool representative(const std::array<int, 3>& xi) {
  for (int c : xi)
    if (c != 0) return c > 0;
  return false;
}

void check_mode(const std::string& where, const std::array<int, 3>& xi, int polarization, int N, int m_max) {
  if (!representative(xi))
    throw ValidationError(where + ".xi", "wavevector must be nonzero with its first nonzero component positive");
  for (int c : xi)
    if (std::abs(c) > m_max) throw ValidationError(where + ".xi", "wavevector lies outside m_max = " + std::to_string(m_max));
  if (polarization < 0 || polarization > N - 2)
    throw ValidationError(where + ".polarization", "polarization must be 0" + std::string(N == 3 ? " or 1" : ""));
}

std::string resolve_path(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (std::filesystem::path(base) / p).lexically_normal().string();
}

std::string format_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

std::string format_xi(const std::array<int, 3>& xi, int N) {
  std::string s = "[";
  for (int d = 0; d < N; ++d) s += (d ? ", " : "") + std::to_string(xi[static_cast<std::size_t>(d)]);
  return s + "]";
}

const char* phase_name(Phase p) { return p == Phase::cos ? "cos" : "sin"; }

void validate_model(const ExperimentConfig& cfg) {
  ViscosityModel m;
  try {
    m = build_model(cfg.model);
    m.validate();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError("model", e.what());
  }
  // F = 0 is the Stokes limit; it fails only (C1).
  if (m.kind == ViscosityKind::constant && m.value == 0.0) return;
  const auto grid = log_grid();
  const ConditionReport rep = check_conditions(m, grid);
  if (rep.all_passed()) return;
  std::string failed;
  if (!rep.c1) failed += " (C1)";
  if (!rep.c2) failed += " (C2)";
  if (!rep.c3) failed += " (C3)";
  if (!rep.c4) failed += " (C4)";
  if (!rep.near_zero) failed += " (near-zero bound)";
  std::string witness;
  if (!rep.witnesses.empty())
    witness = "; first witness " + rep.witnesses.front().condition + " at t = " + format_double(rep.witnesses.front().t);
  const bool exponent = cfg.model.params.count("alpha") && (!rep.c3 || !rep.c4);
  const std::string hint =
      m.kind == ViscosityKind::power_law && !rep.c3 ? ": t F(t) = t^(1 - alpha) must be non-decreasing, so alpha <= 1" : "";
  throw ValidationError(exponent ? "model.alpha" : "model.name",
                        m.describe() + " violates" + failed + hint + witness);
}

}  // namespace

ViscosityModel build_model(const ModelConfig& cfg) {
  ViscosityModel m;
  try {
    m = make_model(cfg.name, cfg.params);
  } catch (const Error& e) {
    throw ValidationError("model.name", e.what());
  }
  if (m.kind == ViscosityKind::tabulated) {
    if (cfg.table.empty()) throw ValidationError("model.table", "tabulated model needs a table path");
    try {
      m.table = load_tabulated_law(cfg.table);
    } catch (const Error& e) {
      throw ValidationError("model.table", e.what());
    }
  } else if (!cfg.table.empty()) {
    throw ValidationError("model.table", "only the tabulated model reads a table");
  }
  return m;
}

BasisPtr build_basis(const ExperimentConfig& cfg) { return build_basis(cfg.N, cfg.m_max, cfg.grid_size); }

CoefficientVector build_u0(const ExperimentConfig& cfg, BasisPtr basis) {
  const U0Config& u = cfg.u0;
  CoefficientVector c = CoefficientVector::zeros(basis);
  auto place = [&](const ModeAmplitude& m, const std::string& where) {
    const auto i = basis->find(m.xi, m.phase, m.polarization);
    if (!i) throw ValidationError(where, "mode " + format_xi(m.xi, cfg.N) + " is not in the basis");
    c.d[*i] += m.amplitude;
  };
  if (u.preset == "single_mode") {
    place(u.mode, "u0.xi");
  } else if (u.preset == "taylor_green") {
    c = project_function(taylor_green(u.mode.amplitude), basis);
  } else if (u.preset == "random_seeded") {
    for (std::size_t i = 0; i < c.d.size(); ++i) {
      // Box-Muller on two counter draws.
      const double u1 = (static_cast<double>(splitmix64(u.seed, 2 * i) >> 11) + 0.5) * 0x1.0p-53;
      const double u2 = (static_cast<double>(splitmix64(u.seed, 2 * i + 1) >> 11) + 0.5) * 0x1.0p-53;
      const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      c.d[i] = z * std::pow(basis->modes[i].lambda, -0.5 * u.slope);
    }
  } else if (u.preset == "modes") {
    for (const auto& m : u.modes) place(m, "u0_mode.xi");
  } else if (u.preset == "snapshot") {
    const auto snaps = read_snapshots(u.file, basis);
    if (snaps.empty()) throw ValidationError("u0.file", "no snapshots in " + u.file);
    if (!u.time) {
      c = snaps.back();
    } else {
      const auto it = std::find_if(snaps.begin(), snaps.end(), [&](const auto& s) { return s.t == *u.time; });
      if (it == snaps.end()) throw ValidationError("u0.time", "no snapshot at t = " + format_double(*u.time));
      c = *it;
    }
  }
  if (u.norm) {
    const double n = norms(c).l2;
    if (!(n > 0.0)) throw ValidationError("u0.norm", "cannot rescale the zero state");
    for (double& x : c.d) x *= *u.norm / n;
  }
  return c;
}

RunSetup to_run_setup(const ExperimentConfig& cfg) {
  RunSetup s;
  s.N = cfg.N;
  s.model = build_model(cfg.model);
  s.forcing = cfg.forcing;
  s.integrator = cfg.integrator;
  s.grid_size = 0;
  s.u0 = [cfg](BasisPtr b) { return build_u0(cfg, b); };
  return s;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  // Full-line '#' comments are blanked so line numbers survive.
  std::istringstream lines(text);
  std::string prepared, line;
  while (std::getline(lines, line)) {
    const std::string t = trim(line);
    prepared += (!t.empty() && t.front() == '#') ? "" : line;
    prepared += '\n';
  }
  pt::ptree tree;
  try {
    std::istringstream in(prepared);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.message(), static_cast<int>(e.line()));
  }

  ExperimentConfig cfg;
  bool forcing_T1_set = false;
  std::vector<std::pair<std::string, const pt::ptree*>> mode_sections, term_sections;
  std::map<std::string, const pt::ptree*> sections;
  for (const auto& [name, sec] : tree) {
    if (sec.empty() && !sec.data().empty()) throw ValidationError(name, "key outside a section");
    const std::string kind = section_kind(name);
    const auto known = known_keys.find(kind);
    if (known == known_keys.end()) throw ValidationError(name, "unknown section [" + name + "]");
    const bool repeated = kind == "u0_mode" || kind == "forcing_term";
    if (repeated != (name != kind)) throw ValidationError(name, "section [" + name + "] is not expected here");
    for (const auto& [key, v] : sec) {
      if (!known->second.count(key)) throw ValidationError(name + "." + key, "unknown key '" + key + "'");
      (void)v;
    }
    if (kind == "u0_mode") mode_sections.emplace_back(name, &sec);
    else if (kind == "forcing_term") term_sections.emplace_back(name, &sec);
    else sections[name] = &sec;
  }

  auto get = [&](const std::string& sec, const std::string& key) -> std::optional<Value> {
    const auto it = sections.find(sec);
    if (it == sections.end()) return std::nullopt;
    const auto v = it->second->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return Value(sec + "." + key, *v);
  };
  auto get_in = [](const std::string& name, const pt::ptree& sec, const std::string& key) -> std::optional<Value> {
    const auto v = sec.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return Value(name + "." + key, *v);
  };

  // [basis]
  if (auto v = get("basis", "N")) cfg.N = v->integer();
  if (cfg.N != 2 && cfg.N != 3) throw ValidationError("basis.N", "N must be 2 or 3");
  const auto m = get("basis", "m_max");
  if (!m) throw ValidationError("basis.m_max", "required");
  cfg.m_max = m->integer();
  if (cfg.m_max < 1) throw ValidationError("basis.m_max", "m_max must be >= 1");
  if (auto v = get("basis", "grid_size")) {
    cfg.grid_size = v->integer();
    if (cfg.grid_size <= 3 * cfg.m_max)
      throw ValidationError("basis.grid_size", "grid_size must exceed 3 m_max = " + std::to_string(3 * cfg.m_max) +
                                                   " for alias-free cubic products");
  } else {
    cfg.grid_size = default_grid_size(cfg.m_max);
  }

  // [model]
  const auto name = get("model", "name");
  if (!name) throw ValidationError("model.name", "required");
  cfg.model.name = name->str();
  for (const auto& p : model_params)
    if (auto v = get("model", p)) {
      const double x = v->number();
      if (!std::isfinite(x)) throw ValidationError(v->key(), "must be finite");
      cfg.model.params[p] = x;
    }
  if (auto v = get("model", "table")) cfg.model.table = resolve_path(v->str(), base_dir);
  validate_model(cfg);

  // [run]
  auto& ic = cfg.integrator;
  if (auto v = get("run", "eps")) cfg.eps = v->number();
  if (!(cfg.eps >= 0.0) || !std::isfinite(cfg.eps)) throw ValidationError("run.eps", "eps must be finite and >= 0");
  if (cfg.eps == 0.0 && !build_model(cfg.model).bounded_at_zero())
    throw ValidationError("run.eps", "eps = 0 needs a law bounded at 0; " + cfg.model.name + " is singular");
  const std::pair<const char*, double*> reals[] = {{"t_end", &ic.t_end},     {"dt_init", &ic.dt_init},
                                                   {"dt_min", &ic.dt_min},   {"dt_max", &ic.dt_max},
                                                   {"rel_tol", &ic.rel_tol}, {"abs_tol", &ic.abs_tol},
                                                   {"stop_tol", &ic.stop_tol}};
  for (const auto& [key, dst] : reals)
    if (auto v = get("run", key)) *dst = v->number();
  if (auto v = get("run", "sample_times")) {
    ic.sample_times = v->list();
    std::sort(ic.sample_times.begin(), ic.sample_times.end());
  }
  if (!std::isfinite(ic.t_end)) throw ValidationError("run.t_end", "must be finite");
  if (!(ic.dt_min > 0.0)) throw ValidationError("run.dt_min", "must be > 0");
  if (!(ic.dt_init >= ic.dt_min)) throw ValidationError("run.dt_init", "must be >= dt_min");
  if (!(ic.dt_max >= ic.dt_init) || !std::isfinite(ic.dt_max)) throw ValidationError("run.dt_max", "must be finite and >= dt_init");
  if (!(ic.rel_tol > 0.0) || !std::isfinite(ic.rel_tol)) throw ValidationError("run.rel_tol", "must be > 0");
  if (!(ic.abs_tol >= 0.0) || !std::isfinite(ic.abs_tol)) throw ValidationError("run.abs_tol", "must be >= 0");
  if (!(ic.stop_tol > 0.0) || !std::isfinite(ic.stop_tol)) throw ValidationError("run.stop_tol", "must be > 0");
  for (double s : ic.sample_times)
    if (!std::isfinite(s)) throw ValidationError("run.sample_times", "sample times must be finite");

  // [u0] and [u0_mode.*]
  U0Config& u = cfg.u0;
  if (auto v = get("u0", "preset")) u.preset = v->str();
  if (!presets.count(u.preset)) throw ValidationError("u0.preset", "unknown preset '" + u.preset + "'");
  if (auto v = get("u0", "xi")) u.mode.xi = parse_xi(*v, cfg.N);
  if (auto v = get("u0", "phase")) u.mode.phase = parse_phase(*v);
  if (auto v = get("u0", "polarization")) u.mode.polarization = v->integer();
  if (auto v = get("u0", "amplitude")) u.mode.amplitude = v->number();
  if (auto v = get("u0", "seed")) u.seed = v->unsigned_integer();
  if (auto v = get("u0", "slope")) u.slope = v->number();
  if (auto v = get("u0", "norm")) {
    u.norm = v->number();
    if (!(*u.norm > 0.0) || !std::isfinite(*u.norm)) throw ValidationError("u0.norm", "must be finite and > 0");
  }
  if (auto v = get("u0", "file")) u.file = resolve_path(v->str(), base_dir);
  if (auto v = get("u0", "time")) u.time = v->number();
  if (!std::isfinite(u.mode.amplitude)) throw ValidationError("u0.amplitude", "must be finite");
  if (!std::isfinite(u.slope)) throw ValidationError("u0.slope", "must be finite");
  if (u.preset == "single_mode") check_mode("u0", u.mode.xi, u.mode.polarization, cfg.N, cfg.m_max);
  for (const auto& [sec_name, sec] : mode_sections) {
    ModeAmplitude ma;
    const auto xi = get_in(sec_name, *sec, "xi");
    if (!xi) throw ValidationError(sec_name + ".xi", "required");
    ma.xi = parse_xi(*xi, cfg.N);
    if (auto v = get_in(sec_name, *sec, "phase")) ma.phase = parse_phase(*v);
    if (auto v = get_in(sec_name, *sec, "polarization")) ma.polarization = v->integer();
    if (auto v = get_in(sec_name, *sec, "amplitude")) ma.amplitude = v->number();
    if (!std::isfinite(ma.amplitude)) throw ValidationError(sec_name + ".amplitude", "must be finite");
    check_mode(sec_name, ma.xi, ma.polarization, cfg.N, cfg.m_max);
    u.modes.push_back(ma);
  }
  if (u.preset == "modes" && u.modes.empty()) throw ValidationError("u0.preset", "preset modes needs [u0_mode.*] sections");
  if (u.preset != "modes" && !u.modes.empty()) throw ValidationError("u0.preset", "[u0_mode.*] sections need preset = modes");
  if (u.preset == "snapshot" && u.file.empty()) throw ValidationError("u0.file", "preset snapshot needs a file");
  if (u.preset != "snapshot" && !(ic.t_end > 0.0))
    throw ValidationError("run.t_end", "t_end must exceed the start time 0; the trajectory would be empty");

  // [forcing] and [forcing_term.*]
  if (auto v = get("forcing", "T1")) {
    cfg.forcing.T1 = v->number();
    forcing_T1_set = true;
    if (!(cfg.forcing.T1 >= 0.0)) throw ValidationError("forcing.T1", "must be >= 0");
  }
  for (const auto& [sec_name, sec] : term_sections) {
    ForcingTerm f;
    const auto xi = get_in(sec_name, *sec, "xi");
    if (!xi) throw ValidationError(sec_name + ".xi", "required");
    f.xi = parse_xi(*xi, cfg.N);
    if (auto v = get_in(sec_name, *sec, "phase")) f.phase = parse_phase(*v);
    if (auto v = get_in(sec_name, *sec, "polarization")) f.polarization = v->integer();
    if (auto v = get_in(sec_name, *sec, "amplitude")) f.amplitude = v->number();
    if (auto v = get_in(sec_name, *sec, "envelope")) {
      if (v->str() == "constant") f.envelope = Envelope::constant;
      else if (v->str() == "harmonic") f.envelope = Envelope::harmonic;
      else throw ValidationError(v->key(), "envelope must be constant or harmonic");
    }
    if (auto v = get_in(sec_name, *sec, "omega")) f.omega = v->number();
    if (auto v = get_in(sec_name, *sec, "shift")) f.shift = v->number();
    for (double x : {f.amplitude, f.omega, f.shift})
      if (!std::isfinite(x)) throw ValidationError(sec_name, "forcing parameters must be finite");
    check_mode(sec_name, f.xi, f.polarization, cfg.N, cfg.m_max);
    cfg.forcing.terms.push_back(f);
  }
  if (cfg.forcing.terms.empty() && !forcing_T1_set) cfg.forcing.T1 = 0.0;

  // [output]
  if (auto v = get("output", "dir")) cfg.out_dir = v->str();
  if (auto v = get("output", "record_every")) ic.record_every = v->integer();
  if (auto v = get("output", "snapshot_every")) cfg.snapshot_every = v->integer();
  if (auto v = get("output", "eta")) cfg.eta = v->boolean();
  if (ic.record_every < 1) throw ValidationError("output.record_every", "must be >= 1");
  if (cfg.snapshot_every < 0) throw ValidationError("output.snapshot_every", "must be >= 0");
  if (cfg.eta) {
    const auto mm = build_model(cfg.model);
    if (mm.kind != ViscosityKind::power_law)
      throw ValidationError("output.eta", "the eta column needs a power_law model");
  }

  try {
    ic.validate();
  } catch (const ConfigurationError& e) {
    throw ValidationError("run", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string echo_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  const auto& ic = cfg.integrator;
  o << "[model]\nname = " << cfg.model.name << "\n";
  for (const auto& [k, v] : cfg.model.params) o << k << " = " << format_double(v) << "\n";
  if (!cfg.model.table.empty()) o << "table = " << cfg.model.table << "\n";
  o << "\n[basis]\nN = " << cfg.N << "\nm_max = " << cfg.m_max << "\ngrid_size = " << cfg.grid_size << "\n";
  o << "\n[run]\neps = " << format_double(cfg.eps) << "\nt_end = " << format_double(ic.t_end)
    << "\ndt_init = " << format_double(ic.dt_init) << "\ndt_min = " << format_double(ic.dt_min)
    << "\ndt_max = " << format_double(ic.dt_max) << "\nrel_tol = " << format_double(ic.rel_tol)
    << "\nabs_tol = " << format_double(ic.abs_tol) << "\nstop_tol = " << format_double(ic.stop_tol)
    << "\nsample_times = " << format_list(ic.sample_times) << "\n";

  const U0Config& u = cfg.u0;
  o << "\n[u0]\npreset = " << u.preset << "\n";
  if (u.preset == "single_mode")
    o << "xi = " << format_xi(u.mode.xi, cfg.N) << "\nphase = " << phase_name(u.mode.phase)
      << "\npolarization = " << u.mode.polarization << "\n";
  if (u.preset == "single_mode" || u.preset == "taylor_green") o << "amplitude = " << format_double(u.mode.amplitude) << "\n";
  if (u.preset == "random_seeded") o << "seed = " << u.seed << "\nslope = " << format_double(u.slope) << "\n";
  if (u.preset == "snapshot") {
    o << "file = " << u.file << "\n";
    if (u.time) o << "time = " << format_double(*u.time) << "\n";
  }
  if (u.norm) o << "norm = " << format_double(*u.norm) << "\n";
  for (std::size_t k = 0; k < u.modes.size(); ++k) {
    const auto& m = u.modes[k];
    o << "\n[u0_mode." << k + 1 << "]\nxi = " << format_xi(m.xi, cfg.N) << "\nphase = " << phase_name(m.phase)
      << "\npolarization = " << m.polarization << "\namplitude = " << format_double(m.amplitude) << "\n";
  }

  o << "\n[forcing]\nT1 = " << format_double(cfg.forcing.T1) << "\n";
  for (std::size_t k = 0; k < cfg.forcing.terms.size(); ++k) {
    const auto& f = cfg.forcing.terms[k];
    o << "\n[forcing_term." << k + 1 << "]\nxi = " << format_xi(f.xi, cfg.N) << "\nphase = " << phase_name(f.phase)
      << "\npolarization = " << f.polarization << "\namplitude = " << format_double(f.amplitude)
      << "\nenvelope = " << (f.envelope == Envelope::constant ? "constant" : "harmonic")
      << "\nomega = " << format_double(f.omega) << "\nshift = " << format_double(f.shift) << "\n";
  }

  o << "\n[output]\ndir = " << cfg.out_dir << "\nrecord_every = " << ic.record_every
    << "\nsnapshot_every = " << cfg.snapshot_every << "\neta = " << (cfg.eta ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace visco
