#include "visco/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "visco/config.hpp"
#include "visco/errors.hpp"

namespace visco {

namespace {

const char* const trajectory_columns =
    "t,l2,h1,dissipation,j_eps,jprime_pairing,forcing_power,l4,int_h1_sq,int_forcing_dual,int_forcing_power,int_work";

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) f.push_back(item);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

template <class T>
T parse_field(const std::string& s, int line) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ParseError("bad number '" + s + "'", line);
  return v;
}

}  // namespace

TrajectoryWriter::TrajectoryWriter(const std::filesystem::path& path) : out_(open_out(path)) {
  out_ << header() << '\n';
  out_.flush();
}

std::string TrajectoryWriter::header() { return trajectory_columns; }

void TrajectoryWriter::write(const RecordScalars& s) {
  const double v[] = {s.t,           s.l2,        s.h1,      s.dissipation,    s.j_eps_value,       s.jprime_pairing,
                      s.forcing_power, s.l4,      s.int_h1_sq, s.int_forcing_dual, s.int_forcing_power, s.int_work};
  for (std::size_t i = 0; i < std::size(v); ++i) out_ << (i ? "," : "") << format_double(v[i]);
  out_ << '\n';
  out_.flush();
}

SnapshotWriter::SnapshotWriter(const std::filesystem::path& path) : out_(open_out(path)) {
  out_ << "t,mode,xi1,xi2,xi3,polarization,phase,coefficient\n";
  out_.flush();
}

void SnapshotWriter::write(const CoefficientVector& c) {
  const std::string t = format_double(c.t);
  for (std::size_t i = 0; i < c.d.size(); ++i) {
    const WaveMode& m = c.basis->modes[i];
    out_ << t << ',' << i << ',' << m.xi[0] << ',' << m.xi[1] << ',' << m.xi[2] << ',' << m.polarization << ','
         << (m.phase == Phase::cos ? "cos" : "sin") << ',' << format_double(c.d[i]) << '\n';
  }
  out_.flush();
}

std::vector<CoefficientVector> read_snapshots(const std::string& path, BasisPtr basis) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path);
  std::vector<CoefficientVector> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 8) throw ParseError(path + ": expected 8 fields", n);
    const double t = parse_field<double>(f[0], n);
    const std::array<int, 3> xi{parse_field<int>(f[2], n), parse_field<int>(f[3], n), parse_field<int>(f[4], n)};
    const int pol = parse_field<int>(f[5], n);
    if (f[6] != "cos" && f[6] != "sin") throw ParseError(path + ": bad phase '" + f[6] + "'", n);
    const Phase phase = f[6] == "cos" ? Phase::cos : Phase::sin;
    const double coeff = parse_field<double>(f[7], n);
    if (out.empty() || out.back().t != t) out.push_back(CoefficientVector::zeros(basis, t));
    if (const auto i = basis->find(xi, phase, pol)) out.back().d[*i] = coeff;
  }
  return out;
}

std::vector<RecordScalars> read_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot read " + path);
  std::vector<RecordScalars> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    const auto f = split(line);
    if (f.size() < 12) throw ParseError(path + ": expected at least 12 fields", n);
    RecordScalars s;
    double* dst[] = {&s.t,  &s.l2,        &s.h1,       &s.dissipation,      &s.j_eps_value, &s.jprime_pairing, &s.forcing_power,
                     &s.l4, &s.int_h1_sq, &s.int_forcing_dual, &s.int_forcing_power, &s.int_work};
    for (std::size_t i = 0; i < std::size(dst); ++i) *dst[i] = parse_field<double>(f[i], n);
    out.push_back(s);
  }
  return out;
}

void write_energy_report(const std::filesystem::path& path, const TrajectoryRecord& traj, const EnergyReport& rep,
                         const std::vector<EtaPoint>& eta) {
  auto out = open_out(path);
  out << "t,inequality_margin,sharp_margin,balance_residual" << (eta.empty() ? "" : ",eta,eta_residual,bracketed")
      << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.scalars[k];
    const double sharp = traj.scalars.front().l2 * traj.scalars.front().l2 + 2.0 * s.int_forcing_power -
                         s.l2 * s.l2 - s.int_h1_sq;
    out << format_double(s.t) << ',' << format_double(rep.margins[k]) << ',' << format_double(sharp) << ','
        << (k > 0 ? format_double(rep.balance_residuals[k - 1]) : "");
    if (!eta.empty())
      out << ',' << format_double(eta[k].eta) << ',' << format_double(eta[k].residual) << ','
          << (eta[k].bracketed ? "true" : "false");
    out << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void append_line(const std::filesystem::path& path, const std::string& line) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ConfigurationError("cannot write " + path.string());
  out << line << '\n';
}

}  // namespace visco
