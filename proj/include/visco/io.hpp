#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "visco/diagnostics.hpp"
#include "visco/spectral_basis.hpp"
#include "visco/time_integrator.hpp"

namespace visco {

/// trajectory.csv, one row per record, flushed as it is written so a failed
/// run keeps everything up to the failure.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(const std::filesystem::path& path);
  void write(const RecordScalars& s);

  static std::string header();

 private:
  std::ofstream out_;
};

/// snapshots.csv in long format:
///   t,mode,xi1,xi2,xi3,polarization,phase,coefficient
/// Coefficients are written as shortest round-trip decimals, so reading the
/// file back reproduces the states bit for bit.
class SnapshotWriter {
 public:
  explicit SnapshotWriter(const std::filesystem::path& path);
  void write(const CoefficientVector& c);

 private:
  std::ofstream out_;
};

/// States of a snapshots.csv, one per distinct t in file order, expressed in
/// `basis`. Modes absent from `basis` are dropped. Throws ParseError.
std::vector<CoefficientVector> read_snapshots(const std::string& path, BasisPtr basis);

/// Parses a trajectory.csv back into scalars. Throws ParseError.
std::vector<RecordScalars> read_trajectory(const std::string& path);

/// energy_report.csv: t, inequality margin, sharp margin, balance residual of
/// the interval ending at t, and eta when given.
void write_energy_report(const std::filesystem::path& path, const TrajectoryRecord& traj, const EnergyReport& rep,
                         const std::vector<EtaPoint>& eta = {});

/// Writes `text` to `path`, replacing any previous content.
void write_text(const std::filesystem::path& path, const std::string& text);

/// Appends one line to `path`.
void append_line(const std::filesystem::path& path, const std::string& line);

}  // namespace visco
