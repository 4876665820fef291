#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sphereflow/surface.hpp"

namespace sphereflow {

enum class Termination { Horizon, GaugeLoss, BlowUp, DegenerateMesh, SupNormCap };

const char* to_string(Termination t);

/// Time-indexed sections with per-sample diagnostics. Times are tick * step
/// for integer ticks, so trajectories started at different grid points can be
/// compared sample by sample. Diagnostics that do not apply (area of a linear
/// solve, say) are NaN.
struct Trajectory {
  int rank = 0;
  double step = 0.0;
  std::vector<long long> ticks;
  std::vector<double> times;
  std::vector<NormalSection> states;
  std::vector<double> area;
  std::vector<double> f_value;
  std::vector<double> sup_h;
  std::vector<double> l2_norm;
  std::vector<double> sup_norm;
  Termination termination = Termination::Horizon;
  std::string message;

  std::size_t size() const { return times.size(); }
  /// Index of the sample at `tick`, or -1.
  long index_of_tick(long long tick) const;
};

/// Columns t,area,F,sup_H,l2_norm,sup_norm.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);

/// One block per sample: "t <time>" followed by "<vertex> <coefficients...>" lines.
void write_section_snapshots(const std::filesystem::path& path, const Trajectory& trajectory,
                             int every = 1);

}  // namespace sphereflow
