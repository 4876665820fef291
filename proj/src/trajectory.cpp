#include "sphereflow/trajectory.hpp"

#include <algorithm>
#include <fstream>

#include "sphereflow/format.hpp"

namespace sphereflow {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::GaugeLoss: return "gauge-loss";
    case Termination::BlowUp: return "blow-up";
    case Termination::DegenerateMesh: return "degenerate-mesh";
    case Termination::SupNormCap: return "sup-norm-cap";
  }
  return "unknown";
}

long Trajectory::index_of_tick(long long tick) const {
  auto it = std::lower_bound(ticks.begin(), ticks.end(), tick);
  if (it == ticks.end() || *it != tick) return -1;
  return static_cast<long>(it - ticks.begin());
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << "t,area,F,sup_H,l2_norm,sup_norm\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    out << format_double(tr.times[i]) << ',' << format_double(tr.area[i]) << ','
        << format_double(tr.f_value[i]) << ',' << format_double(tr.sup_h[i]) << ','
        << format_double(tr.l2_norm[i]) << ',' << format_double(tr.sup_norm[i]) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

void write_section_snapshots(const std::filesystem::path& path, const Trajectory& tr,
                             int every) {
  if (every < 1) fail(ErrorCode::InvalidInput, "snapshot stride must be positive");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (i % every != 0 && i + 1 != tr.size()) continue;
    const NormalSection& s = tr.states[i];
    out << "t " << format_double(tr.times[i]) << '\n';
    for (int v = 0; v < s.num_vertices(); ++v) {
      out << v;
      for (int a = 0; a < s.rank; ++a) out << ' ' << format_double(s.at(v)(a));
      out << '\n';
    }
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace sphereflow
