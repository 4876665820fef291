#include "sphereflow/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sphereflow {

double LatitudeOracle::latitude(double t) const {
  double x = std::sin(s0) * std::exp(2.0 * t);
  if (x >= 1.0) fail(ErrorCode::Domain, "latitude oracle evaluated past the blow-up time");
  return std::asin(x);
}

double LatitudeOracle::area(double t) const {
  double c = std::cos(latitude(t));
  return 4.0 * std::numbers::pi * c * c;
}

double LatitudeOracle::mean_curvature(double t) const { return std::tan(latitude(t)); }

double LatitudeOracle::blow_up_time() const { return -0.5 * std::log(std::sin(s0)); }

double LatitudeOracle::time_of_latitude(double s) const {
  return 0.5 * std::log(std::sin(s) / std::sin(s0));
}

double epsilon_mesh(const TriangleMesh& mesh) {
  double h = mesh.mean_reference_edge();
  return 10.0 * h * h;
}

double f_functional(const ImmersedSurface& surface) {
  VertexGeometry geo = vertex_geometry(surface);
  auto h = mean_curvature_vector(surface);
  double willmore = 0.0;
  for (int v = 0; v < surface.num_vertices(); ++v) willmore += geo.dual_area[v] * h[v].squaredNorm();
  return area(surface) + willmore - 4.0 * std::numbers::pi;
}

RigidityReport umbilicity_and_pinch(const ImmersedSurface& surface) {
  RigidityReport r;
  r.f_value = f_functional(surface);
  r.epsilon = epsilon_mesh(surface.mesh());
  VertexGeometry geo = vertex_geometry(surface);
  SecondFundamentalData sff = second_fundamental_form(surface);
  for (int v = 0; v < surface.num_vertices(); ++v) {
    r.umbilic_defect += geo.dual_area[v] * sff.traceless_norm2(v);
  }
  const AmbientModel& m = surface.ambient();
  for (const Face& f : surface.mesh().faces()) {
    const Vec& a = surface.position(f[0]);
    const Vec& b = surface.position(f[1]);
    const Vec& c = surface.position(f[2]);
    Vec centroid = (a + b + c) / 3.0;
    if (m.is_spherical()) centroid.normalize();
    Vec e1 = m.tangent_part(centroid, b - a);
    Vec e2 = m.tangent_part(centroid, c - a);
    double k = sectional_curvature(m, centroid, e1, e2);
    r.curvature_pinch = std::max(r.curvature_pinch, std::abs(k - 1.0));
  }
  return r;
}

GronwallSeries gronwall_monotonicity(const Trajectory& trajectory, double epsilon) {
  const std::size_t n = trajectory.size();
  if (n < 3) fail(ErrorCode::InvalidInput, "Gronwall check needs at least three samples");
  const auto& t = trajectory.times;
  const auto& f = trajectory.f_value;
  const auto& h = trajectory.sup_h;
  GronwallSeries out;
  out.max_excess = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(f[i]) || !std::isfinite(h[i])) {
      fail(ErrorCode::InvalidInput, "trajectory lacks F / sup|H| diagnostics");
    }
    std::size_t lo = i == 0 ? 0 : i - 1;
    std::size_t hi = i + 1 == n ? i : i + 1;
    double dfdt = (f[hi] - f[lo]) / (t[hi] - t[lo]);
    double res = dfdt - 4.0 * h[i] * h[i] * f[i];
    double tol = epsilon * (1.0 + 2.0 * h[i] + 4.0 * h[i] * h[i]);
    out.times.push_back(t[i]);
    out.residuals.push_back(res);
    out.tolerance.push_back(tol);
    out.max_excess = std::max(out.max_excess, res - tol);
  }
  return out;
}

}  // namespace sphereflow
