#pragma once

#include <vector>

#include "sphereflow/surface.hpp"
#include "sphereflow/trajectory.hpp"

namespace sphereflow {

/// Closed-form flow of latitude spheres in S^3 under ds/dt = 2 tan s.
struct LatitudeOracle {
  double s0 = 0.1;

  double latitude(double t) const;     // arcsin(sin s0 e^{2t})
  double area(double t) const;         // 4 pi cos^2 s(t)
  double mean_curvature(double t) const;  // tan s(t)
  double blow_up_time() const;         // -1/2 ln sin s0
  /// Time at which the latitude reaches s.
  double time_of_latitude(double s) const;
};

/// Default discretization tolerance 10 h^2, h the mean edge of the unit
/// reference icosphere of the mesh.
double epsilon_mesh(const TriangleMesh& mesh);

/// F(S) = area + sum_v A_v |H(v)|^2 - 4 pi.
double f_functional(const ImmersedSurface& surface);

struct RigidityReport {
  double f_value = 0.0;
  double umbilic_defect = 0.0;   // sum_v A_v |B°(v)|^2
  double curvature_pinch = 0.0;  // max over faces of |K(face plane) - 1|
  double epsilon = 0.0;
  /// F >= umbilic_defect / 2 - epsilon.
  bool inequality_holds() const { return f_value >= 0.5 * umbilic_defect - epsilon; }
};

RigidityReport umbilicity_and_pinch(const ImmersedSurface& surface);

struct GronwallSeries {
  std::vector<double> times;
  std::vector<double> residuals;  // dF/dt - 4 sup|H|^2 F
  std::vector<double> tolerance;  // eps_traj(t)
  double max_excess = 0.0;        // max(residual - tolerance), <= 0 when the bound holds
  bool holds() const { return max_excess <= 0.0; }
};

/// Residuals of the Gronwall differential inequality along a flow with F and
/// sup|H| diagnostics. dF/dt uses centered differences, one-sided at the ends.
/// The tolerance is eps_traj = eps (1 + 2 sup|H| + 4 sup|H|^2): the F error
/// is at most eps and enters the right side multiplied by 4 sup|H|^2.
GronwallSeries gronwall_monotonicity(const Trajectory& trajectory, double epsilon);

}  // namespace sphereflow
