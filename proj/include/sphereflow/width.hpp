#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sphereflow/surface.hpp"

namespace sphereflow {

/// Conformal factor e^{2 phi} on S^3 used by width experiments.
struct ConformalSpec {
  enum class Kind { None, Constant, GaussianBand };
  Kind kind = Kind::None;
  double value = 0.0;      // Constant: phi = value
  double amplitude = 0.0;  // GaussianBand: phi = amplitude exp(-(x_axis / width)^2)
  double width = 0.3;
  int axis = 0;            // coordinate index in 0..3

  void validate() const;
  std::string describe() const;
};

const char* to_string(ConformalSpec::Kind kind);

/// Round S^3 for Kind::None, otherwise the conformal model.
AmbientModel width_metric(const ConformalSpec& spec);

/// Parameters of the diffeomorphism family F = Moebius(a) o Phi, where Phi is
/// the time-1 flow of sum_k r_k A_k x + sum_j g_j grad(x^T D_j x) on S^3:
///   0..3   a    Moebius point in the open unit ball of R^4
///   4..9   r    rotation generators in the planes 01 02 03 12 13 23
///   10..11 g    gradients of x0^2 - x1^2 and x2^2 - x3^2
inline constexpr int kSweepParameters = 12;

Eigen::VectorXd sweep_lower_bounds();
Eigen::VectorXd sweep_upper_bounds();

/// F applied to one point of S^3.
Eigen::Vector4d sweep_diffeomorphism(const Eigen::VectorXd& params, const Eigen::Vector4d& x);

struct SweepOut {
  AmbientModel metric = AmbientModel::round_sphere(3);
  MeshPtr mesh;
  std::vector<double> t;  // uniform grid on [-1, 1], endpoints included
  Eigen::VectorXd params = Eigen::VectorXd::Zero(kSweepParameters);

  int num_slices() const { return static_cast<int>(t.size()); }
};

/// Horizontal spheres x_4 = t with identity parameters. n_t >= 3.
SweepOut standard_sweepout(const AmbientModel& metric, int n_t, int mesh_level);

/// Interior slice i as a surface in the sweep-out's metric. Throws
/// InvalidInput for the point slices at t = +-1.
ImmersedSurface slice_surface(const SweepOut& sweep, int i);

/// A slice is under-resolved when one of its geodesic edges is longer than
/// this (or than the longest edge of the unit reference icosphere, if larger).
inline constexpr double kMaxSliceEdge = 0.5;

/// Area per slice, 0 at the two point slices. Throws DegenerateMesh naming
/// the slice (and the face or edge) when a slice stops being a valid mesh or
/// is under-resolved.
std::vector<double> slice_areas(const SweepOut& sweep);

struct WidthTraceRow {
  int iteration = 0;
  Eigen::VectorXd params;
  double l_value = 0.0;  // best L so far
};

/// Upper bound for the width: the max slice area of one sweep-out.
struct WidthReport {
  double l_value = 0.0;
  double argmax_t = 0.0;
  Eigen::VectorXd params;
  std::vector<double> t;      // grid plus refinement points, increasing
  std::vector<double> areas;
  int evaluations = 0;
  std::vector<WidthTraceRow> trace;
  std::string metric;
};

/// Max slice area. Grid intervals are bisected (up to kRefineDepth times)
/// while some vertex moves more than kRefineDisplacement between neighbouring
/// slices, so sharp area peaks between grid points are not skipped. The
/// report lists every evaluated slice.
inline constexpr double kRefineDisplacement = 0.1;
inline constexpr int kRefineDepth = 12;

WidthReport evaluate_L(const SweepOut& sweep);

struct WidthOptions {
  int budget = 200;          // number of L evaluations
  unsigned seed = 1;         // fixes the coordinate visiting order
  double initial_step = 0.25;  // fraction of each parameter range
  double min_step = 1e-3;
  int n_t = 41;
  int mesh_level = 3;

  void validate() const;
};

/// Compass search over the parameter box starting from the standard sweep-out.
/// Candidates whose slices degenerate are rejected. The trace records the best
/// value after every evaluation and so never increases.
WidthReport optimize_width_upper(const AmbientModel& metric, const Eigen::VectorXd& lower,
                                 const Eigen::VectorXd& upper, const WidthOptions& options);

/// iteration,p0..p11,L
void write_width_trace_csv(const std::filesystem::path& path, const WidthReport& report);

}  // namespace sphereflow
