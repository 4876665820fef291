#pragma once

#include <memory>
#include <vector>

#include "sphereflow/flow.hpp"

namespace sphereflow {

/// Discrete parabolic Hoelder norms of a section sampled on the mesh vertices
/// at a uniform time grid. All seminorms are maxima of difference quotients
/// over sampled pairs, hence lower bounds of their continuum counterparts:
///
/// * space pairs: vertices within each other's 2-ring, compared after
///   parallel transport of the normal frame (and of the tangent frame for
///   gradients), distance = ambient geodesic distance;
/// * time pairs: index separations 1, 2, 4, ... plus the two end points;
/// * gradient: least squares over the transported 1-ring;
/// * second derivative: the discrete connection Laplacian;
/// * time derivative: centered differences, one-sided at the ends.
///
/// The combined 2,alpha norm also carries the 0,alpha seminorms of u itself,
/// so that |u|_{2,alpha} >= |u|_{0,alpha} >= |u|_0 holds on every grid.
struct HolderNorms {
  double alpha = 0.5;
  double sup = 0.0;
  double sup_grad = 0.0;
  double sup_hess = 0.0;
  double sup_dt = 0.0;
  double space_u = 0.0;     // [u]_{alpha,x}
  double space_grad = 0.0;  // [grad u]_{alpha,x}
  double space_hess = 0.0;  // [grad^2 u]_{alpha,x}
  double space_dt = 0.0;    // [du/dt]_{alpha,x}
  double time_u = 0.0;      // [u]_{alpha/2,t}
  double time_u_half = 0.0; // [u]_{(1+alpha)/2,t}
  double time_grad = 0.0;   // [grad u]_{(1+alpha)/2,t}
  double time_grad_half = 0.0;  // [grad u]_{alpha/2,t}
  double time_hess = 0.0;   // [grad^2 u]_{alpha/2,t}
  double time_dt = 0.0;     // [du/dt]_{alpha/2,t}
  double l2 = 0.0;          // L^2 over space-time (trapezoid in t)

  double norm_0_alpha() const { return sup + space_u + time_u; }
  double seminorm_2_alpha() const {
    return space_hess + space_dt + time_grad + time_hess + time_dt;
  }
  double norm_2_alpha() const {
    return sup + sup_grad + sup_hess + sup_dt + space_u + time_u + seminorm_2_alpha();
  }
  double norm_1_alpha() const { return sup + sup_grad + space_grad + time_u_half + time_grad_half; }
  double seminorm_1_alpha() const { return space_grad + time_u_half + time_grad_half; }
  double seminorm_0_alpha() const { return space_u + time_u; }
};

/// Precomputed pair lists, transports and gradient stencils for one base.
class HolderGrid {
 public:
  HolderGrid(const ImmersedSurface& base, const NormalFrame& frame);
  ~HolderGrid();
  HolderGrid(HolderGrid&&) noexcept;
  HolderGrid& operator=(HolderGrid&&) noexcept;

  /// Throws InvalidInput on empty or mismatched samples and Domain for alpha
  /// outside (0, 1). A single time sample gives the spatial norms only.
  HolderNorms norms(const std::vector<double>& times, const std::vector<NormalSection>& values,
                    double alpha) const;
  HolderNorms norms(const Trajectory& trajectory, double alpha) const;
  /// Time-independent section: |u|_{0,alpha}, |u|_{2,alpha} via the same fields.
  HolderNorms spatial_norms(const NormalSection& u, double alpha) const;

  /// Mass-weighted L^2 norm of a single section.
  double l2(const NormalSection& u) const;
  double total_area() const;
  const ImmersedSurface& base() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

HolderNorms holder_norms(const ImmersedSurface& base, const NormalFrame& frame,
                         const Trajectory& trajectory, double alpha = 0.5);

// ---------------------------------------------------------------------------

enum class SchauderCase {
  DecayingMode,     // L = Delta - 1, F = 0, U0 = a degree-2 harmonic
  PeriodicForcing,  // L = Delta - 1, U0 = 0, F = sin(2 pi t) times a degree-2 harmonic
};

const char* to_string(SchauderCase c);

struct SchauderOptions {
  double alpha = 0.5;
  double step = 5e-3;
  double theta = 1.0;
};

struct SchauderRow {
  double horizon = 0.0;
  double u_norm = 0.0;   // |U|_{2,alpha} on [0, T]
  double f_norm = 0.0;   // |F|_{0,alpha} on [0, T]
  double u0_norm = 0.0;  // |U0|_{2,alpha}
  double l2 = 0.0;       // |U|_{L^2} on [0, T]
  double ratio = 0.0;
};

struct SchauderTable {
  SchauderCase family = SchauderCase::DecayingMode;
  std::vector<SchauderRow> rows;
  double variation = 0.0;      // max ratio / min ratio
  bool monotone_growth = false;  // ratios strictly increasing in T
};

/// Solves dU/dt - L U = F on [0, T] for each horizon (increasing) and tabulates
/// |U|_{2,alpha} / (|F|_{0,alpha} + |U0|_{2,alpha} + |U|_{L^2}).
SchauderTable schauder_ratio_experiment(const ImmersedSurface& surface, SchauderCase family,
                                        const std::vector<double>& horizons,
                                        const SchauderOptions& options = {});

// ---------------------------------------------------------------------------

struct SectionField {
  std::vector<double> times;
  std::vector<NormalSection> values;
};

struct InterpolationReport {
  int l = 0;
  double alpha = 0.0;
  int m = 0;
  double beta = 0.0;
  std::vector<double> epsilons;
  /// Smallest C with |u|_{m,beta} <= C |u|_{L^2} + eps [u]_{l,alpha} over the probes.
  std::vector<double> constants;
  bool finite = true;
  bool nonincreasing = true;
};

/// Throws InvalidInput unless l + alpha > m + beta with l, m in {0, 1, 2}.
InterpolationReport interpolation_check(const HolderGrid& grid,
                                        const std::vector<SectionField>& probes, int l,
                                        double alpha, int m, double beta,
                                        const std::vector<double>& epsilons);

}  // namespace sphereflow
