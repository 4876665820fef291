#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sphereflow/jacobi.hpp"
#include "sphereflow/trajectory.hpp"

namespace sphereflow {

// ---------------------------------------------------------------------------
// Linear parabolic systems  dU/dt = L_t U + F(t)  on normal-section coefficients.

/// L_t U = a(x, t) * (-M^{-1} K U) + c(x, t) U with K a (block) stiffness and
/// M the lumped mass. `diffusion` is the principal symbol (a scalar per
/// vertex), `potential` a rank x rank matrix per vertex. Unset callbacks mean
/// a = 1, c = 0, F = 0.
struct LinearParabolicProblem {
  int rank = 1;
  SparseMatrix stiffness;
  Eigen::VectorXd mass;  // per unknown
  std::function<double(int vertex, double t)> diffusion;
  std::function<Eigen::MatrixXd(int vertex, double t)> potential;
  std::function<Eigen::VectorXd(double t)> source;  // per unknown
  bool time_independent = true;
  double ellipticity = 0.5;  // required lower bound of a
  double bound = 1e6;        // required upper bound of |a| and |c|

  int num_vertices() const { return static_cast<int>(mass.size() / rank); }
};

/// Delta on the surface acting componentwise on rank-k sections.
LinearParabolicProblem laplacian_problem(const ImmersedSurface& surface, int rank = 1);
/// L = -M^{-1} S from an assembled Jacobi matrix.
LinearParabolicProblem jacobi_problem(const JacobiMatrix& jacobi);

struct CauchyOptions {
  double step = 1e-3;
  double theta = 1.0;  // 1: backward Euler, 0.5: Crank-Nicolson
  double horizon = 1.0;
  int record_every = 1;
  double tolerance = 1e-10;  // relative linear-solve residual per step
};

/// Theta scheme for dU/dt - L_t U = F, U(0) = u0. Checks ellipticity and the
/// coefficient bound at t = 0, T/2, T. Throws SolverFailure naming the step
/// when a linear solve misses the tolerance.
Trajectory solve_cauchy(const LinearParabolicProblem& problem, const NormalSection& u0,
                        const CauchyOptions& options);

// ---------------------------------------------------------------------------
// Bundle mean curvature flow  dU/dt = (2 H(U))^sharp  over a minimal base.

enum class Scheme { Explicit, SemiImplicit };

const char* to_string(Scheme s);

struct FlowConfig {
  double step = 1e-4;
  Scheme scheme = Scheme::SemiImplicit;
  double theta = 1.0;
  double horizon = 1.0;
  /// Stop when sup|H| times the base's mean edge length exceeds this.
  double blow_up_threshold = 0.5;
  /// Sections must stay below kFocalRadius - gauge_margin.
  double gauge_margin = 1e-3;
  int record_every = 1;
  bool diagnostics = true;
  /// Stop once sup|U| reaches this (0 disables).
  double sup_norm_cap = 0.0;

  void validate() const;
};

/// Per-base precomputation for stepping: Jacobi matrix, factorized implicit
/// operator and the 2-ring fit weights used to recover graph tangent planes.
class BundleFlow {
 public:
  BundleFlow(ImmersedSurface base, NormalFrame frame, FlowConfig config);
  ~BundleFlow();
  BundleFlow(BundleFlow&&) noexcept;
  BundleFlow& operator=(BundleFlow&&) noexcept;

  const ImmersedSurface& base() const;
  const NormalFrame& frame() const;
  const FlowConfig& config() const;
  const JacobiMatrix& jacobi() const;
  /// Mean chordal edge length of the base, the scale used for blow-up detection.
  double mesh_scale() const;

  struct Velocity {
    NormalSection value;  // (2 H)^sharp in frame coordinates
    double sup_h = 0.0;   // sup |H| of the graph
  };
  /// The fiber component of 2H at the graph of u: 2H = tau + sum_a c_a
  /// d exp_p(U)[nu_a] with tau tangent to the graph, solved per vertex.
  Velocity velocity(const NormalSection& u) const;

  /// One step. Throws BlowUp, GaugeLoss or DegenerateMesh.
  NormalSection step(const NormalSection& u) const;

  /// Integrate from time start_tick * h to end_tick * h. Terminating errors
  /// end the run and are recorded in the trajectory, not thrown.
  Trajectory run(const NormalSection& u0, long long start_tick, long long end_tick) const;
  Trajectory run(const NormalSection& u0) const;
  /// As above with an explicit sup-norm cap in place of config().sup_norm_cap.
  Trajectory run(const NormalSection& u0, long long start_tick, long long end_tick,
                 double sup_norm_cap) const;

  /// Fill area, F and sup|H| for every sample (l2 and sup norms are always filled).
  void diagnose(Trajectory& trajectory) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

NormalSection step_bundle_mcf(const ImmersedSurface& base, const NormalFrame& frame,
                              const NormalSection& u, double h);
Trajectory run_mcf(const ImmersedSurface& base, const NormalFrame& frame,
                   const NormalSection& u0, const FlowConfig& config);

// ---------------------------------------------------------------------------
// Exponent fits.

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int samples = 0;
};

/// Least-squares slope of log(values) against t over t in [t_lo, t_hi].
/// Throws InvalidInput with fewer than 10 samples and Domain on non-positive values.
ExponentFit fit_decay_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               double t_lo, double t_hi);

enum class NormSelector { Sup, L2 };
ExponentFit fit_decay_exponent(const Trajectory& trajectory, NormSelector norm, double t_lo,
                               double t_hi);

// ---------------------------------------------------------------------------
// Ancient solutions by backward ladder.

struct LadderConfig {
  double delta_a = 1.0;
  double cap = 0.5;               // sup-norm ceiling that fixes b0
  double start_amplitude = 0.05;  // e^{-lambda0 a0} |V|_inf
  double tolerance = 1e-4;
  int max_rungs = 6;
  double fit_window = 2.0;        // leading-exponent window [a_K, a_K + fit_window]
  double remainder_low = 0.02;    // remainder fit uses samples with |U|_inf in [low, high]
  double remainder_high = 0.25;
  double eigen_tolerance = 1e-6;  // relative residual allowed for V

  void validate() const;
};

struct ConvergenceReport {
  double lambda0 = 0.0;
  double eigen_residual = 0.0;
  std::vector<double> rung_starts;
  std::vector<double> differences;  // differences[k-1]: rung k vs rung k-1
  bool converged = false;
  double ceiling = 0.0;
  ExponentFit leading;
  ExponentFit remainder;
  std::vector<double> remainder_times;
  std::vector<double> remainder_norms;  // |U_t - e^{-lambda0 t} V|_inf
  std::string message;
};

struct AncientSolution {
  Trajectory trajectory;
  ConvergenceReport report;
};

/// Forward-solve from U(a_k) = e^{-lambda0 a_k} V for a_k = a0 - k delta_a up
/// to a common ceiling b0 until consecutive rungs agree. Throws InvalidInput if
/// V is not an eigensection with lambda0 < 0.
AncientSolution construct_ancient(const ImmersedSurface& base, const NormalFrame& frame,
                                  const NormalSection& v, const FlowConfig& config,
                                  const LadderConfig& ladder);

// ---------------------------------------------------------------------------
// Restart consistency.

struct ExtensionReport {
  /// Restart from the state at t_split with the same step: a deterministic
  /// one-step scheme must reproduce the original run.
  double restart_difference = 0.0;
  /// Restart with half the step: measures the scheme's discretization error.
  double refined_difference = 0.0;
  int overlap_samples = 0;
};

ExtensionReport check_extension_uniqueness(const ImmersedSurface& base, const NormalFrame& frame,
                                           const NormalSection& u0, const FlowConfig& config,
                                           double t_split);

}  // namespace sphereflow
