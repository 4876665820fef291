#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "sphereflow/surface.hpp"

namespace sphereflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete Jacobi operator of a (nearly) minimal surface, stored in
/// stiffness form. With S the symmetric stiffness and M the lumped mass,
///
///   Q(X, Y) = X^T S Y            (index form, = second variation of area)
///   L X     = -M^{-1} S X        (L = Delta^perp + (R(e_i, .)e_i)^perp + B-contraction)
///
/// so that L V = -lambda V is the generalized problem S V = lambda M V. On the
/// equator of S^n, S is n-2 copies of the cotan stiffness minus 2 M.
struct JacobiMatrix {
  int rank = 0;
  int num_vertices = 0;
  SparseMatrix stiffness;
  Eigen::VectorXd mass;  // per unknown (vertex area repeated rank times)
  double max_mean_curvature = 0.0;
  std::vector<std::string> warnings;

  Eigen::Index size() const { return stiffness.rows(); }
  /// L U = -M^{-1} S U.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const;
};

/// Sup |H| above which the base is flagged as non-minimal.
inline constexpr double kMinimalityThreshold = 0.05;

JacobiMatrix assemble_jacobi(const ImmersedSurface& base, const NormalFrame& frame);

/// Scalar cotan stiffness and lumped mass on the surface (for functions rather
/// than sections); used for the Laplacian in linear parabolic problems.
struct ScalarOperators {
  SparseMatrix stiffness;  // K with Delta = -M^{-1} K
  Eigen::VectorXd mass;
};
ScalarOperators scalar_operators(const ImmersedSurface& surface);

/// Discrete connection: orthogonal k x k matrix taking frame coordinates at
/// vertex b to frame coordinates at vertex a via ambient parallel transport.
Eigen::MatrixXd frame_transport(const ImmersedSurface& base, const NormalFrame& frame, int a,
                                int b);

struct SpectrumOptions {
  double tolerance = 1e-10;
  int max_iterations = 2000;
  unsigned seed = 20240531u;
};

struct Spectrum {
  std::vector<double> eigenvalues;
  std::vector<NormalSection> sections;  // mass-orthonormal
  std::vector<double> residuals;        // relative residual per eigenpair
  int iterations = 0;
};

/// k smallest eigenpairs of S V = lambda M V by shift-invert subspace
/// iteration with Rayleigh-Ritz. Throws SolverFailure with the residuals if
/// it does not converge.
Spectrum eigen_spectrum(const JacobiMatrix& jacobi, int k, const SpectrumOptions& options = {});

/// Q(X, Y) = X^T S Y.
double index_form(const JacobiMatrix& jacobi, const NormalSection& x, const NormalSection& y);

/// Mass inner product <X, Y>_M.
double mass_inner(const JacobiMatrix& jacobi, const NormalSection& x, const NormalSection& y);

/// CSV with columns index,eigenvalue,residual.
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum);

}  // namespace sphereflow
