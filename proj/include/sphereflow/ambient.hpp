#pragma once

#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

#include "sphereflow/error.hpp"

namespace sphereflow {

/// Upper bound on the number of extrinsic coordinates. Round spheres S^n use
/// n + 1 coordinates, so n <= 7 is supported. Fixed capacity keeps per-vertex
/// vectors off the heap.
inline constexpr int kMaxCoords = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxCoords, 1>;
using SmallMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxCoords, kMaxCoords>;

using AmbientPoint = Vec;
using AmbientVector = Vec;

enum class AmbientKind { RoundSphere, Euclidean, ConformalSphere3 };

const char* to_string(AmbientKind kind);

/// Scalar field phi on S^3 for metrics e^{2 phi} g_{S^3}; evaluated at unit vectors of R^4.
using ConformalFactor = std::function<double(const AmbientPoint&)>;

/// Closed-form model manifold.
///
/// Curvature convention: riemann(p, x, y, z, w) = (R(x, y) z, w) with
/// (R(x, y) z, w) = K ((x, z)(y, w) - (y, z)(x, w)), so that (R(e, v) e, v) = +1
/// for orthonormal e, v on the unit sphere.
///
/// ConformalSphere3 only supports metric and area evaluation; geodesic and
/// curvature queries throw InvalidInput.
class AmbientModel {
 public:
  static AmbientModel round_sphere(int n);
  static AmbientModel euclidean(int n);
  static AmbientModel conformal_sphere3(ConformalFactor phi, std::string description = {});

  AmbientKind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// Number of extrinsic coordinates used to represent points.
  int coords() const { return kind_ == AmbientKind::Euclidean ? dim_ : dim_ + 1; }
  bool is_spherical() const { return kind_ != AmbientKind::Euclidean; }
  const std::string& description() const { return description_; }

  /// e^{2 phi(p)} for conformal metrics, 1 otherwise.
  double area_density(const AmbientPoint& p) const;
  double conformal_factor(const AmbientPoint& p) const;

  /// Metric inner product of tangent vectors at p.
  double inner(const AmbientPoint& p, const AmbientVector& v, const AmbientVector& w) const;

  /// Project an arbitrary coordinate vector onto T_p M.
  AmbientVector tangent_part(const AmbientPoint& p, const AmbientVector& v) const;

  /// Geodesic distance; closed form for the round and flat models.
  double distance(const AmbientPoint& p, const AmbientPoint& q) const;

  void check_point(const AmbientPoint& p) const;
  void check_tangent(const AmbientPoint& p, const AmbientVector& v) const;

 private:
  AmbientModel(AmbientKind kind, int dim) : kind_(kind), dim_(dim) {}
  void require_geodesic_model(const char* op) const;

  friend AmbientPoint exp_map(const AmbientModel&, const AmbientPoint&, const AmbientVector&);
  friend AmbientVector log_map(const AmbientModel&, const AmbientPoint&, const AmbientPoint&);
  friend double riemann(const AmbientModel&, const AmbientPoint&, const AmbientVector&,
                        const AmbientVector&, const AmbientVector&, const AmbientVector&);
  friend AmbientVector parallel_transport(const AmbientModel&, const AmbientPoint&,
                                          const AmbientPoint&, const AmbientVector&);

  AmbientKind kind_;
  int dim_;
  std::shared_ptr<const ConformalFactor> phi_;
  std::string description_;
};

/// Distances beyond this are treated as antipodal on round spheres.
inline constexpr double kAntipodalCutoff = 3.141592653589793 - 1e-6;
/// Tolerance for (p, v) = 0 tangency checks.
inline constexpr double kTangencyTol = 1e-8;

AmbientPoint exp_map(const AmbientModel& model, const AmbientPoint& p, const AmbientVector& v);
AmbientVector log_map(const AmbientModel& model, const AmbientPoint& p, const AmbientPoint& q);
double riemann(const AmbientModel& model, const AmbientPoint& p, const AmbientVector& x,
               const AmbientVector& y, const AmbientVector& z, const AmbientVector& w);
/// Sectional curvature of span(x, y) at p.
double sectional_curvature(const AmbientModel& model, const AmbientPoint& p,
                           const AmbientVector& x, const AmbientVector& y);
/// Transport along the minimizing geodesic from p to q.
AmbientVector parallel_transport(const AmbientModel& model, const AmbientPoint& p,
                                 const AmbientPoint& q, const AmbientVector& v);

/// Differential of exp_p at w applied to delta, d/de exp_p(w + e delta) at e = 0.
AmbientVector exp_differential(const AmbientModel& model, const AmbientPoint& p,
                               const AmbientVector& w, const AmbientVector& delta);

}  // namespace sphereflow
