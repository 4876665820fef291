#include "sphereflow/ambient.hpp"

#include <cmath>
#include <sstream>

namespace sphereflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::DegenerateMesh: return "degenerate-mesh";
    case ErrorCode::GaugeLoss: return "gauge-loss";
    case ErrorCode::BlowUp: return "blow-up";
    case ErrorCode::SolverFailure: return "solver-failure";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

const char* to_string(AmbientKind kind) {
  switch (kind) {
    case AmbientKind::RoundSphere: return "round_sphere";
    case AmbientKind::Euclidean: return "euclidean";
    case AmbientKind::ConformalSphere3: return "conformal_sphere3";
  }
  return "unknown";
}

AmbientModel AmbientModel::round_sphere(int n) {
  if (n < 2 || n + 1 > kMaxCoords) {
    fail(ErrorCode::InvalidInput, "round sphere dimension must be in [2, " +
                                      std::to_string(kMaxCoords - 1) + "], got " +
                                      std::to_string(n));
  }
  AmbientModel m(AmbientKind::RoundSphere, n);
  m.description_ = "S^" + std::to_string(n);
  return m;
}

AmbientModel AmbientModel::euclidean(int n) {
  if (n < 2 || n > kMaxCoords) {
    fail(ErrorCode::InvalidInput, "euclidean dimension out of range: " + std::to_string(n));
  }
  AmbientModel m(AmbientKind::Euclidean, n);
  m.description_ = "R^" + std::to_string(n);
  return m;
}

AmbientModel AmbientModel::conformal_sphere3(ConformalFactor phi, std::string description) {
  if (!phi) fail(ErrorCode::InvalidInput, "conformal factor must be callable");
  AmbientModel m(AmbientKind::ConformalSphere3, 3);
  m.phi_ = std::make_shared<const ConformalFactor>(std::move(phi));
  m.description_ = description.empty() ? "conformal S^3" : std::move(description);
  return m;
}

double AmbientModel::conformal_factor(const AmbientPoint& p) const {
  return phi_ ? (*phi_)(p) : 0.0;
}

double AmbientModel::area_density(const AmbientPoint& p) const {
  return phi_ ? std::exp(2.0 * (*phi_)(p)) : 1.0;
}

double AmbientModel::inner(const AmbientPoint& p, const AmbientVector& v,
                           const AmbientVector& w) const {
  double ip = v.dot(w);
  return phi_ ? std::exp(2.0 * (*phi_)(p)) * ip : ip;
}

AmbientVector AmbientModel::tangent_part(const AmbientPoint& p, const AmbientVector& v) const {
  if (!is_spherical()) return v;
  return v - p.dot(v) * p;
}

void AmbientModel::check_point(const AmbientPoint& p) const {
  if (p.size() != coords()) {
    fail(ErrorCode::InvalidInput, "point has " + std::to_string(p.size()) +
                                      " coordinates, model expects " + std::to_string(coords()));
  }
  if (is_spherical() && std::abs(p.norm() - 1.0) > 1e-9) {
    fail(ErrorCode::InvalidInput, "sphere point is not a unit vector");
  }
}

void AmbientModel::check_tangent(const AmbientPoint& p, const AmbientVector& v) const {
  if (v.size() != coords()) fail(ErrorCode::InvalidInput, "vector dimension mismatch");
  if (is_spherical() && std::abs(p.dot(v)) > kTangencyTol * std::max(1.0, v.norm())) {
    std::ostringstream os;
    os << "vector is not tangent at p: (p, v) = " << p.dot(v);
    fail(ErrorCode::InvalidInput, os.str());
  }
}

void AmbientModel::require_geodesic_model(const char* op) const {
  if (kind_ == AmbientKind::ConformalSphere3) {
    fail(ErrorCode::InvalidInput,
         std::string(op) + " is not available for conformal metrics (area evaluation only)");
  }
}

double AmbientModel::distance(const AmbientPoint& p, const AmbientPoint& q) const {
  if (!is_spherical()) return (q - p).norm();
  // atan2 form stays accurate near 0 and pi.
  double c = p.dot(q);
  double s = (q - c * p).norm();
  return std::atan2(s, c);
}

AmbientPoint exp_map(const AmbientModel& model, const AmbientPoint& p, const AmbientVector& v) {
  model.require_geodesic_model("exp");
  model.check_point(p);
  model.check_tangent(p, v);
  if (!model.is_spherical()) return p + v;
  double r = v.norm();
  if (r == 0.0) return p;
  AmbientPoint q = std::cos(r) * p + (std::sin(r) / r) * v;
  q /= q.norm();
  return q;
}

AmbientVector log_map(const AmbientModel& model, const AmbientPoint& p, const AmbientPoint& q) {
  model.require_geodesic_model("log");
  model.check_point(p);
  model.check_point(q);
  if (!model.is_spherical()) return q - p;
  double c = p.dot(q);
  AmbientVector w = q - c * p;
  double s = w.norm();
  double d = std::atan2(s, c);
  if (d > kAntipodalCutoff) fail(ErrorCode::Domain, "log of (nearly) antipodal points");
  if (s == 0.0) return AmbientVector::Zero(p.size());
  return (d / s) * w;
}

double riemann(const AmbientModel& model, const AmbientPoint& p, const AmbientVector& x,
               const AmbientVector& y, const AmbientVector& z, const AmbientVector& w) {
  model.require_geodesic_model("riemann");
  model.check_point(p);
  model.check_tangent(p, x);
  model.check_tangent(p, y);
  model.check_tangent(p, z);
  model.check_tangent(p, w);
  if (!model.is_spherical()) return 0.0;
  return x.dot(z) * y.dot(w) - y.dot(z) * x.dot(w);
}

double sectional_curvature(const AmbientModel& model, const AmbientPoint& p,
                           const AmbientVector& x, const AmbientVector& y) {
  double det = x.squaredNorm() * y.squaredNorm() - std::pow(x.dot(y), 2);
  if (det <= 0.0) fail(ErrorCode::InvalidInput, "sectional curvature of a degenerate plane");
  return riemann(model, p, x, y, x, y) / det;
}

AmbientVector parallel_transport(const AmbientModel& model, const AmbientPoint& p,
                                 const AmbientPoint& q, const AmbientVector& v) {
  model.require_geodesic_model("parallel_transport");
  model.check_tangent(p, v);
  if (!model.is_spherical()) return v;
  AmbientVector w = log_map(model, p, q);
  double d = w.norm();
  if (d == 0.0) return v;
  AmbientVector u = w / d;
  double uv = u.dot(v);
  // Components orthogonal to the geodesic plane are fixed; the u-component
  // rotates into the geodesic's velocity at q.
  AmbientVector out = v + uv * ((std::cos(d) - 1.0) * u - std::sin(d) * p);
  return out - q.dot(out) * q;
}

AmbientVector exp_differential(const AmbientModel& model, const AmbientPoint& p,
                               const AmbientVector& w, const AmbientVector& delta) {
  if (!model.is_spherical()) return delta;
  double r = w.norm();
  if (r < 1e-12) return delta;
  AmbientVector u = w / r;
  double ud = u.dot(delta);
  AmbientVector perp = delta - ud * u;
  return ud * (-std::sin(r) * p + std::cos(r) * u) + (std::sin(r) / r) * perp;
}

}  // namespace sphereflow
