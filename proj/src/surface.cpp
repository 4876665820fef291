#include "sphereflow/surface.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace sphereflow {

namespace {

double cotangent(const Vec& u, const Vec& v) {
  double uv = u.dot(v);
  double cross2 = u.squaredNorm() * v.squaredNorm() - uv * uv;
  return uv / std::sqrt(std::max(cross2, 0.0));
}

double angle_between(const Vec& u, const Vec& v) {
  double uv = u.dot(v);
  double cross = std::sqrt(std::max(u.squaredNorm() * v.squaredNorm() - uv * uv, 0.0));
  return std::atan2(cross, uv);
}

// Gram-Schmidt of `v` against the columns of `basis`; returns the residual.
Vec orthogonalize(Vec v, const SmallMat& basis) {
  for (int c = 0; c < basis.cols(); ++c) v -= basis.col(c).dot(v) * basis.col(c);
  for (int c = 0; c < basis.cols(); ++c) v -= basis.col(c).dot(v) * basis.col(c);
  return v;
}

SmallMat append_column(const SmallMat& m, const Vec& v) {
  SmallMat out(m.rows(), m.cols() + 1);
  out.leftCols(m.cols()) = m;
  out.col(m.cols()) = v;
  return out;
}

}  // namespace

ImmersedSurface::ImmersedSurface(MeshPtr mesh, std::vector<AmbientPoint> positions,
                                 AmbientModel ambient)
    : mesh_(std::move(mesh)), positions_(std::move(positions)), ambient_(std::move(ambient)) {
  if (!mesh_) fail(ErrorCode::InvalidInput, "surface without mesh");
  if (static_cast<int>(positions_.size()) != mesh_->num_vertices()) {
    fail(ErrorCode::InvalidInput, "position count does not match mesh vertex count");
  }
  for (const auto& p : positions_) ambient_.check_point(p);
}

Eigen::MatrixXd ImmersedSurface::position_matrix() const {
  Eigen::MatrixXd m(num_vertices(), coords());
  for (int v = 0; v < num_vertices(); ++v) m.row(v) = positions_[v].transpose();
  return m;
}

ImmersedSurface embed_latitude(const MeshPtr& mesh, const AmbientModel& ambient, double s) {
  if (!ambient.is_spherical()) fail(ErrorCode::InvalidInput, "latitude spheres need S^n");
  if (ambient.dim() < 3) fail(ErrorCode::InvalidInput, "latitude spheres need n >= 3");
  if (!(s >= 0.0 && s < std::numbers::pi / 2)) {
    fail(ErrorCode::Domain, "latitude s must lie in [0, pi/2)");
  }
  std::vector<AmbientPoint> pos;
  pos.reserve(mesh->num_vertices());
  for (const auto& r : mesh->reference()) {
    AmbientPoint p = AmbientPoint::Zero(ambient.coords());
    p.head<3>() = std::cos(s) * r;
    p(3) = std::sin(s);
    p /= p.norm();
    pos.push_back(p);
  }
  return ImmersedSurface(mesh, std::move(pos), ambient);
}

ImmersedSurface embed_latitude(const MeshPtr& mesh, int n, double s) {
  return embed_latitude(mesh, AmbientModel::round_sphere(n), s);
}

ImmersedSurface embed_round_sphere(const MeshPtr& mesh, double radius, int n) {
  if (!(radius > 0.0)) fail(ErrorCode::Domain, "radius must be positive");
  AmbientModel ambient = AmbientModel::euclidean(n);
  if (n < 3) fail(ErrorCode::InvalidInput, "need at least three coordinates");
  std::vector<AmbientPoint> pos;
  for (const auto& r : mesh->reference()) {
    AmbientPoint p = AmbientPoint::Zero(n);
    p.head<3>() = radius * r;
    pos.push_back(p);
  }
  return ImmersedSurface(mesh, std::move(pos), ambient);
}

VertexGeometry vertex_geometry(const ImmersedSurface& surface) {
  const TriangleMesh& mesh = surface.mesh();
  VertexGeometry g;
  g.dual_area.assign(mesh.num_vertices(), 0.0);
  g.cot_weight.assign(mesh.num_edges(), 0.0);
  // Per face, cot of the angle opposite each edge, keyed through the edge list.
  std::vector<std::array<double, 3>> face_cot(mesh.num_faces());
  const auto& faces = mesh.faces();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Vec& a = surface.position(faces[f][0]);
    const Vec& b = surface.position(faces[f][1]);
    const Vec& c = surface.position(faces[f][2]);
    const Vec* x[3] = {&a, &b, &c};
    double ang[3];
    double cot[3];
    for (int k = 0; k < 3; ++k) {
      Vec u = *x[(k + 1) % 3] - *x[k];
      Vec v = *x[(k + 2) % 3] - *x[k];
      ang[k] = angle_between(u, v);
      cot[k] = cotangent(u, v);
      g.min_angle_deg = std::min(g.min_angle_deg, ang[k] * 180.0 / std::numbers::pi);
    }
    if (std::min({ang[0], ang[1], ang[2]}) * 180.0 / std::numbers::pi < kMinFaceAngleDeg) {
      std::ostringstream os;
      os << "degenerate face " << f << ": angle below " << kMinFaceAngleDeg << " degrees";
      fail(ErrorCode::DegenerateMesh, os.str());
    }
    face_cot[f] = {cot[0], cot[1], cot[2]};
    Vec ab = b - a;
    Vec ac = c - a;
    double area2 = ab.squaredNorm() * ac.squaredNorm() - std::pow(ab.dot(ac), 2);
    double tri = 0.5 * std::sqrt(std::max(area2, 0.0));
    int obtuse = -1;
    for (int k = 0; k < 3; ++k)
      if (ang[k] > std::numbers::pi / 2) obtuse = k;
    if (obtuse < 0) {
      // Circumcentric (Voronoi) share of vertex k: edges k-(k+1) and k-(k+2)
      // weighted by the cot of the opposite angles.
      for (int k = 0; k < 3; ++k) {
        int k1 = (k + 1) % 3;
        int k2 = (k + 2) % 3;
        double e1 = (*x[k1] - *x[k]).squaredNorm();
        double e2 = (*x[k2] - *x[k]).squaredNorm();
        g.dual_area[faces[f][k]] += (e1 * cot[k2] + e2 * cot[k1]) / 8.0;
      }
    } else {
      for (int k = 0; k < 3; ++k) g.dual_area[faces[f][k]] += (k == obtuse ? tri / 2 : tri / 4);
    }
  }
  double edge_sum = 0.0;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    edge_sum += (surface.position(edge.a) - surface.position(edge.b)).norm();
    for (int f : {edge.left, edge.right}) {
      for (int k = 0; k < 3; ++k) {
        int v = faces[f][k];
        if (v != edge.a && v != edge.b) g.cot_weight[e] += 0.5 * face_cot[f][k];
      }
    }
  }
  g.mean_edge = edge_sum / mesh.num_edges();
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (!(g.dual_area[v] > 0.0)) {
      fail(ErrorCode::DegenerateMesh, "vertex " + std::to_string(v) + " has a degenerate star");
    }
  }
  return g;
}

double face_area(const ImmersedSurface& surface, int face) {
  const Face& f = surface.mesh().faces()[face];
  const Vec& a = surface.position(f[0]);
  const Vec& b = surface.position(f[1]);
  const Vec& c = surface.position(f[2]);
  for (int k = 0; k < 3; ++k) {
    const Vec& x = surface.position(f[k]);
    double ang = angle_between(surface.position(f[(k + 1) % 3]) - x,
                               surface.position(f[(k + 2) % 3]) - x);
    if (ang * 180.0 / std::numbers::pi < kMinFaceAngleDeg) {
      fail(ErrorCode::DegenerateMesh, "degenerate face " + std::to_string(face));
    }
  }
  const AmbientModel& m = surface.ambient();
  if (!m.is_spherical()) {
    Vec ab = b - a;
    Vec ac = c - a;
    return 0.5 * std::sqrt(std::max(
                     ab.squaredNorm() * ac.squaredNorm() - std::pow(ab.dot(ac), 2), 0.0));
  }
  // Spherical excess of the geodesic triangle: tan(E/2) = |[a,b,c]| / (1 + ab + bc + ca),
  // with the triple product taken as the volume of the spanned parallelepiped.
  Eigen::Matrix3d gram;
  gram << a.dot(a), a.dot(b), a.dot(c), b.dot(a), b.dot(b), b.dot(c), c.dot(a), c.dot(b),
      c.dot(c);
  double vol = std::sqrt(std::max(gram.determinant(), 0.0));
  double excess = 2.0 * std::atan2(vol, 1.0 + a.dot(b) + b.dot(c) + c.dot(a));
  if (m.kind() == AmbientKind::ConformalSphere3) {
    Vec centroid = (a + b + c).normalized();
    excess *= m.area_density(centroid);
  }
  return excess;
}

double area(const ImmersedSurface& surface) {
  double total = 0.0;
  for (int f = 0; f < surface.mesh().num_faces(); ++f) total += face_area(surface, f);
  return total;
}

std::vector<SmallMat> tangent_planes(const ImmersedSurface& surface) {
  const TriangleMesh& mesh = surface.mesh();
  const AmbientModel& m = surface.ambient();
  const int d = surface.coords();
  std::vector<SmallMat> out(mesh.num_vertices());
  Eigen::SelfAdjointEigenSolver<SmallMat> eig;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec& p = surface.position(v);
    SmallMat cov = SmallMat::Zero(d, d);
    for (int w : mesh.one_ring(v)) {
      Vec z = m.tangent_part(p, surface.position(w) - p);
      cov.noalias() += z * z.transpose();
    }
    eig.compute(cov);
    out[v] = eig.eigenvectors().rightCols(2);
  }
  return out;
}

std::vector<AmbientVector> mean_curvature_vector_raw(const ImmersedSurface& surface,
                                                     const VertexGeometry& geometry) {
  const TriangleMesh& mesh = surface.mesh();
  const AmbientModel& m = surface.ambient();
  if (m.kind() == AmbientKind::ConformalSphere3) {
    fail(ErrorCode::InvalidInput, "mean curvature is not available for conformal metrics");
  }
  const int d = surface.coords();
  std::vector<AmbientVector> lap(mesh.num_vertices(), AmbientVector::Zero(d));
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    Vec diff = geometry.cot_weight[e] * (surface.position(edge.b) - surface.position(edge.a));
    lap[edge.a] += diff;
    lap[edge.b] -= diff;
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    // Delta x = 2 H_flat with Delta x_v = (1 / A_v) sum_w w_vw (x_w - x_v).
    AmbientVector h = lap[v] / (2.0 * geometry.dual_area[v]);
    if (m.is_spherical()) {
      const Vec& p = surface.position(v);
      h += p;
      h -= p.dot(h) * p;
    }
    lap[v] = h;
  }
  return lap;
}

std::vector<AmbientVector> mean_curvature_vector(const ImmersedSurface& surface) {
  VertexGeometry geo = vertex_geometry(surface);
  std::vector<AmbientVector> h = mean_curvature_vector_raw(surface, geo);
  std::vector<SmallMat> tan = tangent_planes(surface);
  for (int v = 0; v < surface.num_vertices(); ++v) h[v] = orthogonalize(h[v], tan[v]);
  return h;
}

double gauss_bonnet_defect(const ImmersedSurface& surface) {
  const TriangleMesh& mesh = surface.mesh();
  std::vector<double> angle_sum(mesh.num_vertices(), 0.0);
  for (const Face& f : mesh.faces()) {
    for (int k = 0; k < 3; ++k) {
      const Vec& x = surface.position(f[k]);
      angle_sum[f[k]] += angle_between(surface.position(f[(k + 1) % 3]) - x,
                                       surface.position(f[(k + 2) % 3]) - x);
    }
  }
  double total = 0.0;
  for (double s : angle_sum) total += 2.0 * std::numbers::pi - s;
  return total - 4.0 * std::numbers::pi;
}

double NormalSection::sup_norm() const {
  double s = 0.0;
  for (int v = 0; v < num_vertices(); ++v) s = std::max(s, at(v).norm());
  return s;
}

NormalFrame normal_frame(const ImmersedSurface& surface) {
  const AmbientModel& m = surface.ambient();
  if (m.kind() == AmbientKind::ConformalSphere3) {
    fail(ErrorCode::InvalidInput, "normal frames are not available for conformal metrics");
  }
  const int d = surface.coords();
  NormalFrame frame;
  frame.rank = m.dim() - 2;
  if (frame.rank < 1) fail(ErrorCode::InvalidInput, "normal bundle has rank 0");
  frame.tangents = tangent_planes(surface);
  const int nv = surface.num_vertices();
  frame.normals.resize(nv);

  if (!m.is_spherical()) {
    if (d != 3) fail(ErrorCode::InvalidInput, "euclidean frames are implemented for R^3 only");
    // Oriented normal: sign fixed by the area-weighted face normals of the star.
    std::vector<Eigen::Vector3d> face_normal_sum(nv, Eigen::Vector3d::Zero());
    for (const Face& f : surface.mesh().faces()) {
      Eigen::Vector3d a = surface.position(f[0]).head<3>();
      Eigen::Vector3d b = surface.position(f[1]).head<3>();
      Eigen::Vector3d c = surface.position(f[2]).head<3>();
      Eigen::Vector3d n = (b - a).cross(c - a);
      for (int k = 0; k < 3; ++k) face_normal_sum[f[k]] += n;
    }
    for (int v = 0; v < nv; ++v) {
      Eigen::Vector3d t1 = frame.tangents[v].col(0).head<3>();
      Eigen::Vector3d t2 = frame.tangents[v].col(1).head<3>();
      Eigen::Vector3d n = t1.cross(t2).normalized();
      if (n.dot(face_normal_sum[v]) < 0) n = -n;
      frame.normals[v] = SmallMat(3, 1);
      frame.normals[v].col(0) = n;
    }
    return frame;
  }

  for (int v = 0; v < nv; ++v) {
    const Vec& p = surface.position(v);
    SmallMat basis(d, 3);
    basis.col(0) = p;
    basis.rightCols(2) = frame.tangents[v];
    SmallMat normals(d, 0);
    for (int a = 0; a < frame.rank; ++a) {
      Vec e = Vec::Zero(d);
      e(3 + a) = 1.0;
      Vec r = orthogonalize(orthogonalize(e, basis), normals);
      if (r.norm() < 0.1) {
        fail(ErrorCode::InvalidInput, "normal frame construction failed at vertex " +
                                          std::to_string(v) +
                                          ": surface is not transverse to the complement plane");
      }
      normals = append_column(normals, r.normalized());
    }
    frame.normals[v] = normals;
  }
  return frame;
}

NormalSection constant_section(const NormalFrame& frame, int component, double c) {
  if (component < 0 || component >= frame.rank) {
    fail(ErrorCode::InvalidInput, "frame component out of range");
  }
  NormalSection s(frame.rank, frame.num_vertices());
  for (int v = 0; v < frame.num_vertices(); ++v) s.at(v)(component) = c;
  return s;
}

ImmersedSurface graph_immersion(const ImmersedSurface& base, const NormalFrame& frame,
                                const NormalSection& section, double margin) {
  if (section.rank != frame.rank || section.num_vertices() != base.num_vertices() ||
      frame.num_vertices() != base.num_vertices()) {
    fail(ErrorCode::InvalidInput, "section, frame and base sizes do not match");
  }
  const AmbientModel& m = base.ambient();
  std::vector<AmbientPoint> pos(base.num_vertices());
  for (int v = 0; v < base.num_vertices(); ++v) {
    Vec w = frame.normals[v] * section.at(v);
    if (m.is_spherical() && w.norm() >= kFocalRadius - margin) {
      std::ostringstream os;
      os << "section length " << w.norm() << " at vertex " << v
         << " reaches the focal threshold";
      fail(ErrorCode::GaugeLoss, os.str());
    }
    pos[v] = exp_map(m, base.position(v), m.tangent_part(base.position(v), w));
  }
  return ImmersedSurface(base.mesh_ptr(), std::move(pos), m);
}

NormalSection extract_section(const ImmersedSurface& surface, const ImmersedSurface& base,
                              const NormalFrame& frame, double margin,
                              double* max_tangential) {
  if (surface.num_vertices() != base.num_vertices() ||
      frame.num_vertices() != base.num_vertices()) {
    fail(ErrorCode::InvalidInput, "surface, base and frame sizes do not match");
  }
  const AmbientModel& m = base.ambient();
  NormalSection s(frame.rank, base.num_vertices());
  double worst = 0.0;
  for (int v = 0; v < base.num_vertices(); ++v) {
    Vec w = log_map(m, base.position(v), surface.position(v));
    if (m.is_spherical() && w.norm() >= kFocalRadius - margin) {
      fail(ErrorCode::GaugeLoss,
           "surface leaves the tubular neighborhood at vertex " + std::to_string(v));
    }
    s.at(v) = frame.normals[v].transpose() * w;
    worst = std::max(worst, (w - frame.normals[v] * s.at(v)).norm());
  }
  if (max_tangential) *max_tangential = worst;
  return s;
}

double SecondFundamentalData::norm2(int v) const {
  double s = 0.0;
  for (const auto& m : b[v]) s += m.squaredNorm();
  return s;
}

double SecondFundamentalData::traceless_norm2(int v) const {
  double s = 0.0;
  for (const auto& m : traceless[v]) s += m.squaredNorm();
  return s;
}

SecondFundamentalData second_fundamental_form(const ImmersedSurface& surface) {
  return second_fundamental_form(surface, normal_frame(surface));
}

SecondFundamentalData second_fundamental_form(const ImmersedSurface& surface,
                                              const NormalFrame& frame) {
  const TriangleMesh& mesh = surface.mesh();
  const AmbientModel& m = surface.ambient();
  const int nv = surface.num_vertices();
  const int k = frame.rank;
  const int d = surface.coords();
  SecondFundamentalData out;
  out.rank = k;
  out.tangents.resize(nv);
  out.normals.resize(nv);
  out.b.assign(nv, std::vector<Eigen::Matrix2d>(k));
  out.traceless.assign(nv, std::vector<Eigen::Matrix2d>(k));
  out.mean_curvature.assign(nv, Eigen::VectorXd::Zero(k));

  for (int v = 0; v < nv; ++v) {
    const Vec& p = surface.position(v);
    const auto& ring = mesh.two_ring(v);
    std::vector<Vec> z;
    z.reserve(ring.size());
    for (int w : ring) z.push_back(log_map(m, p, surface.position(w)));

    SmallMat tan = frame.tangents[v];
    SmallMat nor = frame.normals[v];
    Eigen::MatrixXd design(z.size(), 5);
    Eigen::MatrixXd heights(z.size(), k);
    Eigen::MatrixXd coef;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < z.size(); ++j) {
        double u = tan.col(0).dot(z[j]);
        double w = tan.col(1).dot(z[j]);
        design.row(j) << u, w, 0.5 * u * u, u * w, 0.5 * w * w;
        for (int a = 0; a < k; ++a) heights(j, a) = nor.col(a).dot(z[j]);
      }
      coef = design.colPivHouseholderQr().solve(heights);
      if (pass == 1) break;
      // Tilt the tangent plane by the fitted slopes and refit.
      Vec t1 = tan.col(0);
      Vec t2 = tan.col(1);
      for (int a = 0; a < k; ++a) {
        t1 += coef(0, a) * nor.col(a);
        t2 += coef(1, a) * nor.col(a);
      }
      SmallMat pbasis(d, m.is_spherical() ? 1 : 0);
      if (m.is_spherical()) pbasis.col(0) = p;
      t1 = orthogonalize(t1, pbasis).normalized();
      SmallMat tb = append_column(pbasis, t1);
      t2 = orthogonalize(t2, tb).normalized();
      tb = append_column(tb, t2);
      tan.col(0) = t1;
      tan.col(1) = t2;
      SmallMat nb(d, 0);
      for (int a = 0; a < k; ++a) {
        Vec r = orthogonalize(orthogonalize(nor.col(a), tb), nb);
        nb = append_column(nb, r.normalized());
      }
      nor = nb;
    }
    out.tangents[v] = tan;
    out.normals[v] = nor;
    for (int a = 0; a < k; ++a) {
      Eigen::Matrix2d b;
      b << coef(2, a), coef(3, a), coef(3, a), coef(4, a);
      out.b[v][a] = b;
      double h = 0.5 * b.trace();
      out.mean_curvature[v](a) = h;
      out.traceless[v][a] = b - h * Eigen::Matrix2d::Identity();
    }
  }
  return out;
}

}  // namespace sphereflow
