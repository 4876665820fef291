#pragma once

#include <vector>

#include <Eigen/Core>

#include "sphereflow/ambient.hpp"
#include "sphereflow/mesh.hpp"

namespace sphereflow {

/// Minimum interior angle below which a face counts as degenerate.
inline constexpr double kMinFaceAngleDeg = 5.0;

/// A mesh of S^2 immersed in a model ambient: vertex v sits at positions[v].
class ImmersedSurface {
 public:
  ImmersedSurface(MeshPtr mesh, std::vector<AmbientPoint> positions, AmbientModel ambient);

  const TriangleMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const AmbientModel& ambient() const { return ambient_; }
  const std::vector<AmbientPoint>& positions() const { return positions_; }
  const AmbientPoint& position(int v) const { return positions_[v]; }
  int num_vertices() const { return static_cast<int>(positions_.size()); }
  int coords() const { return ambient_.coords(); }

  Eigen::MatrixXd position_matrix() const;

 private:
  MeshPtr mesh_;
  std::vector<AmbientPoint> positions_;
  AmbientModel ambient_;
};

/// Latitude sphere (cos s * p, sin s * e_3) in S^n; s = 0 is the totally
/// geodesic equator. Coordinates 0..2 carry p, coordinate 3 carries the join
/// direction, the rest are zero.
ImmersedSurface embed_latitude(const MeshPtr& mesh, int n, double s);

/// Same slice family but in an arbitrary spherical model (round or conformal S^3).
ImmersedSurface embed_latitude(const MeshPtr& mesh, const AmbientModel& ambient, double s);

/// Round sphere of the given radius centered at the origin of R^n (first three coordinates).
ImmersedSurface embed_round_sphere(const MeshPtr& mesh, double radius, int n = 3);

/// Per-mesh discrete geometry of the chordal (flat-triangle) realization.
struct VertexGeometry {
  /// Circumcentric dual area per vertex (mixed area on obtuse faces).
  std::vector<double> dual_area;
  /// Cotangent weight 1/2 (cot alpha + cot beta) per mesh edge.
  std::vector<double> cot_weight;
  double mean_edge = 0.0;
  double min_angle_deg = 180.0;
};

/// Throws DegenerateMesh naming the face when an angle drops below kMinFaceAngleDeg.
VertexGeometry vertex_geometry(const ImmersedSurface& surface);

/// Area of one face in the ambient metric. Round spheres use the exact area of
/// the geodesic triangle, conformal S^3 scales it by e^{2 phi} at the
/// normalized centroid, Euclidean uses the flat triangle.
double face_area(const ImmersedSurface& surface, int face);
double area(const ImmersedSurface& surface);

/// Orthonormal tangent-plane estimate per vertex (coords x 2), from the
/// principal directions of the 1-ring.
std::vector<SmallMat> tangent_planes(const ImmersedSurface& surface);

/// Mean curvature vector H = tr B / 2 per vertex, from the cotangent Laplacian of
/// the extrinsic position. On spheres the flat value is corrected by the
/// position vector (H_{S^n} = H_flat + p). The result is projected onto the
/// normal space of the estimated tangent plane.
std::vector<AmbientVector> mean_curvature_vector(const ImmersedSurface& surface);

/// As above but only projected onto T_p M (no tangent-plane projection).
std::vector<AmbientVector> mean_curvature_vector_raw(const ImmersedSurface& surface,
                                                     const VertexGeometry& geometry);

/// Total angle defect minus 4 pi. Zero up to roundoff on any closed genus-0 mesh.
double gauss_bonnet_defect(const ImmersedSurface& surface);

/// Orthonormal normal frame (nu_1..nu_{n-2}) per vertex, stored as coords x rank.
struct NormalFrame {
  int rank = 0;
  std::vector<SmallMat> normals;
  std::vector<SmallMat> tangents;

  int num_vertices() const { return static_cast<int>(normals.size()); }
};

/// On spheres the constant complement basis e_3..e_n is projected onto each
/// normal space and Gram-Schmidt orthonormalized; for the equator that frame
/// is exactly parallel. In Euclidean R^3 the oriented unit normal is used.
NormalFrame normal_frame(const ImmersedSurface& surface);

/// Section of the normal bundle in frame coordinates: rank values per vertex.
struct NormalSection {
  int rank = 0;
  Eigen::VectorXd values;

  NormalSection() = default;
  NormalSection(int rank_, int num_vertices)
      : rank(rank_), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rank_) * num_vertices)) {}

  int num_vertices() const { return rank == 0 ? 0 : static_cast<int>(values.size() / rank); }
  auto at(int v) { return values.segment(static_cast<Eigen::Index>(v) * rank, rank); }
  auto at(int v) const { return values.segment(static_cast<Eigen::Index>(v) * rank, rank); }
  double sup_norm() const;
};

/// Constant section c * nu_component.
NormalSection constant_section(const NormalFrame& frame, int component, double c);

/// Largest fiber length allowed for graphs over a round-sphere base. Beyond
/// pi/2 the exponential map of the equator's normal bundle focuses.
inline constexpr double kFocalRadius = 1.5707963267948966;

/// v -> exp_{p(v)}(sum_a U^a(v) nu_a(v)). Throws GaugeLoss when a fiber
/// length reaches kFocalRadius - margin on spherical ambients.
ImmersedSurface graph_immersion(const ImmersedSurface& base, const NormalFrame& frame,
                                const NormalSection& section, double margin = 1e-3);

/// Inverse of graph_immersion for surfaces sharing the base's vertex
/// correspondence: frame coordinates of the normal part of log_{p(v)}(y(v)).
/// `max_tangential`, if given, receives the largest discarded tangential part.
NormalSection extract_section(const ImmersedSurface& surface, const ImmersedSurface& base,
                              const NormalFrame& frame, double margin = 1e-3,
                              double* max_tangential = nullptr);

/// Second fundamental form per vertex, in an orthonormal tangent basis and the
/// given normal frame: b[v][a] is the 2x2 matrix (B(e_i, e_j), nu_a).
struct SecondFundamentalData {
  int rank = 0;
  std::vector<SmallMat> tangents;                    // coords x 2, refined
  std::vector<SmallMat> normals;                     // coords x rank
  std::vector<std::vector<Eigen::Matrix2d>> b;       // [vertex][a]
  std::vector<Eigen::VectorXd> mean_curvature;       // tr B / 2 in frame coords
  std::vector<std::vector<Eigen::Matrix2d>> traceless;

  /// |B|^2 and |B°|^2 at a vertex (sum over normal components).
  double norm2(int v) const;
  double traceless_norm2(int v) const;
};

/// Quadratic height fits over the 2-ring in normal coordinates log_p, with one
/// tilt-correction pass. Normal frame defaults to normal_frame(surface).
SecondFundamentalData second_fundamental_form(const ImmersedSurface& surface);
SecondFundamentalData second_fundamental_form(const ImmersedSurface& surface,
                                              const NormalFrame& frame);

}  // namespace sphereflow
