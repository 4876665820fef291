#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace sphereflow {

using Face = std::array<int, 3>;

struct Edge {
  int a;
  int b;  // a < b
  // Faces on either side; the face in which the directed edge a -> b appears
  // is `left`.
  int left;
  int right;
};

/// Closed, oriented, genus-0 triangle mesh of the parameter sphere S^2.
///
/// `reference` holds the unit-sphere position of each vertex; it is the
/// parametrization every immersion of the mesh is expressed against.
class TriangleMesh {
 public:
  TriangleMesh(std::vector<Eigen::Vector3d> reference, std::vector<Face> faces, int level);

  int num_vertices() const { return static_cast<int>(reference_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int level() const { return level_; }

  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Eigen::Vector3d>& reference() const { return reference_; }

  /// Vertices adjacent to v, sorted.
  const std::vector<int>& one_ring(int v) const { return ring1_[v]; }
  /// Vertices at graph distance 1 or 2 from v, sorted.
  const std::vector<int>& two_ring(int v) const { return ring2_[v]; }
  const std::vector<int>& vertex_faces(int v) const { return vertex_faces_[v]; }

  int euler_characteristic() const { return num_vertices() - num_edges() + num_faces(); }

  /// Mean edge length of the reference (unit-sphere) embedding.
  double mean_reference_edge() const;

 private:
  void build_topology();

  std::vector<Eigen::Vector3d> reference_;
  std::vector<Face> faces_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> ring1_;
  std::vector<std::vector<int>> ring2_;
  std::vector<std::vector<int>> vertex_faces_;
  int level_;
};

using MeshPtr = std::shared_ptr<const TriangleMesh>;

/// Icosahedron refined `level` times by edge-midpoint subdivision with
/// projection to the unit sphere: 10 * 4^level + 2 vertices.
MeshPtr build_icosphere(int level);

/// Symmetry of the icosphere: cyclic coordinate permutation (x, y, z) -> (y, z, x).
/// Returns perm with reference[perm[i]] = R reference[i].
std::vector<int> icosphere_cyclic_symmetry(const TriangleMesh& mesh);

/// OFF text format: "OFF", counts line, vertex lines, "3 a b c" face lines.
/// Vertex lines carry as many coordinates as `positions` has columns.
void write_off(const std::filesystem::path& path, const TriangleMesh& mesh,
               const Eigen::MatrixXd& positions);

struct OffData {
  Eigen::MatrixXd positions;
  std::vector<Face> faces;
};
OffData read_off(const std::filesystem::path& path);

}  // namespace sphereflow
