#include "sphereflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "sphereflow/error.hpp"
#include "sphereflow/format.hpp"

namespace sphereflow {

TriangleMesh::TriangleMesh(std::vector<Eigen::Vector3d> reference, std::vector<Face> faces,
                           int level)
    : reference_(std::move(reference)), faces_(std::move(faces)), level_(level) {
  build_topology();
}

void TriangleMesh::build_topology() {
  const int nv = num_vertices();
  vertex_faces_.assign(nv, {});
  std::map<std::pair<int, int>, int> index;
  for (int f = 0; f < num_faces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      int a = faces_[f][k];
      int b = faces_[f][(k + 1) % 3];
      if (a < 0 || a >= nv || b < 0 || b >= nv || a == b) {
        fail(ErrorCode::DegenerateMesh, "face " + std::to_string(f) + " has invalid vertex ids");
      }
      vertex_faces_[a].push_back(f);
      auto key = std::minmax(a, b);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, static_cast<int>(edges_.size()));
        Edge e{key.first, key.second, -1, -1};
        (a < b ? e.left : e.right) = f;
        edges_.push_back(e);
      } else {
        Edge& e = edges_[it->second];
        int& slot = a < b ? e.left : e.right;
        if (slot != -1) {
          fail(ErrorCode::DegenerateMesh,
               "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                   ") is not consistently oriented or has more than two faces");
        }
        slot = f;
      }
    }
  }
  for (const Edge& e : edges_) {
    if (e.left < 0 || e.right < 0) {
      fail(ErrorCode::DegenerateMesh, "mesh is not closed: boundary edge (" +
                                          std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
  }
  if (euler_characteristic() != 2) {
    fail(ErrorCode::DegenerateMesh,
         "mesh is not genus 0: Euler characteristic " + std::to_string(euler_characteristic()));
  }

  ring1_.assign(nv, {});
  for (const Edge& e : edges_) {
    ring1_[e.a].push_back(e.b);
    ring1_[e.b].push_back(e.a);
  }
  for (auto& r : ring1_) std::sort(r.begin(), r.end());
  ring2_.assign(nv, {});
  for (int v = 0; v < nv; ++v) {
    std::vector<int> r = ring1_[v];
    for (int w : ring1_[v]) r.insert(r.end(), ring1_[w].begin(), ring1_[w].end());
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    r.erase(std::remove(r.begin(), r.end(), v), r.end());
    ring2_[v] = std::move(r);
  }
}

double TriangleMesh::mean_reference_edge() const {
  double sum = 0.0;
  for (const Edge& e : edges_) sum += (reference_[e.a] - reference_[e.b]).norm();
  return sum / static_cast<double>(edges_.size());
}

MeshPtr build_icosphere(int level) {
  if (level < 0 || level > 8) {
    fail(ErrorCode::InvalidInput, "icosphere level must be in [0, 8]");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& v : verts) v.normalize();
  std::vector<Face> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
  };
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoints;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      int id = static_cast<int>(verts.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const Face& f : faces) {
      int ab = mid(f[0], f[1]);
      int bc = mid(f[1], f[2]);
      int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return std::make_shared<const TriangleMesh>(std::move(verts), std::move(faces), level);
}

std::vector<int> icosphere_cyclic_symmetry(const TriangleMesh& mesh) {
  const auto& ref = mesh.reference();
  std::map<std::array<long long, 3>, int> lookup;
  auto key = [](const Eigen::Vector3d& p) {
    return std::array<long long, 3>{std::llround(p.x() * 1e9), std::llround(p.y() * 1e9),
                                    std::llround(p.z() * 1e9)};
  };
  for (int i = 0; i < mesh.num_vertices(); ++i) lookup.emplace(key(ref[i]), i);
  std::vector<int> perm(mesh.num_vertices());
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    Eigen::Vector3d r(ref[i].y(), ref[i].z(), ref[i].x());
    auto it = lookup.find(key(r));
    if (it == lookup.end()) fail(ErrorCode::InvalidInput, "mesh lacks the cyclic symmetry");
    perm[i] = it->second;
  }
  return perm;
}

void write_off(const std::filesystem::path& path, const TriangleMesh& mesh,
               const Eigen::MatrixXd& positions) {
  if (positions.rows() != mesh.num_vertices()) {
    fail(ErrorCode::InvalidInput, "position count does not match mesh");
  }
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << ' ' << mesh.num_edges()
      << '\n';
  for (int i = 0; i < positions.rows(); ++i) {
    for (int c = 0; c < positions.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(positions(i, c));
    }
    out << '\n';
  }
  for (const Face& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

OffData read_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
  }
  if (lines.empty() || lines[0].rfind("OFF", 0) != 0) {
    fail(ErrorCode::Io, path.string() + ": missing OFF header");
  }
  std::istringstream counts(lines.size() > 1 ? lines[1] : "");
  long nv = -1, nf = -1;
  counts >> nv >> nf;
  if (!counts || nv < 0 || nf < 0 || static_cast<long>(lines.size()) < 2 + nv + nf) {
    fail(ErrorCode::Io, path.string() + ": bad counts line");
  }
  OffData data;
  std::vector<std::vector<double>> rows;
  for (long i = 0; i < nv; ++i) {
    std::istringstream ls(lines[2 + i]);
    std::vector<double> row;
    for (double x; ls >> x;) row.push_back(x);
    if (row.empty() || (!rows.empty() && row.size() != rows[0].size())) {
      fail(ErrorCode::Io, path.string() + ": inconsistent vertex line " + std::to_string(i));
    }
    rows.push_back(std::move(row));
  }
  int cols = rows.empty() ? 3 : static_cast<int>(rows[0].size());
  data.positions.resize(nv, cols);
  for (long i = 0; i < nv; ++i)
    for (int c = 0; c < cols; ++c) data.positions(i, c) = rows[i][c];
  for (long f = 0; f < nf; ++f) {
    std::istringstream ls(lines[2 + nv + f]);
    int k = 0;
    Face face{};
    ls >> k >> face[0] >> face[1] >> face[2];
    if (!ls || k != 3) fail(ErrorCode::Io, path.string() + ": only triangle faces are supported");
    data.faces.push_back(face);
  }
  return data;
}

}  // namespace sphereflow
