#include "sphereflow/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "sphereflow/format.hpp"

namespace sphereflow {

Eigen::VectorXd JacobiMatrix::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd su = stiffness * u;
  return -(su.array() / mass.array()).matrix();
}

Eigen::MatrixXd frame_transport(const ImmersedSurface& base, const NormalFrame& frame, int a,
                                int b) {
  const AmbientModel& m = base.ambient();
  const int k = frame.rank;
  Eigen::MatrixXd t(k, k);
  for (int j = 0; j < k; ++j) {
    Vec moved = parallel_transport(m, base.position(b), base.position(a),
                                   frame.normals[b].col(j));
    for (int i = 0; i < k; ++i) t(i, j) = frame.normals[a].col(i).dot(moved);
  }
  // Nearest orthogonal matrix; the transported frame picks up an O(h^2)
  // tangential part that would otherwise shrink the coupling.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

JacobiMatrix assemble_jacobi(const ImmersedSurface& base, const NormalFrame& frame) {
  const TriangleMesh& mesh = base.mesh();
  const AmbientModel& m = base.ambient();
  const int nv = base.num_vertices();
  const int k = frame.rank;
  if (frame.num_vertices() != nv) fail(ErrorCode::InvalidInput, "frame does not match base");

  JacobiMatrix J;
  J.rank = k;
  J.num_vertices = nv;
  VertexGeometry geo = vertex_geometry(base);
  for (const auto& h : mean_curvature_vector(base)) {
    J.max_mean_curvature = std::max(J.max_mean_curvature, h.norm());
  }
  if (J.max_mean_curvature > kMinimalityThreshold) {
    std::ostringstream os;
    os << "base is not minimal: sup |H| = " << J.max_mean_curvature;
    J.warnings.push_back(os.str());
  }
  SecondFundamentalData sff = second_fundamental_form(base, frame);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(mesh.num_edges()) * 4 * k * k + nv * k * k);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    double w = geo.cot_weight[e];
    Eigen::MatrixXd t = frame_transport(base, frame, edge.a, edge.b);
    for (int i = 0; i < k; ++i) {
      trip.emplace_back(edge.a * k + i, edge.a * k + i, w);
      trip.emplace_back(edge.b * k + i, edge.b * k + i, w);
      for (int j = 0; j < k; ++j) {
        trip.emplace_back(edge.a * k + i, edge.b * k + j, -w * t(i, j));
        trip.emplace_back(edge.b * k + j, edge.a * k + i, -w * t(i, j));
      }
    }
  }

  J.mass.resize(static_cast<Eigen::Index>(nv) * k);
  for (int v = 0; v < nv; ++v) {
    const Vec& p = base.position(v);
    const SmallMat& nu = frame.normals[v];
    const SmallMat& tan = frame.tangents[v];
    Eigen::MatrixXd pot = Eigen::MatrixXd::Zero(k, k);
    // sum_i (R(e_i, nu_a) e_i, nu_b)
    for (int i = 0; i < 2; ++i) {
      Vec e = m.tangent_part(p, tan.col(i));
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) pot(a, b) += riemann(m, p, e, nu.col(a), e, nu.col(b));
    }
    // sum_ij (nu_a, B_ij)(nu_b, B_ij), with B expressed in the refined normals.
    Eigen::MatrixXd overlap = nu.transpose() * sff.normals[v];  // k x k
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd bij(k);
        for (int c = 0; c < k; ++c) bij(c) = sff.b[v][c](i, j);
        Eigen::VectorXd g = overlap * bij;
        pot += g * g.transpose();
      }
    }
    double area_v = geo.dual_area[v];
    for (int a = 0; a < k; ++a) {
      J.mass(v * k + a) = area_v;
      for (int b = 0; b < k; ++b) {
        if (pot(a, b) != 0.0) trip.emplace_back(v * k + a, v * k + b, -area_v * pot(a, b));
      }
    }
  }
  J.stiffness.resize(static_cast<Eigen::Index>(nv) * k, static_cast<Eigen::Index>(nv) * k);
  J.stiffness.setFromTriplets(trip.begin(), trip.end());
  J.stiffness.makeCompressed();
  return J;
}

ScalarOperators scalar_operators(const ImmersedSurface& surface) {
  VertexGeometry geo = vertex_geometry(surface);
  const TriangleMesh& mesh = surface.mesh();
  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges()[e];
    double w = geo.cot_weight[e];
    trip.emplace_back(edge.a, edge.a, w);
    trip.emplace_back(edge.b, edge.b, w);
    trip.emplace_back(edge.a, edge.b, -w);
    trip.emplace_back(edge.b, edge.a, -w);
  }
  ScalarOperators ops;
  ops.stiffness.resize(mesh.num_vertices(), mesh.num_vertices());
  ops.stiffness.setFromTriplets(trip.begin(), trip.end());
  ops.mass = Eigen::Map<const Eigen::VectorXd>(geo.dual_area.data(), mesh.num_vertices());
  return ops;
}

Spectrum eigen_spectrum(const JacobiMatrix& jacobi, int k, const SpectrumOptions& options) {
  const Eigen::Index n = jacobi.size();
  if (k < 1 || k > n) fail(ErrorCode::InvalidInput, "requested eigenpair count out of range");
  const SparseMatrix& S = jacobi.stiffness;
  const Eigen::VectorXd& M = jacobi.mass;
  const Eigen::VectorXd msqrt = M.array().sqrt();

  // Gershgorin bounds of M^{-1/2} S M^{-1/2}.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < S.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(S, c); it; ++it) {
      double scaled = it.value() / (msqrt(it.row()) * msqrt(it.col()));
      if (it.row() == it.col()) diag(it.row()) += scaled;
      else off(it.row()) += std::abs(scaled);
    }
  }
  const double lower = (diag - off).minCoeff();
  const double upper = (diag + off).maxCoeff();
  const double scale = std::max({1.0, std::abs(lower), std::abs(upper)});
  const double shift = lower - 0.05 * std::max(1.0, std::abs(lower));

  SparseMatrix shifted = S;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift * M(i);
  Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::SolverFailure, "factorization of the shifted Jacobi matrix failed");
  }

  const Eigen::Index block = std::min<Eigen::Index>(n, std::max(2 * k, k + 8));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, block);
  for (Eigen::Index j = 0; j < block; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);

  Spectrum out;
  Eigen::VectorXd theta;
  std::vector<double> residuals(k);
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::MatrixXd Y = solver.solve(M.asDiagonal() * X);
    // M-orthonormalize through a QR of M^{1/2} Y.
    Eigen::MatrixXd W = msqrt.asDiagonal() * Y;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(W);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    Y = msqrt.cwiseInverse().asDiagonal() * Q;
    Eigen::MatrixXd SY = S * Y;
    Eigen::MatrixXd small = Y.transpose() * SY;
    small = 0.5 * (small + small.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(small);
    theta = eig.eigenvalues();
    X = Y * eig.eigenvectors();
    Eigen::MatrixXd SX = SY * eig.eigenvectors();
    bool converged = true;
    for (int j = 0; j < k; ++j) {
      Eigen::VectorXd r = SX.col(j) - theta(j) * M.cwiseProduct(X.col(j));
      residuals[j] = (r.array() / msqrt.array()).matrix().norm() / scale;
      if (!(residuals[j] <= options.tolerance)) converged = false;
    }
    if (converged) {
      out.iterations = it;
      break;
    }
    if (it == options.max_iterations) {
      std::ostringstream os;
      os << "eigen-solver did not converge in " << it << " iterations; residuals:";
      for (double r : residuals) os << ' ' << r;
      fail(ErrorCode::SolverFailure, os.str());
    }
  }
  for (int j = 0; j < k; ++j) {
    out.eigenvalues.push_back(theta(j));
    NormalSection s;
    s.rank = jacobi.rank;
    s.values = X.col(j);
    // Fix the sign so results are reproducible across platforms.
    Eigen::Index idx;
    s.values.cwiseAbs().maxCoeff(&idx);
    if (s.values(idx) < 0) s.values = -s.values;
    out.sections.push_back(std::move(s));
  }
  out.residuals = residuals;
  return out;
}

double index_form(const JacobiMatrix& jacobi, const NormalSection& x, const NormalSection& y) {
  if (x.values.size() != jacobi.size() || y.values.size() != jacobi.size()) {
    fail(ErrorCode::InvalidInput, "section size does not match the Jacobi matrix");
  }
  return x.values.dot(jacobi.stiffness * y.values);
}

double mass_inner(const JacobiMatrix& jacobi, const NormalSection& x, const NormalSection& y) {
  if (x.values.size() != jacobi.size() || y.values.size() != jacobi.size()) {
    fail(ErrorCode::InvalidInput, "section size does not match the Jacobi matrix");
  }
  return x.values.dot(jacobi.mass.cwiseProduct(y.values));
}

void write_spectrum_csv(const std::filesystem::path& path, const Spectrum& spectrum) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << "index,eigenvalue,residual\n";
  for (std::size_t i = 0; i < spectrum.eigenvalues.size(); ++i) {
    out << i << ',' << format_double(spectrum.eigenvalues[i]) << ','
        << format_double(spectrum.residuals[i]) << '\n';
  }
  if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace sphereflow
