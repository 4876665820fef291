#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "sphereflow/jacobi.hpp"

using namespace sphereflow;
using std::numbers::pi;

namespace {

// Eigenvalues of -(Delta + 2) on the unit S^2 listed with multiplicity.
std::vector<double> harmonic_oracle(int n, int count) {
  std::vector<double> out;
  for (int l = 0; static_cast<int>(out.size()) < count; ++l) {
    for (int k = 0; k < (2 * l + 1) * (n - 2); ++k) out.push_back(l * (l + 1) - 2.0);
  }
  out.resize(count);
  return out;
}

double max_abs(const SparseMatrix& a) {
  double m = 0.0;
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

}  // namespace

TEST_CASE("jacobi matrix is exactly symmetric") {
  auto m = build_icosphere(3);
  for (double s : {0.0, 0.3}) {
    auto base = embed_latitude(m, 5, s);
    JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
    SparseMatrix t = j.stiffness.transpose();
    CHECK(max_abs(j.stiffness - t) == 0.0);
    CHECK(j.size() == 3 * base.num_vertices());
  }
}

TEST_CASE("equator operator is block diagonal -(Delta + 2)") {
  auto m = build_icosphere(3);
  auto base = embed_latitude(m, 4, 0.0);
  JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
  CHECK(j.warnings.empty());
  ScalarOperators ops = scalar_operators(base);
  const int nv = base.num_vertices();
  SparseMatrix expected(2 * nv, 2 * nv);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < ops.stiffness.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(ops.stiffness, k); it; ++it) {
      for (int a = 0; a < 2; ++a) trip.emplace_back(2 * it.row() + a, 2 * it.col() + a, it.value());
    }
  }
  for (int v = 0; v < nv; ++v)
    for (int a = 0; a < 2; ++a) trip.emplace_back(2 * v + a, 2 * v + a, -2.0 * ops.mass(v));
  expected.setFromTriplets(trip.begin(), trip.end());
  CHECK(max_abs(j.stiffness - expected) < 1e-12);
}

TEST_CASE("euclidean sphere: laplacian blocks plus the B contraction") {
  auto m = build_icosphere(3);
  auto base = embed_round_sphere(m, 1.5);
  NormalFrame fr = normal_frame(base);
  JacobiMatrix j = assemble_jacobi(base, fr);
  ScalarOperators ops = scalar_operators(base);
  auto sff = second_fundamental_form(base, fr);
  SparseMatrix diff = j.stiffness - ops.stiffness;
  double scale = 0.0;
  for (int v = 0; v < base.num_vertices(); ++v) {
    diff.coeffRef(v, v) += ops.mass(v) * sff.norm2(v);
    scale = std::max(scale, ops.mass(v) * sff.norm2(v));
  }
  // The potential is B projected onto the (unrefined) frame normal, which
  // differs from |B|^2 only by the squared tilt of the refit.
  CHECK(max_abs(diff) < 1e-3 * scale);
  double off_diag = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (it.row() != it.col()) off_diag = std::max(off_diag, std::abs(it.value()));
  CHECK(off_diag < 1e-12);
  // Non-minimal base is flagged.
  CHECK_FALSE(j.warnings.empty());
}

TEST_CASE("equator spectrum matches spherical harmonics") {
  auto m = build_icosphere(4);
  for (int n : {3, 4}) {
    auto base = embed_latitude(m, n, 0.0);
    JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
    const int count = 9 * (n - 2);
    Spectrum sp = eigen_spectrum(j, count);
    auto oracle = harmonic_oracle(n, count);
    REQUIRE(sp.eigenvalues.size() == static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      CHECK(sp.residuals[i] <= 1e-10);
      double tol = oracle[i] < 3 ? 0.05 : 0.1;
      CHECK(std::abs(sp.eigenvalues[i] - oracle[i]) < tol);
      if (i > 0) CHECK(sp.eigenvalues[i] >= sp.eigenvalues[i - 1] - 1e-12);
    }
    int mult = 0;
    for (double l : sp.eigenvalues) mult += std::abs(l + 2) < 0.05;
    CHECK(mult == n - 2);
  }
}

TEST_CASE("spectrum converges under refinement") {
  double prev_l2 = 1e9;
  for (int level = 2; level <= 5; ++level) {
    auto base = embed_latitude(build_icosphere(level), 3, 0.0);
    JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
    Spectrum sp = eigen_spectrum(j, 9);
    // Constants are exact eigenvectors of the discrete operator.
    CHECK(std::abs(sp.eigenvalues[0] + 2) < 1e-9);
    double err = 0.0;
    for (int i = 4; i < 9; ++i) err = std::max(err, std::abs(sp.eigenvalues[i] - 4.0));
    CHECK(err < prev_l2);
    prev_l2 = err;
  }
}

TEST_CASE("index form") {
  auto m = build_icosphere(4);
  auto base = embed_latitude(m, 3, 0.0);
  NormalFrame fr = normal_frame(base);
  JacobiMatrix j = assemble_jacobi(base, fr);
  Spectrum sp = eigen_spectrum(j, 9);

  CHECK(std::abs(mass_inner(j, sp.sections[0], sp.sections[0]) - 1) < 1e-10);
  CHECK(std::abs(index_form(j, sp.sections[0], sp.sections[0]) + 2) < 0.05);
  for (int a = 0; a < 9; ++a) {
    for (int b = a + 1; b < 9; ++b) {
      if (std::abs(sp.eigenvalues[a] - sp.eigenvalues[b]) > 0.5) {
        CHECK(std::abs(index_form(j, sp.sections[a], sp.sections[b])) < 1e-8);
      }
    }
  }
  NormalSection one = constant_section(fr, 0, 1.0);
  CHECK(std::abs(index_form(j, one, one) / (-8 * pi) - 1) < 5e-3);
}

TEST_CASE("index form is the second variation of area") {
  auto m = build_icosphere(4);
  auto base = embed_latitude(m, 3, 0.0);
  NormalFrame fr = normal_frame(base);
  JacobiMatrix j = assemble_jacobi(base, fr);
  Spectrum sp = eigen_spectrum(j, 9);
  std::vector<NormalSection> probes = {constant_section(fr, 0, 1.0), sp.sections[5]};
  NormalSection mix(1, base.num_vertices());
  mix.values = sp.sections[0].values + 0.5 * sp.sections[6].values;
  probes.push_back(mix);
  const double t = 1e-3;
  for (const auto& v : probes) {
    NormalSection plus = v, minus = v;
    plus.values *= t;
    minus.values *= -t;
    double d2 = (area(graph_immersion(base, fr, plus)) - 2 * area(base) +
                 area(graph_immersion(base, fr, minus))) /
                (t * t);
    double q = index_form(j, v, v);
    CHECK(std::abs(d2 - q) < 0.02 * std::abs(q));
  }
}

TEST_CASE("spectrum CSV") {
  auto base = embed_latitude(build_icosphere(2), 3, 0.0);
  JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
  Spectrum sp = eigen_spectrum(j, 4);
  auto path = std::filesystem::temp_directory_path() / "sphereflow_spectrum.csv";
  write_spectrum_csv(path, sp);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "index,eigenvalue,residual");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
}

TEST_CASE("too many eigenpairs is an input error") {
  auto base = embed_latitude(build_icosphere(0), 3, 0.0);
  JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
  CHECK_THROWS_AS(eigen_spectrum(j, 13), Error);
}
