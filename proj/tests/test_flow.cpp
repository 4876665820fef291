#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sphereflow/flow.hpp"
#include "sphereflow/rigidity.hpp"

using namespace sphereflow;
using std::numbers::pi;

namespace {

NormalSection scalar_field(const ImmersedSurface& s, double (*f)(const Eigen::Vector3d&)) {
  NormalSection u(1, s.num_vertices());
  for (int v = 0; v < s.num_vertices(); ++v) u.at(v)(0) = f(s.mesh().reference()[v]);
  return u;
}

double amplitude(const Trajectory& tr, std::size_t i, const NormalSection& mode,
                 const Eigen::VectorXd& mass) {
  return tr.states[i].values.dot(mass.cwiseProduct(mode.values)) /
         mode.values.dot(mass.cwiseProduct(mode.values));
}

}  // namespace

TEST_CASE("heat equation keeps constants") {
  auto surf = embed_latitude(build_icosphere(3), 3, 0.0);
  auto problem = laplacian_problem(surf);
  NormalSection u(1, surf.num_vertices());
  u.values.setConstant(0.7);
  CauchyOptions opt;
  opt.step = 1e-2;
  opt.horizon = 0.5;
  Trajectory tr = solve_cauchy(problem, u, opt);
  CHECK((tr.states.back().values.array() - 0.7).abs().maxCoeff() < 1e-12);
  CHECK(tr.size() == 51);
}

TEST_CASE("heat equation decays spherical harmonics at l(l+1)") {
  auto surf = embed_latitude(build_icosphere(4), 3, 0.0);
  auto problem = laplacian_problem(surf);
  CauchyOptions opt;
  opt.step = 1e-4;
  opt.horizon = 0.1;
  opt.record_every = 100;
  struct Mode {
    int l;
    double (*f)(const Eigen::Vector3d&);
  };
  for (Mode mode : {Mode{1, [](const Eigen::Vector3d& x) { return x.z(); }},
                    Mode{2, [](const Eigen::Vector3d& x) { return x.x() * x.y(); }},
                    Mode{3, [](const Eigen::Vector3d& x) { return x.x() * x.y() * x.z(); }}}) {
    NormalSection u0 = scalar_field(surf, mode.f);
    Trajectory tr = solve_cauchy(problem, u0, opt);
    double expected = std::exp(-mode.l * (mode.l + 1) * 0.1);
    CHECK(std::abs(amplitude(tr, tr.size() - 1, u0, problem.mass) / expected - 1) < 1e-2);
  }
}

TEST_CASE("linearized flow grows the constant mode at e^{2t}") {
  auto base = embed_latitude(build_icosphere(4), 3, 0.0);
  JacobiMatrix j = assemble_jacobi(base, normal_frame(base));
  auto problem = jacobi_problem(j);
  NormalSection u(1, base.num_vertices());
  u.values.setConstant(1e-3);
  CauchyOptions opt;
  opt.step = 1e-4;
  opt.horizon = 0.5;
  opt.record_every = 500;
  Trajectory tr = solve_cauchy(problem, u, opt);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    double expected = 1e-3 * std::exp(2 * tr.times[i]);
    CHECK(std::abs(tr.states[i].values.mean() / expected - 1) < 1e-2);
  }
}

TEST_CASE("time-dependent coefficients and sources") {
  auto surf = embed_latitude(build_icosphere(2), 3, 0.0);
  auto problem = laplacian_problem(surf);
  problem.time_independent = false;
  problem.diffusion = [](int, double t) { return 1.0 + t; };
  problem.potential = [](int, double) { return Eigen::MatrixXd::Constant(1, 1, -1.0); };
  const Eigen::Index n = problem.mass.size();
  problem.source = [n](double t) { return Eigen::VectorXd::Constant(n, std::cos(t)); };
  NormalSection u(1, surf.num_vertices());
  CauchyOptions opt;
  opt.step = 1e-3;
  opt.theta = 0.5;
  opt.horizon = 1.0;
  Trajectory tr = solve_cauchy(problem, u, opt);
  // Constants solve u' = -u + cos t, u(0) = 0.
  double t = 1.0;
  double exact = 0.5 * (std::cos(t) + std::sin(t) - std::exp(-t));
  CHECK(std::abs(tr.states.back().values.mean() - exact) < 1e-6);

  problem.diffusion = [](int v, double) { return v == 3 ? 0.0 : 1.0; };
  CHECK_THROWS_AS(solve_cauchy(problem, u, opt), Error);
}

TEST_CASE("bundle MCF: fixed point, one step and equivariance") {
  auto mesh = build_icosphere(3);
  auto base = embed_latitude(mesh, 3, 0.0);
  NormalFrame fr = normal_frame(base);
  FlowConfig cfg;
  cfg.step = 1e-3;
  BundleFlow flow(base, fr, cfg);

  NormalSection zero(1, base.num_vertices());
  CHECK(flow.step(zero).values.cwiseAbs().maxCoeff() < 1e-13);

  for (double s0 : {0.1, 0.4}) {
    NormalSection u = constant_section(fr, 0, s0);
    NormalSection next = flow.step(u);
    double expected = s0 + 2 * std::tan(s0) * cfg.step;
    CHECK((next.values.array() - expected).abs().maxCoeff() < 20 * cfg.step * cfg.step);
    // The discrete velocity reproduces 2 tan s on latitudes up to the fit error.
    CHECK((flow.velocity(u).value.values.array() - 2 * std::tan(s0)).abs().maxCoeff() < 1e-5 * std::tan(s0));
  }

  auto perm = icosphere_cyclic_symmetry(*mesh);
  NormalSection u = scalar_field(base, [](const Eigen::Vector3d& x) {
    return 0.1 + 0.05 * (x.x() * x.y() + x.y() * x.z() + x.z() * x.x());
  });
  for (int step = 0; step < 5; ++step) {
    u = flow.step(u);
    double dev = 0.0;
    for (int v = 0; v < base.num_vertices(); ++v) dev = std::max(dev, std::abs(u.at(perm[v])(0) - u.at(v)(0)));
    CHECK(dev < 1e-8);
  }
}

TEST_CASE("explicit scheme respects its stability rule") {
  auto base = embed_latitude(build_icosphere(3), 3, 0.0);
  NormalFrame fr = normal_frame(base);
  FlowConfig cfg;
  cfg.scheme = Scheme::Explicit;
  cfg.step = 1e-2;
  CHECK_THROWS_AS(BundleFlow(base, fr, cfg), Error);
  cfg.step = 1e-3;
  BundleFlow flow(base, fr, cfg);
  NormalSection next = flow.step(constant_section(fr, 0, 0.2));
  CHECK((next.values.array() - (0.2 + 2e-3 * std::tan(0.2))).abs().maxCoeff() < 1e-8);
}

TEST_CASE("zero section is a static trajectory") {
  auto base = embed_latitude(build_icosphere(3), 3, 0.0);
  NormalFrame fr = normal_frame(base);
  FlowConfig cfg;
  cfg.step = 1e-2;
  cfg.horizon = 0.2;
  Trajectory tr = run_mcf(base, fr, NormalSection(1, base.num_vertices()), cfg);
  CHECK(tr.termination == Termination::Horizon);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(tr.sup_norm[i] < 1e-13);
    CHECK(std::abs(tr.area[i] / (4 * pi) - 1) < 5e-3);
    CHECK(std::abs(tr.area[i] - tr.area[0]) < 1e-12);
  }
}

TEST_CASE("latitude flow follows the closed form and blows up on time") {
  auto base = embed_latitude(build_icosphere(3), 3, 0.0);
  NormalFrame fr = normal_frame(base);
  FlowConfig cfg;
  cfg.step = 1e-4;
  cfg.horizon = 2.0;
  cfg.record_every = 100;
  LatitudeOracle oracle{0.1};
  Trajectory tr = run_mcf(base, fr, constant_section(fr, 0, 0.1), cfg);
  CHECK(tr.termination == Termination::BlowUp);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    double s = tr.states[i].values.mean();
    if (s > 1.0) break;
    CHECK(std::abs(std::sin(s) / (std::sin(0.1) * std::exp(2 * tr.times[i])) - 1) < 1e-2);
    CHECK(std::abs(tr.area[i] / oracle.area(tr.times[i]) - 1) < 1e-2);
  }
  CHECK(std::abs(tr.times.back() / oracle.blow_up_time() - 1) < 2e-2);
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.area[i] <= tr.area[i - 1] * (1 + 1e-8));
}

TEST_CASE("restart consistency") {
  auto base = embed_latitude(build_icosphere(2), 3, 0.0);
  NormalFrame fr = normal_frame(base);
  FlowConfig cfg;
  cfg.step = 1e-4;
  cfg.horizon = 0.4;
  cfg.record_every = 100;
  ExtensionReport zero = check_extension_uniqueness(base, fr, NormalSection(1, base.num_vertices()), cfg, 0.2);
  CHECK(zero.restart_difference == 0.0);
  CHECK(zero.refined_difference == 0.0);

  ExtensionReport lat = check_extension_uniqueness(base, fr, constant_section(fr, 0, 0.1), cfg, 0.2);
  CHECK(lat.restart_difference < 1e-6);
  CHECK(lat.overlap_samples == 21);
  cfg.step = 2e-4;
  cfg.record_every = 50;
  ExtensionReport coarse = check_extension_uniqueness(base, fr, constant_section(fr, 0, 0.1), cfg, 0.2);
  // Backward Euler: halving h halves the restart discrepancy.
  double order = std::log2(coarse.refined_difference / lat.refined_difference);
  CHECK(std::abs(order - 1.0) < 0.1);
}

TEST_CASE("exponent fits") {
  std::vector<double> t, a, b;
  for (int i = 0; i <= 40; ++i) {
    t.push_back(-3.0 + 0.05 * i);
    a.push_back(std::exp(2 * t.back()));
    b.push_back(std::exp(6 * t.back()) / 6);
  }
  CHECK(std::abs(fit_decay_exponent(t, a, -10, 10).slope - 2) < 1e-10);
  CHECK(std::abs(fit_decay_exponent(t, b, -10, 10).slope - 6) < 1e-10);
  CHECK_THROWS_AS(fit_decay_exponent(t, a, -3, -2.8), Error);
  a[3] = 0.0;
  CHECK_THROWS_AS(fit_decay_exponent(t, a, -10, 10), Error);
}

TEST_CASE("ancient solution from the constant mode") {
  auto base = embed_latitude(build_icosphere(2), 3, 0.0);
  NormalFrame fr = normal_frame(base);
  JacobiMatrix j = assemble_jacobi(base, fr);
  Spectrum sp = eigen_spectrum(j, 1);
  NormalSection v = sp.sections[0];
  // Normalize to the constant unit section so the oracle reads sin s = e^{2t}.
  v.values /= v.values.mean();
  FlowConfig cfg;
  cfg.step = 1e-3;
  cfg.theta = 0.5;
  cfg.horizon = 5.0;
  cfg.record_every = 5;
  LadderConfig ladder;
  AncientSolution sol = construct_ancient(base, fr, v, cfg, ladder);
  const auto& rep = sol.report;
  CHECK(rep.converged);
  CHECK(std::abs(rep.lambda0 + 2) < 1e-9);
  CHECK(rep.differences.back() < 1e-4);
  CHECK(std::abs(rep.leading.slope / 2 - 1) < 0.05);
  CHECK(std::abs(rep.remainder.slope / 6 - 1) < 0.1);
  const Trajectory& tr = sol.trajectory;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.sup_norm[i] > 0.5) break;
    double s = tr.states[i].values.mean();
    CHECK(std::abs(std::sin(s) / std::exp(2 * tr.times[i]) - 1) < 1e-2);
  }

  NormalSection bad = v;
  bad.values(0) += 0.5;
  CHECK_THROWS_AS(construct_ancient(base, fr, bad, cfg, ladder), Error);
}
