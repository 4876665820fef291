#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "sphereflow/rigidity.hpp"
#include "sphereflow/width.hpp"

using namespace sphereflow;
using std::numbers::pi;

namespace {

Eigen::VectorXd random_params(std::mt19937_64& rng, double scale) {
  Eigen::VectorXd lo = sweep_lower_bounds(), hi = sweep_upper_bounds();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd p(kSweepParameters);
  for (int i = 0; i < kSweepParameters; ++i) p(i) = scale * (lo(i) + u(rng) * (hi(i) - lo(i)));
  return p;
}

}  // namespace

TEST_CASE("diffeomorphism family fixes S^3 and is the identity at zero") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(kSweepParameters);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector4d x(n(rng), n(rng), n(rng), n(rng));
    x.normalize();
    CHECK((sweep_diffeomorphism(zero, x) - x).norm() == 0.0);
    Eigen::Vector4d y = sweep_diffeomorphism(random_params(rng, 1.0), x);
    CHECK(std::abs(y.norm() - 1.0) < 1e-14);
  }
  // A pure rotation generator turns the 0-1 plane by its coefficient.
  Eigen::VectorXd rot = zero;
  rot(4) = pi / 2;
  Eigen::Vector4d e0(1, 0, 0, 0);
  CHECK((sweep_diffeomorphism(rot, e0) - Eigen::Vector4d(0, 1, 0, 0)).norm() < 1e-5);
  // The Moebius map sends -a/|a| to itself and moves points towards a.
  Eigen::VectorXd boost = zero;
  boost(3) = 0.5;
  CHECK((sweep_diffeomorphism(boost, Eigen::Vector4d(0, 0, 0, -1)) - Eigen::Vector4d(0, 0, 0, -1)).norm() < 1e-14);
  CHECK(sweep_diffeomorphism(boost, e0)(3) > 0.5);
  CHECK_THROWS_AS(sweep_diffeomorphism(Eigen::VectorXd::Zero(3), e0), Error);
}

TEST_CASE("standard sweep-out slice areas") {
  SweepOut s = standard_sweepout(AmbientModel::round_sphere(3), 21, 3);
  std::vector<double> a = slice_areas(s);
  REQUIRE(a.size() == 21);
  CHECK(a.front() == 0.0);
  CHECK(a.back() == 0.0);
  CHECK(a[10] == doctest::Approx(4 * pi).epsilon(1e-12));
  double eps = epsilon_mesh(*s.mesh);
  for (int i = 1; i < 20; ++i) {
    double t = s.t[i];
    CHECK(std::abs(a[i] - 4 * pi * (1 - t * t)) < eps * (1 - t * t));
    // Lipschitz in t with the smooth bound 8 pi.
    CHECK(std::abs(a[i + 1] - a[i]) <= 8 * pi * (s.t[i + 1] - s.t[i]) * 1.05);
  }
  CHECK_THROWS_AS(slice_surface(s, 0), Error);
  CHECK_THROWS_AS(slice_surface(s, 20), Error);
  CHECK_THROWS_AS(standard_sweepout(AmbientModel::euclidean(3), 21, 2), Error);
  CHECK_THROWS_AS(standard_sweepout(AmbientModel::round_sphere(3), 2, 2), Error);
}

TEST_CASE("L of the standard sweep-out") {
  WidthReport r = evaluate_L(standard_sweepout(AmbientModel::round_sphere(3), 41, 3));
  CHECK(std::abs(r.l_value / (4 * pi) - 1) < 1e-2);
  CHECK(r.argmax_t == doctest::Approx(0.0));
  for (double x : r.areas) CHECK(r.l_value >= x);
  for (double c : {-0.3, 0.2}) {
    ConformalSpec spec;
    spec.kind = ConformalSpec::Kind::Constant;
    spec.value = c;
    WidthReport rc = evaluate_L(standard_sweepout(width_metric(spec), 41, 3));
    CHECK(std::abs(rc.l_value / (4 * pi * std::exp(2 * c)) - 1) < 1e-2);
  }
}

TEST_CASE("L is invariant under monotone reparametrization of the slices") {
  SweepOut s = standard_sweepout(AmbientModel::round_sphere(3), 31, 2);
  std::mt19937_64 rng(4);
  s.params = random_params(rng, 0.2);
  double direct = 0.0;
  for (int i = 1; i + 1 < s.num_slices(); ++i) direct = std::max(direct, area(slice_surface(s, i)));
  CHECK(evaluate_L(s).l_value >= direct);
  // Slices indexed by u with t = sin(pi u / 2), sampled at u = asin(t_i) 2 / pi.
  SweepOut warped = s;
  for (double& t : warped.t) {
    double u = std::asin(t) * 2 / pi;
    t = std::sin(pi * u / 2);
  }
  CHECK(evaluate_L(warped).l_value == doctest::Approx(evaluate_L(s).l_value).epsilon(1e-12));
}

TEST_CASE("randomized sweep-outs on round S^3 stay above 4 pi") {
  std::mt19937_64 rng(99);
  SweepOut s = standard_sweepout(AmbientModel::round_sphere(3), 41, 3);
  double eps = epsilon_mesh(*s.mesh);
  int resolved = 0;
  for (int trial = 0; trial < 10; ++trial) {
    s.params = random_params(rng, 0.3);
    try {
      WidthReport r = evaluate_L(s);
      CHECK(r.l_value >= 4 * pi - eps);
      ++resolved;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateMesh);
    }
  }
  CHECK(resolved >= 5);
}

TEST_CASE("strongly stretched slices are rejected as under-resolved") {
  SweepOut s = standard_sweepout(AmbientModel::round_sphere(3), 41, 3);
  s.params << 0.48, 0.48, 0.48, 0.0, 2.513, 2.513, 2.513, 0.0, 0.0, 0.0, 0.0, 0.8;
  try {
    evaluate_L(s);
    FAIL("expected an under-resolved slice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateMesh);
    CHECK(std::string(e.what()).find("under-resolved") != std::string::npos);
  }
}

TEST_CASE("degenerate slices name the slice") {
  SweepOut s = standard_sweepout(AmbientModel::round_sphere(3), 11, 2);
  s.params(10) = 30.0;
  try {
    slice_areas(s);
    FAIL("expected a degenerate slice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateMesh);
    CHECK(std::string(e.what()).find("slice") != std::string::npos);
  }
}

TEST_CASE("optimizer with budget 1 returns the standard sweep-out") {
  WidthOptions opt;
  opt.budget = 1;
  WidthReport r = optimize_width_upper(AmbientModel::round_sphere(3), sweep_lower_bounds(),
                                       sweep_upper_bounds(), opt);
  WidthReport s = evaluate_L(standard_sweepout(AmbientModel::round_sphere(3), opt.n_t, opt.mesh_level));
  CHECK(r.l_value == s.l_value);
  CHECK(r.evaluations == 1);
  CHECK(r.params.isZero());
  REQUIRE(r.trace.size() == 1);
}

TEST_CASE("optimizer cannot beat 4 pi on the round metric") {
  WidthOptions opt;
  opt.budget = 60;
  opt.seed = 17;
  WidthReport r = optimize_width_upper(AmbientModel::round_sphere(3), sweep_lower_bounds(),
                                       sweep_upper_bounds(), opt);
  double eps = epsilon_mesh(*build_icosphere(opt.mesh_level));
  CHECK(r.l_value >= 4 * pi - eps);
  CHECK(r.l_value <= 4 * pi * 1.01);
  CHECK(r.evaluations == 60);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].l_value <= r.trace[i - 1].l_value);
}

TEST_CASE("optimizer finds a cheaper neck for a band metric") {
  ConformalSpec spec;
  spec.kind = ConformalSpec::Kind::GaussianBand;
  spec.amplitude = -1.0;
  spec.width = 0.3;
  spec.axis = 0;
  AmbientModel metric = width_metric(spec);
  WidthOptions opt;
  opt.budget = 80;
  opt.seed = 3;
  WidthReport standard = evaluate_L(standard_sweepout(metric, opt.n_t, opt.mesh_level));
  WidthReport best = optimize_width_upper(metric, sweep_lower_bounds(), sweep_upper_bounds(), opt);
  CHECK(best.l_value < standard.l_value);
  MESSAGE("band metric: standard " << standard.l_value << ", optimized " << best.l_value);

  WidthReport again = optimize_width_upper(metric, sweep_lower_bounds(), sweep_upper_bounds(), opt);
  CHECK(again.l_value == best.l_value);
  CHECK(again.params == best.params);

  auto path = std::filesystem::temp_directory_path() / "sphereflow_width_trace.csv";
  write_width_trace_csv(path, best);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,p0,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10,p11,L");
  std::filesystem::remove(path);
}

TEST_CASE("width configuration errors") {
  ConformalSpec bad;
  bad.kind = ConformalSpec::Kind::GaussianBand;
  bad.width = 0.0;
  CHECK_THROWS_AS(width_metric(bad), Error);
  WidthOptions opt;
  opt.budget = 0;
  CHECK_THROWS_AS(optimize_width_upper(AmbientModel::round_sphere(3), sweep_lower_bounds(),
                                       sweep_upper_bounds(), opt),
                  Error);
}
