#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sphereflow/ambient.hpp"

using namespace sphereflow;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Vec random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = g(rng);
  return v.normalized();
}

Vec random_tangent(std::mt19937_64& rng, const Vec& p) {
  std::normal_distribution<double> g;
  Vec v(p.size());
  for (int i = 0; i < p.size(); ++i) v(i) = g(rng);
  return v - v.dot(p) * p;
}

}  // namespace

TEST_CASE("exp on round spheres") {
  auto s2 = AmbientModel::round_sphere(2);
  Vec q = exp_map(s2, vec({1, 0, 0}), vec({0, M_PI / 2, 0}));
  CHECK((q - vec({0, 1, 0})).norm() < 1e-15);
  CHECK((exp_map(s2, vec({1, 0, 0}), vec({0, 0, 0})) - vec({1, 0, 0})).norm() == 0.0);

  auto s3 = AmbientModel::round_sphere(3);
  Vec r = exp_map(s3, vec({1, 0, 0, 0}), vec({0, 0.3, 0, 0}));
  CHECK(r(0) == doctest::Approx(std::cos(0.3)).epsilon(1e-15));
  CHECK(r(1) == doctest::Approx(std::sin(0.3)).epsilon(1e-15));
  CHECK(std::abs(r.norm() - 1.0) < 1e-12);
}

TEST_CASE("exp rejects non-tangent vectors") {
  auto s2 = AmbientModel::round_sphere(2);
  try {
    exp_map(s2, vec({1, 0, 0}), vec({0.1, 1, 0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }
}

TEST_CASE("log inverts exp") {
  auto s2 = AmbientModel::round_sphere(2);
  CHECK(log_map(s2, vec({1, 0, 0}), vec({1, 0, 0})).norm() == 0.0);
  Vec l = log_map(s2, vec({1, 0, 0}), vec({0, 1, 0}));
  CHECK((l - vec({0, M_PI / 2, 0})).norm() < 1e-12);

  std::mt19937_64 rng(7);
  for (int n : {2, 3, 5}) {
    auto m = AmbientModel::round_sphere(n);
    for (int trial = 0; trial < 50; ++trial) {
      Vec p = random_unit(rng, n + 1);
      Vec v = random_tangent(rng, p);
      v *= 0.7 / v.norm();
      Vec back = log_map(m, p, exp_map(m, p, v));
      CHECK((back - v).norm() < 1e-9);
      CHECK(std::abs(m.distance(p, exp_map(m, p, v)) - 0.7) < 1e-12);
    }
  }
}

TEST_CASE("log of antipodal points is a domain error") {
  auto s2 = AmbientModel::round_sphere(2);
  try {
    log_map(s2, vec({1, 0, 0}), vec({-1, 0, 0}));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
}

TEST_CASE("curvature normalization and symmetries") {
  auto s3 = AmbientModel::round_sphere(3);
  Vec p = vec({1, 0, 0, 0});
  CHECK(riemann(s3, p, vec({0, 1, 0, 0}), vec({0, 0, 1, 0}), vec({0, 1, 0, 0}),
                vec({0, 0, 1, 0})) == doctest::Approx(1.0).epsilon(1e-15));

  auto r3 = AmbientModel::euclidean(3);
  CHECK(riemann(r3, vec({0.2, 1, 3}), vec({1, 0, 0}), vec({0, 1, 0}), vec({1, 0, 0}),
                vec({0, 1, 0})) == 0.0);

  std::mt19937_64 rng(11);
  for (int n : {3, 4, 6}) {
    auto m = AmbientModel::round_sphere(n);
    for (int trial = 0; trial < 40; ++trial) {
      Vec q = random_unit(rng, n + 1);
      Vec x = random_tangent(rng, q), y = random_tangent(rng, q);
      Vec z = random_tangent(rng, q), w = random_tangent(rng, q);
      double rxyzw = riemann(m, q, x, y, z, w);
      CHECK(std::abs(rxyzw + riemann(m, q, y, x, z, w)) < 1e-12);
      CHECK(std::abs(rxyzw + riemann(m, q, x, y, w, z)) < 1e-12);
      CHECK(std::abs(rxyzw - riemann(m, q, z, w, x, y)) < 1e-12);
      double bianchi = rxyzw + riemann(m, q, y, z, x, w) + riemann(m, q, z, x, y, w);
      CHECK(std::abs(bianchi) < 1e-12);

      // Orthonormal pair: sectional curvature and the pair-exchanged value.
      Vec e = x.normalized();
      Vec v = (y - y.dot(e) * e).normalized();
      CHECK(std::abs(sectional_curvature(m, q, x, y) - 1.0) < 1e-12);
      CHECK(std::abs(riemann(m, q, e, v, e, v) - 1.0) < 1e-12);
      CHECK(std::abs(riemann(m, q, e, v, v, e) + 1.0) < 1e-12);
    }
  }
}

TEST_CASE("parallel transport is an isometry") {
  auto s2 = AmbientModel::round_sphere(2);
  Vec p = vec({1, 0, 0});
  Vec v = vec({0, 0.3, -0.7});
  CHECK((parallel_transport(s2, p, p, v) - v).norm() < 1e-15);

  std::mt19937_64 rng(3);
  for (int n : {2, 4}) {
    auto m = AmbientModel::round_sphere(n);
    for (int trial = 0; trial < 40; ++trial) {
      Vec a = random_unit(rng, n + 1);
      Vec step = random_tangent(rng, a);
      Vec b = exp_map(m, a, step * (2.5 / step.norm()));
      Vec x = random_tangent(rng, a), y = random_tangent(rng, a);
      Vec px = parallel_transport(m, a, b, x), py = parallel_transport(m, a, b, y);
      CHECK(std::abs(px.dot(b)) < 1e-12);
      CHECK(std::abs(px.dot(py) - x.dot(y)) < 1e-10);
      CHECK(std::abs(px.dot(px) - x.dot(x)) < 1e-10);
      CHECK((parallel_transport(m, b, a, px) - x).norm() < 1e-10);
    }
  }
}

TEST_CASE("holonomy of the octant triangle") {
  // The geodesic triangle with three right angles encloses area pi/2, so a
  // vector carried around it comes back rotated by pi/2.
  auto s2 = AmbientModel::round_sphere(2);
  Vec a = vec({1, 0, 0}), b = vec({0, 1, 0}), c = vec({0, 0, 1});
  Vec v0 = vec({0, 1, 0});
  Vec v = parallel_transport(s2, a, b, v0);
  v = parallel_transport(s2, b, c, v);
  v = parallel_transport(s2, c, a, v);
  CHECK(std::abs(v.norm() - 1.0) < 1e-12);
  CHECK(std::abs(v.dot(v0)) < 1e-12);
  CHECK(std::abs(std::acos(std::clamp(v.dot(v0), -1.0, 1.0)) - M_PI / 2) < 1e-12);
}

TEST_CASE("exp differential matches finite differences") {
  auto s3 = AmbientModel::round_sphere(3);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec p = random_unit(rng, 4);
    Vec w = random_tangent(rng, p);
    w *= 0.9 / w.norm();
    Vec d = random_tangent(rng, p);
    const double e = 1e-6;
    Vec fd = (exp_map(s3, p, w + e * d) - exp_map(s3, p, w - e * d)) / (2 * e);
    CHECK((exp_differential(s3, p, w, d) - fd).norm() < 1e-7);
  }
}

TEST_CASE("conformal model exposes only metric data") {
  auto m = AmbientModel::conformal_sphere3([](const AmbientPoint& p) { return 0.5 * p(3); });
  Vec p = vec({0, 0, 0, 1});
  CHECK(m.area_density(p) == doctest::Approx(std::exp(1.0)));
  CHECK_THROWS_AS(exp_map(m, p, vec({0.1, 0, 0, 0})), Error);
}
