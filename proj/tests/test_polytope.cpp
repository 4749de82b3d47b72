#include "doctest.h"

#include <random>

#include "feasopf/errors.hpp"
#include "feasopf/polytope.hpp"
#include "oracles/bisection_gauge.hpp"
#include "random_sets.hpp"

using namespace feasopf;

TEST_CASE("unit infinity ball") {
  const PolyhedralCSet box = unit_inf_ball(2);
  Eigen::MatrixXd expected(4, 2);
  expected << 1, 0, -1, 0, 0, 1, 0, -1;
  CHECK(box.A() == expected);
  CHECK(box.b() == Eigen::VectorXd::Ones(4));
  CHECK(gauge(box, Eigen::Vector2d(0.5, -0.25)) == 0.5);
  CHECK(gauge(box, Eigen::Vector2d(1.0, 1.0)) == 1.0);
  CHECK(gauge(box, Eigen::Vector2d::Zero()) == 0.0);
  CHECK(gauge(unit_inf_ball(3), Eigen::Vector3d(0.2, -0.7, 0.1)) == doctest::Approx(0.7));
  CHECK_THROWS_AS(unit_inf_ball(0), ValidationError);
}

TEST_CASE("contains") {
  const PolyhedralCSet box = unit_inf_ball(2);
  CHECK(contains(box, Eigen::Vector2d::Zero(), 0.0));
  CHECK(contains(box, Eigen::Vector2d(1.0, -1.0), 0.0));
  CHECK_FALSE(contains(box, Eigen::Vector2d(1.0 + 1e-3, 0.0), 1e-6));
  CHECK_THROWS_AS(contains(box, Eigen::Vector3d::Zero(), 0.0), ValidationError);
}

TEST_CASE("C-set construction rejects a nonpositive right-hand side") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(PolyhedralCSet(A, Eigen::Vector2d(1.0, 0.0)), ValidationError);
  CHECK_THROWS_AS(PolyhedralCSet(A, Eigen::Vector3d::Ones()), ValidationError);
}

TEST_CASE("gauge matches bisection oracle and is homogeneous") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 4;
    const PolyhedralCSet P = testsets::random_cset(rng, n);
    for (int s = 0; s < 10; ++s) {
      const Eigen::VectorXd z = testsets::random_vector(rng, n, 3.0);
      const double g = gauge(P, z);
      CHECK(std::abs(g - oracle::bisection_gauge(P, z)) <= 1e-9 * std::max(1.0, g));
      const double lambda = std::uniform_real_distribution<double>(0.0, 4.0)(rng);
      CHECK(std::abs(gauge(P, lambda * z) - lambda * g) <= 1e-12 * std::max(1.0, lambda * g));
      // membership characterization
      CHECK(contains(P, z, 0.0) == (g <= 1.0));
    }
  }
}

TEST_CASE("gauge map examples") {
  const PolyhedralCSet box = unit_inf_ball(2);
  const PolyhedralCSet twice(box.A(), 2.0 * box.b());
  const Eigen::Vector2d z(0.3, -0.9);
  const GaugeMapResult same = gauge_map(z, box, box);
  CHECK((same.image - z).norm() < 1e-15);
  const GaugeMapResult scaled = gauge_map(z, box, twice);
  CHECK(scaled.image(0) == doctest::Approx(0.6));
  CHECK(scaled.image(1) == doctest::Approx(-1.8));
  CHECK(scaled.scale == doctest::Approx(2.0));
  CHECK(scaled.active_p == 3);

  const GaugeMapResult origin = gauge_map(Eigen::Vector2d::Zero(), box, twice);
  CHECK(origin.image.isZero(0.0));

  CHECK_THROWS_AS(gauge_map(Eigen::Vector2d(1.1, 0.0), box, twice), ValidationError);
  CHECK_NOTHROW(gauge_map(Eigen::Vector2d(1.0 + 5e-13, 0.0), box, twice));
  CHECK_THROWS_AS(gauge_map(Eigen::Vector3d::Zero(), box, twice), ValidationError);
  CHECK_THROWS_AS(gauge_map(Eigen::Vector2d::Zero(), box, unit_inf_ball(3)), ValidationError);
}

TEST_CASE("gauge map level preservation and bijection") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    const PolyhedralCSet box = unit_inf_ball(n);
    const PolyhedralCSet Q = testsets::random_cset(rng, n);
    for (int s = 0; s < 50; ++s) {
      const Eigen::VectorXd u = testsets::random_vector(rng, n, 1.0);
      const GaugeMapResult g = gauge_map(u, box, Q);
      CHECK(contains(Q, g.image, 1e-9));
      CHECK(std::abs(gauge(Q, g.image) - u.cwiseAbs().maxCoeff()) <= 1e-9);
      const GaugeMapResult back = gauge_map(g.image, Q, box);
      CHECK((back.image - u).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("gauge map vjp") {
  const PolyhedralCSet box = unit_inf_ball(3);
  const PolyhedralCSet twice(box.A(), 2.0 * box.b());
  const Eigen::Vector3d z(0.2, -0.5, 0.1);
  const Eigen::Vector3d v(1.0, 2.0, -3.0);
  CHECK((gauge_map_vjp(z, box, box, v) - v).norm() < 1e-14);
  CHECK((gauge_map_vjp(z, box, twice, v) - 2.0 * v).norm() < 1e-14);
  CHECK(gauge_map_vjp(Eigen::Vector3d::Zero(), box, twice, v).isZero(0.0));

  std::mt19937_64 rng(13);
  int checked = 0;
  while (checked < 100) {
    const int n = 2 + checked % 4;
    const PolyhedralCSet P = unit_inf_ball(n);
    const PolyhedralCSet Q = testsets::random_cset(rng, n);
    const Eigen::VectorXd z = testsets::random_vector(rng, n, 0.95);
    if (testsets::near_tie(P, z, 1e-8) || testsets::near_tie(Q, z, 1e-8)) continue;
    const Eigen::VectorXd v = testsets::random_vector(rng, n, 1.0);
    const Eigen::VectorXd analytic = gauge_map_vjp(z, P, Q, v);
    Eigen::VectorXd fd(n);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = v.dot(gauge_map(zp, P, Q).image - gauge_map(zm, P, Q).image) / (2 * h);
    }
    CHECK((analytic - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    ++checked;
  }
}
