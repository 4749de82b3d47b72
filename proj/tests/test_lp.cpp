#include "doctest.h"

#include <random>

#include "feasopf/errors.hpp"
#include "feasopf/lp.hpp"
#include "oracles/random_lp.hpp"
#include "oracles/vertex_enum.hpp"

using namespace feasopf;

TEST_CASE("single lower bound") {
  LinearProgram lp = LinearProgram::with_variables(1);
  lp.c << 1.0;
  lp.lb << 3.0;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.x(0) == doctest::Approx(3.0));
  CHECK(sol.objective == doctest::Approx(3.0));
}

TEST_CASE("simplex edge") {
  LinearProgram lp = LinearProgram::with_variables(2);
  lp.c << -1.0, -1.0;
  lp.A_ub.resize(1, 2);
  lp.A_ub << 1.0, 1.0;
  lp.b_ub.resize(1);
  lp.b_ub << 1.0;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.x.sum() == doctest::Approx(1.0));
}

TEST_CASE("infeasible and unbounded statuses") {
  SUBCASE("contradictory rows") {
    LinearProgram lp = LinearProgram::with_variables(1);
    lp.A_ub.resize(1, 1);
    lp.A_ub << 1.0;
    lp.b_ub.resize(1);
    lp.b_ub << -1.0;
    CHECK(solve_lp(lp).status == LpStatus::kInfeasible);
  }
  SUBCASE("crossed bounds") {
    LinearProgram lp = LinearProgram::with_variables(1);
    lp.lb << 2.0;
    lp.ub << 1.0;
    CHECK(solve_lp(lp).status == LpStatus::kInfeasible);
  }
  SUBCASE("free direction") {
    LinearProgram lp = LinearProgram::with_variables(2);
    lp.c << -1.0, 0.0;
    lp.lb.setConstant(-kInf);
    lp.A_eq.resize(1, 2);
    lp.A_eq << 0.0, 1.0;
    lp.b_eq.resize(1);
    lp.b_eq << 2.0;
    CHECK(solve_lp(lp).status == LpStatus::kUnbounded);
  }
}

TEST_CASE("dimension mismatch is a validation error") {
  LinearProgram lp = LinearProgram::with_variables(2);
  lp.A_ub = Eigen::MatrixXd::Ones(1, 3);
  lp.b_ub = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(solve_lp(lp), ValidationError);
}

TEST_CASE("upper-bounded and mirrored variables") {
  // max x + y with x <= 2, y in (-inf, 1]
  LinearProgram lp = LinearProgram::with_variables(2);
  lp.c << -1.0, -1.0;
  lp.ub << 2.0, 1.0;
  lp.lb << 0.0, -kInf;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.x(0) == doctest::Approx(2.0));
  CHECK(sol.x(1) == doctest::Approx(1.0));
}

TEST_CASE("redundant equality rows") {
  LinearProgram lp = LinearProgram::with_variables(2);
  lp.c << 1.0, 2.0;
  lp.A_eq.resize(2, 2);
  lp.A_eq << 1.0, 1.0, 2.0, 2.0;
  lp.b_eq.resize(2);
  lp.b_eq << 1.0, 2.0;
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(1.0));
  CHECK(sol.residuals.within(1e-10));
}

TEST_CASE("random programs agree with vertex enumeration") {
  std::mt19937_64 rng(20240611);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    const int n_eq = t % 3 == 0 ? 1 : 0;
    const int n_ub = 3 + (t * 7) % (8 - n_eq);
    const LinearProgram lp = oracle::random_lp(rng, n, n_ub, n_eq);
    const auto expected = oracle::enumerate_vertices(lp);
    REQUIRE(expected.has_value());
    for (PricingRule rule : {PricingRule::kDantzigBland, PricingRule::kBland}) {
      SimplexOptions opt;
      opt.pricing = rule;
      const LpSolution sol = solve_lp(lp, opt);
      REQUIRE(sol.optimal());
      CHECK(sol.objective == doctest::Approx(expected->objective).epsilon(1e-8).scale(1.0));
      CHECK(sol.residuals.within(1e-8));
    }
  }
}

TEST_CASE("deterministic output") {
  std::mt19937_64 rng(5);
  const LinearProgram lp = oracle::random_lp(rng, 5, 7, 1);
  const LpSolution a = solve_lp(lp);
  const LpSolution b = solve_lp(lp);
  CHECK(a.iterations == b.iterations);
  CHECK((a.x.array() == b.x.array()).all());
}
