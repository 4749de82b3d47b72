#include "doctest.h"

#include <random>

#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/scenario.hpp"
#include "oracles/naive_extensive.hpp"
#include "oracles/vertex_enum.hpp"
#include "test_cases.hpp"

using namespace feasopf;
using Eigen::VectorXd;

namespace {

// Second-stage RLD value from the vertex oracle.
double oracle_value(const LinearProgram& lp) {
  const auto best = oracle::enumerate_vertices(lp);
  REQUIRE(best.has_value());
  return best->objective;
}

VectorXd vec2(double a, double b) { return (VectorXd(2) << a, b).finished(); }

}  // namespace

TEST_CASE("second stage rld: zero net demand") {
  const PowerNetwork net = testcases::three_bus();
  const AngleOperators ops = build_operators(net);
  const auto r = second_stage_rld(net, ops, VectorXd::Zero(3));
  CHECK(std::abs(r.cost) <= 1e-9);
  CHECK(r.p_recourse.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(r.theta.cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("second stage rld: two bus against the vertex oracle") {
  PowerNetwork net = testcases::two_bus();
  net.beta = vec2(1.0, 2.0);
  const AngleOperators ops = build_operators(net);
  for (double load : {5.0, 10.0, 15.0}) {
    CAPTURE(load);
    const VectorXd nd = vec2(0.0, load);
    const auto r = second_stage_rld(net, ops, nd);
    CHECK(r.cost == doctest::Approx(oracle_value(build_second_stage_rld(net, ops, nd))).epsilon(1e-10));
    // cheap bus 1 serves up to the 10 MW line limit, bus 2 covers the rest
    CHECK(r.cost == doctest::Approx(std::min(load, 10.0) + 2.0 * std::max(0.0, load - 10.0)));
  }
  // price homogeneity
  const VectorXd nd = vec2(-3.0, 12.0);
  const double base = second_stage_rld(net, ops, nd).cost;
  net.beta *= 10.0;
  CHECK(second_stage_rld(net, ops, nd).cost == doctest::Approx(10.0 * base).epsilon(1e-10));
}

TEST_CASE("second stage rld is convex in net demand") {
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  const AngleOperators ops = build_operators(net);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 60.0);
  for (int t = 0; t < 20; ++t) {
    VectorXd a(6), b(6);
    for (int i = 0; i < 6; ++i) a(i) = nd(rng), b(i) = nd(rng);
    const double mid = second_stage_rld(net, ops, 0.5 * (a + b)).cost;
    CHECK(mid <= 0.5 * (second_stage_rld(net, ops, a).cost + second_stage_rld(net, ops, b).cost) + 1e-8);
  }
}

TEST_CASE("second stage reserve") {
  PowerNetwork net = testcases::two_bus();
  net.gamma_res = vec2(3.0, 5.0);
  const AngleOperators ops = build_operators(net);
  SUBCASE("zero net demand costs nothing") {
    CHECK(second_stage_reserve(net, ops, VectorXd::Zero(2), vec2(1, 2), vec2(0, 3)).cost == doctest::Approx(0.0));
  }
  SUBCASE("binding line against the vertex oracle") {
    const VectorXd nd = vec2(-2.0, 14.0), up = vec2(1.0, 0.5), dn = vec2(0.5, 0.0);
    const auto r = second_stage_reserve(net, ops, nd, up, dn);
    CHECK(r.cost == doctest::Approx(oracle_value(build_second_stage_reserve(net, ops, nd, up, dn))).epsilon(1e-10));
  }
  SUBCASE("no reserves: gamma-weighted absolute recourse") {
    const VectorXd nd = vec2(4.0, 7.0);
    const auto r = second_stage_reserve(net, ops, nd, VectorXd::Zero(2), VectorXd::Zero(2));
    CHECK(r.cost == doctest::Approx(net.gamma_res.dot(r.p_recourse.cwiseAbs())).epsilon(1e-10));
    CHECK(r.cost == doctest::Approx(3.0 * 11.0));  // everything from the cheaper bus, 7 MW over the line
  }
}

TEST_CASE("extensive rld") {
  PowerNetwork net = testcases::two_bus();
  const AngleOperators ops = build_operators(net);
  SUBCASE("zero load") {
    const auto r = solve_extensive_rld(net, ops, {VectorXd::Zero(2)});
    CHECK(r.objective == doctest::Approx(0.0));
    CHECK(r.p0.cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.solve_seconds >= 0.0);
  }
  SUBCASE("single scenario moves procurement to stage one when alpha < beta") {
    const std::vector<VectorXd> scen{vec2(3.0, 8.0)};
    const auto r = solve_extensive_rld(net, ops, scen);
    CHECK(r.objective == doctest::Approx(oracle_value(build_extensive_rld(net, ops, scen))).epsilon(1e-10));
    CHECK(r.objective == doctest::Approx(11.0));  // alpha = 1 for all 11 MW
    CHECK(r.p0.sum() == doctest::Approx(11.0));
  }
  SUBCASE("relaxing flow limits never hurts") {
    const PowerNetwork c6 = load_case(testcases::case_path("case6.json"));
    const auto scen = gen_realizations(c6.nominal_load * 1.4, 4, 11);
    double prev = kInf;
    for (double factor : {0.6, 1.0, 2.0}) {
      PowerNetwork relaxed = c6;
      for (auto& l : relaxed.lines) l.flow_limit *= factor;
      const double obj = solve_extensive_rld(relaxed, build_operators(relaxed), scen).objective;
      CHECK(obj <= prev + 1e-8);
      prev = obj;
    }
  }
}

TEST_CASE("extensive reserve") {
  SUBCASE("zero loads") {
    const PowerNetwork net = testcases::three_bus();
    const auto r = solve_extensive_reserve(net, build_operators(net), {VectorXd::Zero(3), VectorXd::Zero(3)});
    CHECK(r.objective == doctest::Approx(0.0));
    CHECK((r.p0.cwiseAbs().maxCoeff() + r.r_up.cwiseAbs().maxCoeff() + r.r_dn.cwiseAbs().maxCoeff()) <= 1e-9);
  }
  SUBCASE("three bus, five scenarios against an independently assembled program") {
    const PowerNetwork net = load_case(testcases::case_path("case3.json"));
    const AngleOperators ops = build_operators(net);
    const auto scen = gen_realizations(net.nominal_load, 5, 21, 0.2);
    const auto r = solve_extensive_reserve(net, ops, scen);
    const LpSolution o = solve_lp(oracle::naive_extensive_reserve(net, ops, scen));
    REQUIRE(o.optimal());
    CHECK(r.objective == doctest::Approx(o.objective).epsilon(1e-8));
    // first-stage coupling
    CHECK((r.p0 + r.r_up - net.p_max).maxCoeff() <= 1e-8);
    CHECK((r.r_dn - r.p0).maxCoeff() <= 1e-8);
    CHECK(r.r_up.minCoeff() >= -1e-8);
    CHECK(r.r_dn.minCoeff() >= -1e-8);
  }
  SUBCASE("expensive penalties buy reserves that cover the deviations") {
    PowerNetwork net = testcases::two_bus();
    net.gamma_res = VectorXd::Constant(2, 1000.0);
    net.alpha = VectorXd::Constant(2, 1.0);
    net.mu = VectorXd::Constant(2, 0.1);
    const auto r = solve_extensive_reserve(net, build_operators(net), {vec2(0.0, 4.0), vec2(0.0, 6.0)});
    // a 2 MW swing around 5 MW is cheaper to reserve than to penalize
    CHECK(r.r_up.sum() + r.r_dn.sum() >= 1.0 - 1e-8);
    CHECK((r.p0 + r.r_up - net.p_max).maxCoeff() <= 1e-8);
  }
}

TEST_CASE("decomposition identity") {
  for (const char* name : {"case3.json", "case6.json"}) {
    CAPTURE(name);
    const PowerNetwork net = load_case(testcases::case_path(name));
    const AngleOperators ops = build_operators(net);
    const auto scen = gen_realizations(net.nominal_load, 6, 5);
    const auto rld = solve_extensive_rld(net, ops, scen);
    double sum = net.alpha.dot(rld.p0);
    for (const auto& d : scen) sum += second_stage_rld(net, ops, d - rld.p0).cost / scen.size();
    CHECK(sum == doctest::Approx(rld.objective).epsilon(1e-7));
    const auto res = solve_extensive_reserve(net, ops, scen);
    sum = net.alpha.dot(res.p0) + net.mu.dot(res.r_up + res.r_dn);
    for (const auto& d : scen) sum += second_stage_reserve(net, ops, d - res.p0, res.r_up, res.r_dn).cost / scen.size();
    CHECK(sum == doctest::Approx(res.objective).epsilon(1e-7));
  }
}

TEST_CASE("symmetric scenarios: extensive equals first stage plus mean recourse") {
  // identical scenarios make the same p0 optimal for each one
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  const AngleOperators ops = build_operators(net);
  const std::vector<VectorXd> same(3, net.nominal_load);
  const auto one = solve_extensive_rld(net, ops, {net.nominal_load});
  const auto three = solve_extensive_rld(net, ops, same);
  CHECK(three.objective == doctest::Approx(one.objective).epsilon(1e-9));
}

TEST_CASE("dispatch validation") {
  const PowerNetwork net = testcases::two_bus();
  const AngleOperators ops = build_operators(net);
  CHECK_THROWS_AS(second_stage_rld(net, ops, VectorXd::Zero(3)), ValidationError);
  CHECK_THROWS_AS(solve_extensive_rld(net, ops, {}), ValidationError);
}
