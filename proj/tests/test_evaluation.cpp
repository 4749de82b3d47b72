#include "doctest.h"

#include <atomic>
#include <chrono>
#include <random>
#include <stdexcept>
#include <thread>

#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/evaluation.hpp"
#include "feasopf/scenario.hpp"
#include "test_cases.hpp"

using namespace feasopf;
using Eigen::VectorXd;

TEST_CASE("zero loads and zero decision cost nothing") {
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  for (Application app : {Application::kRld, Application::kReserve}) {
    const DispatchContext ctx(net, app);
    FirstStageDecision d{VectorXd::Zero(6), {}, {}};
    if (app == Application::kReserve) d.r_up = d.r_dn = VectorXd::Zero(6);
    CHECK(out_of_sample_cost(ctx, d, {VectorXd::Zero(6), VectorXd::Zero(6)}) == 0.0);
  }
}

TEST_CASE("benchmark decision scored on its own scenarios reproduces the extensive objective") {
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  const auto scen = gen_realizations(net.nominal_load, 8, 4);
  const DispatchContext rld(net, Application::kRld), res(net, Application::kReserve);
  const auto a = solve_extensive_rld(net, rld.ops, scen);
  CHECK(out_of_sample_cost(rld, {a.p0, {}, {}}, scen) == doctest::Approx(a.objective).epsilon(1e-7));
  const auto b = solve_extensive_reserve(net, res.ops, scen);
  CHECK(out_of_sample_cost(res, {b.p0, b.r_up, b.r_dn}, scen) == doctest::Approx(b.objective).epsilon(1e-7));
}

TEST_CASE("out-of-sample cost is convex in the decision") {
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  const auto scen = gen_realizations(net.nominal_load, 10, 5);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Application app : {Application::kRld, Application::kReserve}) {
    const DispatchContext ctx(net, app);
    auto random_decision = [&] {
      FirstStageDecision d;
      d.p0 = VectorXd::Zero(6);
      for (int g : net.gen_buses) d.p0(g) = u(rng) * net.p_max(g);
      if (app == Application::kReserve) {
        d.r_up = d.r_dn = VectorXd::Zero(6);
        for (int g : net.gen_buses) {
          d.r_up(g) = u(rng) * (net.p_max(g) - d.p0(g));
          d.r_dn(g) = u(rng) * d.p0(g);
        }
      }
      return d;
    };
    for (int t = 0; t < 10; ++t) {
      const FirstStageDecision x = random_decision(), y = random_decision();
      FirstStageDecision m{(x.p0 + y.p0) / 2, {}, {}};
      if (app == Application::kReserve) {
        m.r_up = (x.r_up + y.r_up) / 2;
        m.r_dn = (x.r_dn + y.r_dn) / 2;
      }
      CHECK(out_of_sample_cost(ctx, m, scen) <=
            (out_of_sample_cost(ctx, x, scen) + out_of_sample_cost(ctx, y, scen)) / 2 + 1e-8);
    }
  }
}

TEST_CASE("comparison table") {
  const MethodResult bench{"extensive", {100.0, 300.0}, {2.0, 4.0}, {false, false}};
  const MethodResult other{"affine", {150.0, 330.0}, {0.5, 0.5}, {true, false}};
  SUBCASE("benchmark alone is 100") {
    const auto rows = compare({bench});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ratio_pct == 100.0);
    CHECK(rows[0].mean_time_s == 3.0);
  }
  SUBCASE("ratio of means, not mean of ratios") {
    const auto rows = compare({bench, other});
    CHECK(rows[1].ratio_pct == doctest::Approx(120.0));  // 240 / 200
    CHECK(rows[1].infeasible == 1);
    const auto parsed = parse_comparison_csv(comparison_csv(rows));
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[1].method == "affine");
    CHECK(parsed[1].mean_cost == rows[1].mean_cost);
    CHECK(parsed[1].ratio_pct == rows[1].ratio_pct);
    CHECK(comparison_csv(rows).rfind("method,mean_cost,ratio_pct,mean_time_s\n", 0) == 0);
    const std::string md = comparison_markdown(rows);
    CHECK(md.find("| affine") != std::string::npos);
    CHECK(md.find("8.333e-03") != std::string::npos);  // 0.5 s in minutes
  }
  SUBCASE("missing benchmark or mismatched sizes") {
    CHECK_THROWS_AS(compare({other}), ValidationError);
    const MethodResult short_one{"proposed", {1.0}, {0.0}, {false}};
    CHECK_THROWS_AS(compare({bench, short_one}), ValidationError);
  }
}

TEST_CASE("time_method") {
  CHECK(time_method([] {}) >= 0.0);
  CHECK(time_method([] {}) < 1e-3);
  const double t = time_method([] { std::this_thread::sleep_for(std::chrono::milliseconds(200)); });
  CHECK(t >= 0.2);
  CHECK(t <= 0.22);
}

TEST_CASE("parallel_for") {
  std::vector<double> a(1000), b(1000);
  auto work = [](std::vector<double>& out) {
    return [&out](std::size_t i) { out[i] = std::sqrt(static_cast<double>(i)) * 3.0; };
  };
  parallel_for(a.size(), 1, work(a));
  parallel_for(b.size(), 8, work(b));
  CHECK(a == b);
  std::atomic<int> calls{0};
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [&](std::size_t i) {
                                 ++calls;
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}
