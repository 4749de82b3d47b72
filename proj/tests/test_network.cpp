#include "doctest.h"

#include <random>

#include "feasopf/errors.hpp"
#include "feasopf/network.hpp"
#include "feasopf/polytope.hpp"
#include "test_cases.hpp"

using namespace feasopf;

namespace {

// Incidence-matrix oracle: A is M x N with +1/-1 per line, so the full
// injection matrix is A^T diag(b) A and the full flow matrix is diag(b) A.
void incidence_oracle(const PowerNetwork& net, Eigen::MatrixXd& B, Eigen::MatrixXd& F) {
  const int n = net.n_buses, m = net.n_lines();
  Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    inc(k, net.lines[k].from) = 1.0;
    inc(k, net.lines[k].to) = -1.0;
    b(k) = net.lines[k].susceptance;
  }
  const Eigen::MatrixXd full_b = inc.transpose() * b.asDiagonal() * inc;
  const Eigen::MatrixXd full_f = b.asDiagonal() * inc;
  B.resize(n, n - 1);
  F.resize(m, n - 1);
  for (int j = 0, c = 0; j < n; ++j) {
    if (j == net.slack) continue;
    B.col(c) = full_b.col(j);
    F.col(c) = full_f.col(j);
    ++c;
  }
}

}  // namespace

TEST_CASE("two-bus operators") {
  const PowerNetwork net = testcases::two_bus();
  const AngleOperators ops = build_operators(net);
  REQUIRE(ops.injection.rows() == 2);
  REQUIRE(ops.injection.cols() == 1);
  CHECK(ops.injection(0, 0) == -1.0);
  CHECK(ops.injection(1, 0) == 1.0);
  CHECK(ops.flow(0, 0) == -1.0);

  Eigen::VectorXd theta(1);
  theta << 3.0;
  CHECK(flows(ops, theta)(0) == -3.0);
  CHECK(injections(ops, theta)(0) == -3.0);
  CHECK(injections(ops, theta)(1) == 3.0);
  CHECK(flows(ops, Eigen::VectorXd::Zero(1)).isZero());
  CHECK_THROWS_AS(flows(ops, Eigen::VectorXd::Zero(2)), ValidationError);
}

TEST_CASE("three-bus ring conserves injections") {
  const PowerNetwork net = testcases::three_bus();
  const AngleOperators ops = build_operators(net);
  CHECK(ops.injection.colwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 5.0);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd theta(2);
    theta << nd(rng), nd(rng);
    CHECK(std::abs(injections(ops, theta).sum()) <= 1e-12 * std::max(1.0, theta.norm()));
  }
}

TEST_CASE("shipped cases match the incidence oracle") {
  for (const char* name : {"case2.json", "case3.json", "case6.json", "case14.json"}) {
    const PowerNetwork net = load_case(testcases::case_path(name));
    const AngleOperators ops = build_operators(net);
    Eigen::MatrixXd B, F;
    incidence_oracle(net, B, F);
    CHECK((ops.injection - B).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ops.flow - F).cwiseAbs().maxCoeff() < 1e-12);
    // injection at each bus equals the signed sum of incident line flows
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Eigen::VectorXd theta(net.n_buses - 1);
    for (auto& v : theta) v = nd(rng);
    const Eigen::VectorXd f = flows(ops, theta);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(net.n_buses);
    for (int k = 0; k < net.n_lines(); ++k) {
      p(net.lines[k].from) += f(k);
      p(net.lines[k].to) -= f(k);
    }
    CHECK((p - injections(ops, theta)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("theta polytope") {
  const PowerNetwork net = testcases::two_bus();
  const AngleOperators ops = build_operators(net);
  Eigen::VectorXd fmax(1);
  fmax << 10.0;
  const PolyhedralCSet theta = theta_polytope(ops, fmax);
  REQUIRE(theta.rows() == 2);
  CHECK(theta.A()(0, 0) == -1.0);
  CHECK(theta.A()(1, 0) == 1.0);
  CHECK(theta.b()(0) == 10.0);
  CHECK(contains(theta, Eigen::VectorXd::Zero(1), -1e-9));

  fmax << 0.0;
  CHECK_THROWS_WITH_AS(theta_polytope(ops, fmax), doctest::Contains("origin not interior"), ValidationError);
}

TEST_CASE("flow-limit equivalence") {
  const PowerNetwork net = load_case(testcases::case_path("case6.json"));
  const AngleOperators ops = build_operators(net);
  const PolyhedralCSet theta = theta_polytope(ops, net.flow_limits());
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 20.0);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd th(net.n_buses - 1);
    for (auto& v : th) v = nd(rng);
    const Eigen::VectorXd f = flows(ops, th);
    const bool in_limits = (f.cwiseAbs().array() <= net.flow_limits().array()).all();
    CHECK(contains(theta, th, 0.0) == in_limits);
  }
}

TEST_CASE("boundedness probe") {
  for (const char* name : {"case3.json", "case6.json", "case14.json"}) {
    const PowerNetwork net = load_case(testcases::case_path(name));
    const AngleOperators ops = build_operators(net);
    const PolyhedralCSet theta = theta_polytope(ops, net.flow_limits());
    const AxisExtent ext = probe_extent(theta.A(), theta.b());
    CHECK(ext.bounded);
    for (int i = 0; i < theta.dim(); ++i) {
      CHECK(std::isfinite(ext.upper[i]));
      CHECK(std::isfinite(ext.lower[i]));
    }
  }
  const PowerNetwork split = testcases::disconnected();
  CHECK_FALSE(split.is_connected());
  CHECK_THROWS_WITH_AS(build_operators(split), doctest::Contains("unbounded angle polytope"), ValidationError);
  const AngleOperators ops = assemble_operators(split);
  const PolyhedralCSet theta = theta_polytope(ops, split.flow_limits());
  CHECK_FALSE(probe_extent(theta.A(), theta.b()).bounded);
  const PolyhedralCSet probed(theta.A(), theta.b(), BoundednessCheck::kProbe);
  CHECK(probed.bounded_verified());
  CHECK_FALSE(probed.bounded());
}

TEST_CASE("case validation") {
  PowerNetwork net = testcases::two_bus();
  net.lines[0].susceptance = -1.0;
  CHECK_THROWS_AS(build_operators(net), ValidationError);
  net = testcases::two_bus();
  net.alpha.resize(3);
  CHECK_THROWS_AS(net.validate(), ValidationError);
}

TEST_CASE("case file round trip") {
  const PowerNetwork net = load_case(testcases::case_path("case14.json"));
  const PowerNetwork again = parse_case(case_to_json(net));
  CHECK(case_hash(net) == case_hash(again));
  CHECK(again.n_buses == 14);
  CHECK(again.slack == 0);
  nlohmann::json bad = case_to_json(net);
  bad.erase("beta");
  CHECK_THROWS_AS(parse_case(bad), ValidationError);
}
