#include "feasopf/dispatch_lp.hpp"

#include <chrono>
#include <string>

#include "feasopf/errors.hpp"

namespace feasopf {

using detail::require;

namespace {

constexpr double kResidualTol = 1e-8;

// Column offsets of one recourse block inside a larger program.
struct RecourseBlock {
  int p_r;
  int theta;
  int s_up;
  int s_dn;  // -1 for RLD blocks
};

void check_bus_vector(const PowerNetwork& net, const Eigen::VectorXd& v, const char* name) {
  require(v.size() == net.n_buses, std::string(name) + " must have one entry per bus");
  require(v.allFinite(), std::string(name) + " must be finite");
}

// Writes the balance rows B theta - p_R - [p0] = rhs and the two flow-limit
// row groups for one block.
void add_network_rows(const PowerNetwork& net, const AngleOperators& ops, const RecourseBlock& blk, int p0_col,
                      const Eigen::VectorXd& balance_rhs, LinearProgram& lp, int& eq_row, int& ub_row) {
  const int n = net.n_buses;
  const int na = n - 1;
  const int m = net.n_lines();
  const Eigen::VectorXd fmax = net.flow_limits();
  for (int i = 0; i < n; ++i) {
    lp.A_eq.block(eq_row + i, blk.theta, 1, na) = ops.injection.row(i);
    lp.A_eq(eq_row + i, blk.p_r + i) = -1.0;
    if (p0_col >= 0) lp.A_eq(eq_row + i, p0_col + i) = -1.0;
    lp.b_eq(eq_row + i) = balance_rhs(i);
  }
  eq_row += n;
  lp.A_ub.block(ub_row, blk.theta, m, na) = ops.flow;
  lp.b_ub.segment(ub_row, m) = fmax;
  ub_row += m;
  lp.A_ub.block(ub_row, blk.theta, m, na) = -ops.flow;
  lp.b_ub.segment(ub_row, m) = fmax;
  ub_row += m;
}

void free_block(LinearProgram& lp, const RecourseBlock& blk, int n) {
  lp.lb.segment(blk.p_r, n).setConstant(-kInf);
  lp.lb.segment(blk.theta, n - 1).setConstant(-kInf);
}

void shape(LinearProgram& lp, int n_vars, int n_eq, int n_ub) {
  lp = LinearProgram::with_variables(n_vars);
  lp.A_eq = Eigen::MatrixXd::Zero(n_eq, n_vars);
  lp.b_eq = Eigen::VectorXd::Zero(n_eq);
  lp.A_ub = Eigen::MatrixXd::Zero(n_ub, n_vars);
  lp.b_ub = Eigen::VectorXd::Zero(n_ub);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void require_optimal(const LpSolution& sol, const char* what) {
  if (!sol.optimal())
    throw SolverError(std::string(what) + ": LP status " + to_string(sol.status));
  if (!sol.residuals.within(kResidualTol))
    throw SolverError(std::string(what) + ": residual audit failed (eq " + std::to_string(sol.residuals.equality) +
                      ", ub " + std::to_string(sol.residuals.inequality) + ", bounds " +
                      std::to_string(sol.residuals.bounds) + ")");
}

LinearProgram build_second_stage_rld(const PowerNetwork& net, const AngleOperators& ops,
                                     const Eigen::VectorXd& net_demand) {
  check_bus_vector(net, net_demand, "net demand");
  const int n = net.n_buses;
  const int m = net.n_lines();
  const RecourseBlock blk{0, n, 2 * n - 1, -1};
  LinearProgram lp;
  shape(lp, 3 * n - 1, n, n + 2 * m);
  free_block(lp, blk, n);
  lp.c.segment(blk.s_up, n) = net.beta;
  int eq = 0, ub = 0;
  add_network_rows(net, ops, blk, -1, -net_demand, lp, eq, ub);
  for (int i = 0; i < n; ++i) {
    lp.A_ub(ub + i, blk.p_r + i) = 1.0;
    lp.A_ub(ub + i, blk.s_up + i) = -1.0;
  }
  return lp;
}

SecondStageResult second_stage_rld(const PowerNetwork& net, const AngleOperators& ops,
                                   const Eigen::VectorXd& net_demand) {
  const LinearProgram lp = build_second_stage_rld(net, ops, net_demand);
  const LpSolution sol = solve_lp(lp);
  require_optimal(sol, "second-stage RLD");
  const int n = net.n_buses;
  return {sol.objective, sol.x.segment(0, n), sol.x.segment(n, n - 1)};
}

LinearProgram build_second_stage_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                         const Eigen::VectorXd& net_demand, const Eigen::VectorXd& r_up,
                                         const Eigen::VectorXd& r_dn) {
  check_bus_vector(net, net_demand, "net demand");
  check_bus_vector(net, r_up, "up reserve");
  check_bus_vector(net, r_dn, "down reserve");
  const int n = net.n_buses;
  const int m = net.n_lines();
  const RecourseBlock blk{0, n, 2 * n - 1, 3 * n - 1};
  LinearProgram lp;
  shape(lp, 4 * n - 1, n, 2 * n + 2 * m);
  free_block(lp, blk, n);
  lp.c.segment(blk.s_up, n) = net.gamma_res;
  lp.c.segment(blk.s_dn, n) = net.gamma_res;
  int eq = 0, ub = 0;
  add_network_rows(net, ops, blk, -1, -net_demand, lp, eq, ub);
  for (int i = 0; i < n; ++i) {
    // p_R - s+ <= r_up ;  -p_R - s- <= r_dn
    lp.A_ub(ub + i, blk.p_r + i) = 1.0;
    lp.A_ub(ub + i, blk.s_up + i) = -1.0;
    lp.b_ub(ub + i) = r_up(i);
    lp.A_ub(ub + n + i, blk.p_r + i) = -1.0;
    lp.A_ub(ub + n + i, blk.s_dn + i) = -1.0;
    lp.b_ub(ub + n + i) = r_dn(i);
  }
  return lp;
}

SecondStageResult second_stage_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                       const Eigen::VectorXd& net_demand, const Eigen::VectorXd& r_up,
                                       const Eigen::VectorXd& r_dn) {
  const LinearProgram lp = build_second_stage_reserve(net, ops, net_demand, r_up, r_dn);
  const LpSolution sol = solve_lp(lp);
  require_optimal(sol, "second-stage reserve");
  const int n = net.n_buses;
  return {sol.objective, sol.x.segment(0, n), sol.x.segment(n, n - 1)};
}

LinearProgram build_extensive_rld(const PowerNetwork& net, const AngleOperators& ops,
                                  const std::vector<Eigen::VectorXd>& realizations) {
  require(!realizations.empty(), "extensive form needs at least one realization");
  const int n = net.n_buses;
  const int m = net.n_lines();
  const int K = static_cast<int>(realizations.size());
  const int block = 3 * n - 1;
  LinearProgram lp;
  shape(lp, n + K * block, K * n, K * (n + 2 * m));
  lp.c.head(n) = net.alpha;
  int eq = 0, ub = 0;
  for (int k = 0; k < K; ++k) {
    check_bus_vector(net, realizations[k], "realization");
    const int base = n + k * block;
    const RecourseBlock blk{base, base + n, base + 2 * n - 1, -1};
    free_block(lp, blk, n);
    lp.c.segment(blk.s_up, n) = net.beta / K;
    add_network_rows(net, ops, blk, 0, -realizations[k], lp, eq, ub);
    for (int i = 0; i < n; ++i) {
      lp.A_ub(ub + i, blk.p_r + i) = 1.0;
      lp.A_ub(ub + i, blk.s_up + i) = -1.0;
    }
    ub += n;
  }
  return lp;
}

ExtensiveRldResult solve_extensive_rld(const PowerNetwork& net, const AngleOperators& ops,
                                       const std::vector<Eigen::VectorXd>& realizations) {
  const LinearProgram lp = build_extensive_rld(net, ops, realizations);
  const auto t0 = std::chrono::steady_clock::now();
  const LpSolution sol = solve_lp(lp);
  ExtensiveRldResult out;
  out.solve_seconds = seconds_since(t0);
  require_optimal(sol, "extensive-form RLD");
  out.p0 = sol.x.head(net.n_buses);
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  return out;
}

LinearProgram build_extensive_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                      const std::vector<Eigen::VectorXd>& realizations) {
  require(!realizations.empty(), "extensive form needs at least one realization");
  const int n = net.n_buses;
  const int m = net.n_lines();
  const int K = static_cast<int>(realizations.size());
  const int block = 4 * n - 1;
  const int first = 3 * n;
  LinearProgram lp;
  shape(lp, first + K * block, K * n, 2 * n + K * (2 * n + 2 * m));
  const int p0 = 0, rup = n, rdn = 2 * n;
  lp.c.segment(p0, n) = net.alpha;
  lp.c.segment(rup, n) = net.mu;
  lp.c.segment(rdn, n) = net.mu;
  lp.ub.segment(p0, n) = net.p_max;
  int eq = 0, ub = 0;
  for (int i = 0; i < n; ++i) {
    // p0 + r_up <= p_max ;  r_dn - p0 <= 0
    lp.A_ub(i, p0 + i) = 1.0;
    lp.A_ub(i, rup + i) = 1.0;
    lp.b_ub(i) = net.p_max(i);
    lp.A_ub(n + i, p0 + i) = -1.0;
    lp.A_ub(n + i, rdn + i) = 1.0;
  }
  ub = 2 * n;
  for (int k = 0; k < K; ++k) {
    check_bus_vector(net, realizations[k], "realization");
    const int base = first + k * block;
    const RecourseBlock blk{base, base + n, base + 2 * n - 1, base + 3 * n - 1};
    free_block(lp, blk, n);
    lp.c.segment(blk.s_up, n) = net.gamma_res / K;
    lp.c.segment(blk.s_dn, n) = net.gamma_res / K;
    add_network_rows(net, ops, blk, p0, -realizations[k], lp, eq, ub);
    for (int i = 0; i < n; ++i) {
      lp.A_ub(ub + i, blk.p_r + i) = 1.0;
      lp.A_ub(ub + i, rup + i) = -1.0;
      lp.A_ub(ub + i, blk.s_up + i) = -1.0;
      lp.A_ub(ub + n + i, blk.p_r + i) = -1.0;
      lp.A_ub(ub + n + i, rdn + i) = -1.0;
      lp.A_ub(ub + n + i, blk.s_dn + i) = -1.0;
    }
    ub += 2 * n;
  }
  return lp;
}

ExtensiveReserveResult solve_extensive_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                               const std::vector<Eigen::VectorXd>& realizations) {
  const LinearProgram lp = build_extensive_reserve(net, ops, realizations);
  const auto t0 = std::chrono::steady_clock::now();
  const LpSolution sol = solve_lp(lp);
  ExtensiveReserveResult out;
  out.solve_seconds = seconds_since(t0);
  require_optimal(sol, "extensive-form reserve");
  const int n = net.n_buses;
  out.p0 = sol.x.segment(0, n);
  out.r_up = sol.x.segment(n, n);
  out.r_dn = sol.x.segment(2 * n, n);
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  return out;
}

}  // namespace feasopf
