#pragma once

#include <Eigen/Dense>
#include <vector>

#include "feasopf/lp.hpp"
#include "feasopf/network.hpp"

namespace feasopf {

/// Deterministic second-stage DCOPF at a fixed net demand d(w) - p0.
struct SecondStageResult {
  double cost = 0.0;
  Eigen::VectorXd p_recourse;
  Eigen::VectorXd theta;
};

/// min beta^T [p_R]^+  s.t.  B theta = p_R - net_demand,  |F theta| <= f_max.
SecondStageResult second_stage_rld(const PowerNetwork& net, const AngleOperators& ops,
                                   const Eigen::VectorXd& net_demand);

/// min gamma^T ([p_R - r_up]^+ - [p_R + r_dn]^-) under the same constraints.
SecondStageResult second_stage_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                       const Eigen::VectorXd& net_demand, const Eigen::VectorXd& r_up,
                                       const Eigen::VectorXd& r_dn);

struct ExtensiveRldResult {
  Eigen::VectorXd p0;
  double objective = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
};

struct ExtensiveReserveResult {
  Eigen::VectorXd p0;
  Eigen::VectorXd r_up;
  Eigen::VectorXd r_dn;
  double objective = 0.0;
  double solve_seconds = 0.0;
  int iterations = 0;
};

/// Sample-average extensive form with one recourse block per realization.
ExtensiveRldResult solve_extensive_rld(const PowerNetwork& net, const AngleOperators& ops,
                                       const std::vector<Eigen::VectorXd>& realizations);
ExtensiveReserveResult solve_extensive_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                               const std::vector<Eigen::VectorXd>& realizations);

/// Builders are exposed so tests can audit the assembled programs.
LinearProgram build_second_stage_rld(const PowerNetwork& net, const AngleOperators& ops,
                                     const Eigen::VectorXd& net_demand);
LinearProgram build_second_stage_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                         const Eigen::VectorXd& net_demand, const Eigen::VectorXd& r_up,
                                         const Eigen::VectorXd& r_dn);
LinearProgram build_extensive_rld(const PowerNetwork& net, const AngleOperators& ops,
                                  const std::vector<Eigen::VectorXd>& realizations);
LinearProgram build_extensive_reserve(const PowerNetwork& net, const AngleOperators& ops,
                                      const std::vector<Eigen::VectorXd>& realizations);

/// Throws SolverError unless the solution is optimal with clean residuals.
void require_optimal(const LpSolution& sol, const char* what);

}  // namespace feasopf
