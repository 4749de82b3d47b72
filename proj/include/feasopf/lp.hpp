#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>

namespace feasopf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// minimize c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub.
/// Empty blocks are allowed (zero rows). Bounds may be +-infinity.
struct LinearProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_ub;
  Eigen::VectorXd b_ub;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  /// n variables, all x >= 0, no constraint rows.
  static LinearProgram with_variables(int n);
  int n_vars() const { return static_cast<int>(c.size()); }
  void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };
std::string to_string(LpStatus status);

/// Max violations of each constraint family at the returned point.
struct Residuals {
  double equality = 0.0;
  double inequality = 0.0;
  double bounds = 0.0;
  bool within(double tol) const { return equality <= tol && inequality <= tol && bounds <= tol; }
};

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  LpStatus status = LpStatus::kInfeasible;
  int iterations = 0;
  Residuals residuals;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

enum class PricingRule {
  kBland,          // smallest-index entering and leaving variables throughout
  kDantzigBland,   // most negative reduced cost; Bland while pivots stall
};

struct SimplexOptions {
  PricingRule pricing = PricingRule::kDantzigBland;
  int max_iterations = 200000;
  int refactor_interval = 100;
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int stall_limit = 30;
};

/// Two-phase revised simplex over a dense explicit basis inverse.
/// Deterministic for identical input. Never throws on infeasible or
/// unbounded programs; dimension errors raise ValidationError.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

Residuals audit(const LinearProgram& lp, const Eigen::VectorXd& x);

}  // namespace feasopf
