#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "feasopf/policy.hpp"

namespace feasopf {

/// Participation factors: nonnegative on generator buses, zero elsewhere, sum 1.
struct ParticipationFactors {
  Eigen::VectorXd xi;
};

/// Largest violation of the participation-factor constraints.
double participation_violation(const PowerNetwork& net, const ParticipationFactors& f);
ParticipationFactors uniform_participation(const PowerNetwork& net);

struct AffineFit {
  ParticipationFactors factors;
  FirstStageDecision decision;  // from the final first-stage step, under `factors`
  double objective = 0.0;       // in-sample objective of that step
  int rounds = 0;
  std::vector<double> objective_trace;
};

struct AffineOptions {
  double tolerance = 1e-6;  // objective change between rounds
  int max_rounds = 20;
};

/// Alternating fit: first stage with xi fixed, then xi with the first stage
/// fixed, starting from uniform xi. Throws SolverError naming the offending
/// scenario when the first step is infeasible.
AffineFit fit_affine_rld(const DispatchContext& ctx, const std::vector<Eigen::VectorXd>& realizations,
                         const AffineOptions& opts = {});
AffineFit fit_affine_reserve(const DispatchContext& ctx, const std::vector<Eigen::VectorXd>& realizations,
                             const AffineOptions& opts = {});
AffineFit fit_affine(const DispatchContext& ctx, const std::vector<Eigen::VectorXd>& realizations,
                     const AffineOptions& opts = {});

struct AffineDecision {
  FirstStageDecision decision;
  double objective = 0.0;
  double solve_seconds = 0.0;
  bool infeasible = false;  // flow limits dropped to obtain a decision
};

/// First-stage-only LP with recourse replaced by xi * (total mismatch).
AffineDecision affine_first_stage(const DispatchContext& ctx, const ParticipationFactors& factors,
                                  const std::vector<Eigen::VectorXd>& realizations);

/// Injection-to-flow sensitivities (lines x buses) with the slack absorbing.
Eigen::MatrixXd ptdf(const AngleOperators& ops);

nlohmann::json to_json(const AffineFit& fit, const DispatchContext& ctx);
void write_affine(const std::string& path, const AffineFit& fit, const DispatchContext& ctx);
/// Checks the case hash and application recorded in the file.
AffineFit read_affine(const std::string& path, const DispatchContext& ctx);

}  // namespace feasopf
