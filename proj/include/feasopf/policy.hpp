#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "feasopf/layers.hpp"
#include "feasopf/network.hpp"
#include "feasopf/polytope.hpp"

namespace feasopf {

enum class Application { kRld, kReserve };
std::string to_string(Application app);
Application parse_application(const std::string& name);

/// r_up / r_dn are empty for RLD.
struct FirstStageDecision {
  Eigen::VectorXd p0;
  Eigen::VectorXd r_up;
  Eigen::VectorXd r_dn;
};

double first_stage_cost(const PowerNetwork& net, Application app, const FirstStageDecision& dec);
/// Largest violation of the first-stage constraints (0 when feasible).
double first_stage_violation(const PowerNetwork& net, Application app, const FirstStageDecision& dec);

/// Trunk: optional conv1d stack over the bus axis (one channel per input
/// group), then dense hidden layers with ReLU and dropout, then the head.
struct PolicyShape {
  std::vector<int> conv_channels;
  int kernel = 3;
  std::vector<int> hidden{64, 64};
  double dropout = 0.0;
};

/// Batched first-stage decision held as graph tensors (rows = forecasts).
struct FirstStageBatch {
  nn::Tensor p0;
  nn::Tensor r_up;  // undefined for RLD
  nn::Tensor r_dn;
  FirstStageDecision row(Eigen::Index i) const;
};

/// Shared context: network data, operators and the angle polytope.
struct DispatchContext {
  DispatchContext(PowerNetwork net, Application app);
  PowerNetwork net;
  Application app;
  AngleOperators ops;
  PolyhedralCSet theta_set;
  PolyhedralCSet box;
  double load_scale;  // total nominal load, floor 1
};

/// phi0: forecast -> first-stage decision. RLD ends in ReLU; reserve ends in
/// tanh and is decoded sequentially into (p0, r_up, r_dn).
class FirstStagePolicy {
 public:
  FirstStagePolicy(const DispatchContext& ctx, const PolicyShape& shape, std::uint64_t seed);
  FirstStagePolicy(const DispatchContext& ctx, nn::Sequential model);

  FirstStageBatch forward(const nn::Tensor& forecasts, nn::Mode mode, std::mt19937_64* rng = nullptr) const;
  FirstStageDecision decide(const Eigen::VectorXd& forecast) const;

  /// Reserve decode of a raw u in [-1, 1]^{3N}.
  static FirstStageBatch decode_reserve(const nn::Tensor& u, const Eigen::VectorXd& p_max);

  nn::Sequential& model() { return model_; }
  const nn::Sequential& model() const { return model_; }

 private:
  nn::Tensor features(const nn::Tensor& forecasts) const;
  const DispatchContext* ctx_;
  nn::Sequential model_;
};

struct SecondStageBatch {
  nn::Tensor u;      // tanh head, rows in the unit box
  nn::Tensor theta;  // gauge-mapped into the angle polytope
  nn::Tensor p_recourse;
  nn::Tensor cost;  // rows x 1
};

/// phiR: (first-stage decision, realization) -> feasible angles, recourse and cost.
class SecondStagePolicy {
 public:
  SecondStagePolicy(const DispatchContext& ctx, const PolicyShape& shape, std::uint64_t seed);
  SecondStagePolicy(const DispatchContext& ctx, nn::Sequential model);

  /// `decision` rows must match `realizations` rows (repeat_rows beforehand).
  SecondStageBatch forward(const FirstStageBatch& decision, const nn::Tensor& realizations, nn::Mode mode,
                           std::mt19937_64* rng = nullptr) const;
  /// Same mapping with the head output supplied directly.
  SecondStageBatch from_head(const nn::Tensor& u, const FirstStageBatch& decision,
                             const nn::Tensor& realizations) const;

  nn::Sequential& model() { return model_; }
  const nn::Sequential& model() const { return model_; }

 private:
  const DispatchContext* ctx_;
  nn::Sequential model_;
};

/// Row-wise gauge map from the unit box onto `Q` as a graph node.
nn::Tensor gauge_map_rows(const nn::Tensor& u, const PolyhedralCSet& box, const PolyhedralCSet& Q);

FirstStageDecision phi0_rld(const FirstStagePolicy& phi0, const Eigen::VectorXd& forecast);
FirstStageDecision phi0_reserve(const FirstStagePolicy& phi0, const Eigen::VectorXd& forecast);

struct SecondStageOutput {
  Eigen::VectorXd theta;
  Eigen::VectorXd p_recourse;
  double cost = 0.0;
};
SecondStageOutput phiR(const SecondStagePolicy& phiR, const FirstStageDecision& decision,
                       const Eigen::VectorXd& realization);

FirstStageBatch decision_batch(const std::vector<FirstStageDecision>& decisions, Application app);

/// Checkpoint with both networks; `tail` is appended after the parameters
/// (the trainer stores optimizer moments there).
void save_policies(const std::string& path, const DispatchContext& ctx, const FirstStagePolicy& phi0,
                   const SecondStagePolicy& phiR, const nlohmann::json& extra = nlohmann::json::object(),
                   const std::vector<double>& tail = {});
struct LoadedPolicies {
  std::unique_ptr<FirstStagePolicy> phi0;
  std::unique_ptr<SecondStagePolicy> phiR;
  nlohmann::json header;
  std::vector<double> tail;
};
LoadedPolicies load_policies(const std::string& path, const DispatchContext& ctx);

}  // namespace feasopf
