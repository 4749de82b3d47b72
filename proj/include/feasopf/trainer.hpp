#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "feasopf/adam.hpp"
#include "feasopf/policy.hpp"
#include "feasopf/scenario.hpp"

namespace feasopf {

struct TrainConfig {
  int realizations_per_iter = 20;  // K
  int batch_size = 32;
  int iterations = 1000;
  std::uint64_t seed = 1;
  nn::AdamConfig adam;
  PolicyShape phi0_shape{{8, 8}, 3, {64, 64}, 0.5};
  PolicyShape phiR_shape{{8, 8}, 3, {64, 64}, 0.5};
  double realization_std = kRealizationStd;
  int checkpoint_every = 0;  // 0: only at the end
  int audit_every = 100;     // feasibility audit on 1% of iterations
  // optional supervised warm start of phiR
  int pretrain_iterations = 0;
  int pretrain_samples = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct TrainResult {
  std::unique_ptr<FirstStagePolicy> phi0;
  std::unique_ptr<SecondStagePolicy> phiR;
  std::vector<double> loss_history;
  std::vector<double> pretrain_history;
};

struct TrainOptions {
  std::string run_dir;  // empty: nothing is written
  bool resume = false;  // continue from run_dir/checkpoint.ckpt when present
};

/// Joint Adam descent on mean(first-stage cost + (1/K) sum_k phiR cost).
TrainResult train(const TrainConfig& cfg, const DispatchContext& ctx, const ScenarioSet& data,
                  const TrainOptions& opts = {});

struct PretrainSample {
  FirstStageDecision decision;
  Eigen::VectorXd realization;
  double target = 0.0;
};

/// Random feasible first-stage decisions around the dataset forecasts, each
/// paired with one realization and its second-stage LP value.
std::vector<PretrainSample> make_pretrain_samples(const DispatchContext& ctx, const ScenarioSet& data,
                                                  std::size_t count, std::uint64_t seed,
                                                  double realization_std = kRealizationStd);

/// Mean-squared regression of phiR's cost onto the sample targets.
std::vector<double> pretrain_phiR(const TrainConfig& cfg, const DispatchContext& ctx, SecondStagePolicy& phiR,
                                  const std::vector<PretrainSample>& samples, int iterations);

/// Batch loss pieces used by train and the tests.
struct LossTerms {
  nn::Tensor loss;
  FirstStageBatch first;
  SecondStageBatch second;
};
LossTerms joint_loss(const DispatchContext& ctx, const FirstStagePolicy& phi0, const SecondStagePolicy& phiR,
                     const nn::Matrix& forecasts, const nn::Matrix& realizations, int k, nn::Mode mode,
                     std::mt19937_64* rng);

}  // namespace feasopf
