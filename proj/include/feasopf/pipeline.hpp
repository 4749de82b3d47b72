#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "feasopf/affine.hpp"
#include "feasopf/evaluation.hpp"
#include "feasopf/scenario.hpp"
#include "feasopf/trainer.hpp"

namespace feasopf {

/// Everything one experiment needs. Loaded from JSON; CLI flags override.
struct RunConfig {
  std::string case_path;
  Application app = Application::kRld;
  std::uint64_t seed = 1;
  std::size_t train_forecasts = 1000;
  std::size_t test_forecasts = 50;
  double forecast_std = kForecastStd;
  double realization_std = kRealizationStd;
  int benchmark_realizations = 20;  // scenarios per extensive-form solve
  int affine_realizations = 20;     // scenarios for the fit and per-instance solves
  int eval_realizations = 500;
  AffineOptions affine;
  TrainConfig train;
  int threads = 0;
  std::string out_dir = "runs/default";

  void validate() const;
};

/// `base_dir` resolves a relative case path. Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Stream seeds derived from the run seed.
struct RunSeeds {
  std::uint64_t train_forecasts, test_forecasts, benchmark, affine_fit, evaluation, training;
};
RunSeeds run_seeds(const RunConfig& cfg);

struct InstanceDecisions {
  std::string method;
  std::vector<FirstStageDecision> decisions;
  std::vector<double> seconds;
  std::vector<bool> infeasible;
  std::vector<double> objectives;  // in-sample objective where one exists
};

void write_decisions(const std::string& path, const InstanceDecisions& d, const DispatchContext& ctx);
InstanceDecisions read_decisions(const std::string& path, const DispatchContext& ctx);

/// Files under out_dir:
///   run.json                 resolved config
///   data/{train,test,eval}.csv
///   train/                   trainer run directory
///   decisions/{extensive,affine,proposed}.json
///   affine_fit.json
///   costs.csv                per-instance out-of-sample cost
///   comparison.csv, comparison.md
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  void gen_data();
  TrainResult train(bool resume = false);
  InstanceDecisions benchmark();
  InstanceDecisions fit_affine();
  InstanceDecisions decide_proposed();
  std::vector<ComparisonRow> evaluate();
  std::string report() const;
  std::vector<ComparisonRow> run_all();

  const RunConfig& config() const { return cfg_; }
  const DispatchContext& context() const { return ctx_; }
  std::string path(const std::string& rel) const;

  ScenarioSet train_set() const;
  ScenarioSet test_set() const;
  ScenarioSet eval_set() const;

 private:
  void write_run_json() const;
  RunConfig cfg_;
  DispatchContext ctx_;
};

/// Applies FEASOPF_OUT_ROOT to a relative output directory.
std::string resolve_out_dir(const std::string& out_dir);

}  // namespace feasopf
