#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "feasopf/policy.hpp"

namespace feasopf {

inline constexpr const char* kBenchmarkMethod = "extensive";

/// Fixed first-stage cost plus the mean second-stage LP value over `realizations`.
double out_of_sample_cost(const DispatchContext& ctx, const FirstStageDecision& decision,
                          const std::vector<Eigen::VectorXd>& realizations);

struct MethodResult {
  std::string method;
  std::vector<double> costs;    // per test instance
  std::vector<double> seconds;  // per-instance decision time
  std::vector<bool> infeasible;
  double mean_cost() const;
  double mean_seconds() const;
};

struct ComparisonRow {
  std::string method;
  double mean_cost = 0.0;
  double ratio_pct = 0.0;
  double mean_time_s = 0.0;
  int infeasible = 0;
};

/// Ratios are taken on means with the benchmark at 100. Throws
/// ValidationError when the benchmark is missing or sizes disagree.
std::vector<ComparisonRow> compare(const std::vector<MethodResult>& methods,
                                   const std::string& benchmark = kBenchmarkMethod);

/// method,mean_cost,ratio_pct,mean_time_s
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
/// Times in minutes.
std::string comparison_markdown(const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> parse_comparison_csv(const std::string& text);

/// Wall-clock seconds spent in f.
double time_method(const std::function<void()>& f);

/// Runs f(0..n-1) on up to `threads` workers (0: hardware concurrency).
/// Each index must write only its own slot, which keeps reductions ordered.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace feasopf
