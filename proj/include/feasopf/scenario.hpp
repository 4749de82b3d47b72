#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "feasopf/network.hpp"

namespace feasopf {

inline constexpr double kForecastStd = 0.10;
inline constexpr double kRealizationStd = 0.05;

/// Forecasts and (optionally) a fixed number of realizations per forecast.
struct ScenarioSet {
  std::vector<Eigen::VectorXd> forecasts;
  std::vector<std::vector<Eigen::VectorXd>> realizations;  // empty or one list per forecast
  std::uint64_t forecast_seed = 0;
  std::uint64_t realization_seed = 0;
  double forecast_std = kForecastStd;
  double realization_std = kRealizationStd;
  std::string case_hash;

  std::size_t size() const { return forecasts.size(); }
  int n_buses() const { return forecasts.empty() ? 0 : static_cast<int>(forecasts.front().size()); }
  std::size_t realizations_per_forecast() const {
    return realizations.empty() ? 0 : realizations.front().size();
  }
  void validate() const;
};

/// Clamped Gaussian draw around `mean` with per-entry std `std_frac * mean`.
Eigen::VectorXd sample_load(const Eigen::VectorXd& mean, double std_frac, std::uint64_t seed);

/// Forecast i uses derive_seed(seed, i).
ScenarioSet gen_forecasts(const PowerNetwork& net, std::size_t n, std::uint64_t seed,
                          double std_frac = kForecastStd);

/// Realization j uses derive_seed(seed, j).
std::vector<Eigen::VectorXd> gen_realizations(const Eigen::VectorXd& forecast, std::size_t k, std::uint64_t seed,
                                              double std_frac = kRealizationStd);

/// Fills set.realizations; forecast i draws from derive_seed(seed, i).
void attach_realizations(ScenarioSet& set, std::size_t k, std::uint64_t seed, double std_frac = kRealizationStd);

/// First line: JSON header. Remainder: CSV with columns
/// forecast,realization,d1..dN (realization = -1 marks the forecast row).
void write_dataset(const std::string& path, const ScenarioSet& set);
ScenarioSet read_dataset(const std::string& path);

}  // namespace feasopf
