#include "feasopf/scenario.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "feasopf/errors.hpp"
#include "feasopf/util.hpp"

namespace feasopf {

using detail::require;

void ScenarioSet::validate() const {
  const int n = n_buses();
  for (std::size_t i = 0; i < forecasts.size(); ++i) {
    require(forecasts[i].size() == n, "forecast " + std::to_string(i) + " has the wrong length");
    require((forecasts[i].array() >= 0.0).all() && forecasts[i].allFinite(),
            "forecast " + std::to_string(i) + " has negative or non-finite load");
  }
  if (realizations.empty()) return;
  require(realizations.size() == forecasts.size(), "realization lists must match the forecast count");
  const std::size_t k = realizations.front().size();
  for (std::size_t i = 0; i < realizations.size(); ++i) {
    require(realizations[i].size() == k, "realization counts must be uniform across forecasts");
    for (const auto& d : realizations[i])
      require(d.size() == n && (d.array() >= 0.0).all() && d.allFinite(),
              "realization under forecast " + std::to_string(i) + " is malformed");
  }
}

Eigen::VectorXd sample_load(const Eigen::VectorXd& mean, double std_frac, std::uint64_t seed) {
  require(std_frac >= 0.0, "std fraction must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd d(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) d(i) = std::max(0.0, mean(i) + std_frac * mean(i) * nd(rng));
  return d;
}

ScenarioSet gen_forecasts(const PowerNetwork& net, std::size_t n, std::uint64_t seed, double std_frac) {
  require(n > 0, "gen_forecasts: n must be positive");
  require(net.nominal_load.size() == net.n_buses, "gen_forecasts: case has no nominal load");
  ScenarioSet set;
  set.forecast_seed = seed;
  set.forecast_std = std_frac;
  set.case_hash = case_hash(net);
  set.forecasts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) set.forecasts.push_back(sample_load(net.nominal_load, std_frac, derive_seed(seed, i)));
  return set;
}

std::vector<Eigen::VectorXd> gen_realizations(const Eigen::VectorXd& forecast, std::size_t k, std::uint64_t seed,
                                              double std_frac) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j) out.push_back(sample_load(forecast, std_frac, derive_seed(seed, j)));
  return out;
}

void attach_realizations(ScenarioSet& set, std::size_t k, std::uint64_t seed, double std_frac) {
  set.realization_seed = seed;
  set.realization_std = std_frac;
  set.realizations.clear();
  for (std::size_t i = 0; i < set.forecasts.size(); ++i)
    set.realizations.push_back(gen_realizations(set.forecasts[i], k, derive_seed(seed, i), std_frac));
}

namespace {

void write_row(std::ostream& out, long f, long r, const Eigen::VectorXd& d) {
  out << f << ',' << r;
  for (Eigen::Index i = 0; i < d.size(); ++i) out << ',' << fmt_double(d(i));
  out << '\n';
}

}  // namespace

void write_dataset(const std::string& path, const ScenarioSet& set) {
  set.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write dataset " + path);
  const nlohmann::json header{{"case_hash", set.case_hash},
                              {"n_buses", set.n_buses()},
                              {"forecasts", set.size()},
                              {"realizations_per_forecast", set.realizations_per_forecast()},
                              {"forecast_seed", set.forecast_seed},
                              {"realization_seed", set.realization_seed},
                              {"forecast_std", set.forecast_std},
                              {"realization_std", set.realization_std}};
  out << header.dump() << '\n';
  out << "forecast,realization";
  for (int i = 1; i <= set.n_buses(); ++i) out << ",d" << i;
  out << '\n';
  for (std::size_t f = 0; f < set.size(); ++f) {
    write_row(out, static_cast<long>(f), -1, set.forecasts[f]);
    if (!set.realizations.empty())
      for (std::size_t r = 0; r < set.realizations[f].size(); ++r)
        write_row(out, static_cast<long>(f), static_cast<long>(r), set.realizations[f][r]);
  }
  if (!out) throw IoError("failed writing dataset " + path);
}

ScenarioSet read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("dataset " + path + ": bad header: " + e.what());
  }
  ScenarioSet set;
  std::size_t n_forecasts = 0, k = 0;
  int n = 0;
  try {
    set.case_hash = header.at("case_hash").get<std::string>();
    n = header.at("n_buses").get<int>();
    n_forecasts = header.at("forecasts").get<std::size_t>();
    k = header.at("realizations_per_forecast").get<std::size_t>();
    set.forecast_seed = header.at("forecast_seed").get<std::uint64_t>();
    set.realization_seed = header.at("realization_seed").get<std::uint64_t>();
    set.forecast_std = header.at("forecast_std").get<double>();
    set.realization_std = header.at("realization_std").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("dataset " + path + ": " + e.what());
  }
  std::getline(in, line);  // column names
  set.forecasts.resize(n_forecasts);
  if (k > 0) set.realizations.assign(n_forecasts, {});
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    try {
      while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ValidationError("dataset " + path + ": non-numeric cell '" + cell + "' in row " + std::to_string(rows));
    }
    require(cells.size() == static_cast<std::size_t>(n) + 2,
            "dataset " + path + ": row " + std::to_string(rows) + " has " + std::to_string(cells.size()) + " cells");
    const long f = static_cast<long>(cells[0]), r = static_cast<long>(cells[1]);
    require(f >= 0 && static_cast<std::size_t>(f) < n_forecasts, "dataset " + path + ": forecast index out of range");
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(cells.data() + 2, n);
    if (r < 0) set.forecasts[f] = d;
    else {
      require(k > 0 && static_cast<std::size_t>(r) < k, "dataset " + path + ": realization index out of range");
      require(static_cast<std::size_t>(r) == set.realizations[f].size(),
              "dataset " + path + ": realization rows out of order");
      set.realizations[f].push_back(d);
    }
    ++rows;
  }
  require(rows == n_forecasts * (k + 1), "dataset " + path + ": header promises " +
                                             std::to_string(n_forecasts * (k + 1)) + " rows, found " +
                                             std::to_string(rows));
  set.validate();
  return set;
}

}  // namespace feasopf
