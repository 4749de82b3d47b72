#include "feasopf/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/util.hpp"

namespace feasopf {

namespace fs = std::filesystem;
using detail::require;
using Eigen::VectorXd;

void RunConfig::validate() const {
  require(!case_path.empty(), "config needs a case path");
  require(train_forecasts > 0 && test_forecasts > 0, "dataset sizes must be positive");
  require(forecast_std >= 0.0 && realization_std >= 0.0, "std fractions must be >= 0");
  require(benchmark_realizations >= 1 && affine_realizations >= 1 && eval_realizations >= 1,
          "realization counts must be positive");
  require(threads >= 0, "threads must be >= 0");
  require(!out_dir.empty(), "output directory must be set");
  train.validate();
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir) {
  RunConfig c;
  require(j.is_object(), "run config must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "case") {
        fs::path p = v.get<std::string>();
        if (p.is_relative() && !fs::exists(p)) p = fs::path(base_dir) / p;
        c.case_path = p.lexically_normal().string();
      } else if (k == "application") c.app = parse_application(v.get<std::string>());
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "train_forecasts") c.train_forecasts = v.get<std::size_t>();
      else if (k == "test_forecasts") c.test_forecasts = v.get<std::size_t>();
      else if (k == "forecast_std") c.forecast_std = v.get<double>();
      else if (k == "realization_std") c.realization_std = v.get<double>();
      else if (k == "benchmark_realizations") c.benchmark_realizations = v.get<int>();
      else if (k == "affine_realizations") c.affine_realizations = v.get<int>();
      else if (k == "eval_realizations") c.eval_realizations = v.get<int>();
      else if (k == "affine_tolerance") c.affine.tolerance = v.get<double>();
      else if (k == "affine_max_rounds") c.affine.max_rounds = v.get<int>();
      else if (k == "threads") c.threads = v.get<int>();
      else if (k == "out") c.out_dir = v.get<std::string>();
      else if (k == "train") c.train = train_config_from_json(v, c.train);
      else throw ValidationError("unknown config key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  c.train.realization_std = c.realization_std;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config " + path + ": " + e.what());
  }
  return run_config_from_json(j, fs::path(path).parent_path().string());
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json t = to_json(c.train);
  t.erase("realization_std");
  return {{"case", c.case_path},
          {"application", to_string(c.app)},
          {"seed", c.seed},
          {"train_forecasts", c.train_forecasts},
          {"test_forecasts", c.test_forecasts},
          {"forecast_std", c.forecast_std},
          {"realization_std", c.realization_std},
          {"benchmark_realizations", c.benchmark_realizations},
          {"affine_realizations", c.affine_realizations},
          {"eval_realizations", c.eval_realizations},
          {"affine_tolerance", c.affine.tolerance},
          {"affine_max_rounds", c.affine.max_rounds},
          {"out", c.out_dir},
          {"train", t}};
}

RunSeeds run_seeds(const RunConfig& c) {
  return {derive_seed(c.seed, 1), derive_seed(c.seed, 2), derive_seed(c.seed, 3),
          derive_seed(c.seed, 4), derive_seed(c.seed, 5), derive_seed(c.seed, 6)};
}

std::string resolve_out_dir(const std::string& out_dir) {
  const fs::path p(out_dir);
  const char* root = std::getenv("FEASOPF_OUT_ROOT");
  if (p.is_relative() && root != nullptr && *root != '\0') return (fs::path(root) / p).string();
  return p.string();
}

namespace {

std::vector<double> vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from(const nlohmann::json& j, int n, const std::string& what) {
  const auto v = j.get<std::vector<double>>();
  require(static_cast<int>(v.size()) == n, what + " has the wrong length");
  return Eigen::Map<const VectorXd>(v.data(), n);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " (run the earlier pipeline stages first)");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

void write_decisions(const std::string& path, const InstanceDecisions& d, const DispatchContext& ctx) {
  nlohmann::json j{{"method", d.method}, {"application", to_string(ctx.app)}, {"case_hash", case_hash(ctx.net)}};
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < d.decisions.size(); ++i) {
    nlohmann::json e{{"p0", vec(d.decisions[i].p0)},
                     {"seconds", d.seconds.at(i)},
                     {"infeasible", static_cast<bool>(d.infeasible.at(i))}};
    if (ctx.app == Application::kReserve) {
      e["r_up"] = vec(d.decisions[i].r_up);
      e["r_dn"] = vec(d.decisions[i].r_dn);
    }
    if (i < d.objectives.size()) e["objective"] = d.objectives[i];
    list.push_back(std::move(e));
  }
  j["instances"] = std::move(list);
  write_text(path, j.dump(1) + "\n");
}

InstanceDecisions read_decisions(const std::string& path, const DispatchContext& ctx) {
  InstanceDecisions d;
  try {
    const nlohmann::json j = nlohmann::json::parse(read_text(path));
    require(j.at("case_hash").get<std::string>() == case_hash(ctx.net), path + " belongs to another case");
    require(parse_application(j.at("application").get<std::string>()) == ctx.app,
            path + " belongs to another application");
    d.method = j.at("method").get<std::string>();
    const int n = ctx.net.n_buses;
    for (const auto& e : j.at("instances")) {
      FirstStageDecision dec;
      dec.p0 = from(e.at("p0"), n, path + ": p0");
      if (ctx.app == Application::kReserve) {
        dec.r_up = from(e.at("r_up"), n, path + ": r_up");
        dec.r_dn = from(e.at("r_dn"), n, path + ": r_dn");
      }
      d.decisions.push_back(std::move(dec));
      d.seconds.push_back(e.at("seconds").get<double>());
      d.infeasible.push_back(e.at("infeasible").get<bool>());
      if (e.contains("objective")) d.objectives.push_back(e.at("objective").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return d;
}

Pipeline::Pipeline(RunConfig cfg)
    : cfg_([&] {
        cfg.validate();
        cfg.out_dir = resolve_out_dir(cfg.out_dir);
        return cfg;
      }()),
      ctx_(load_case(cfg_.case_path), cfg_.app) {}

std::string Pipeline::path(const std::string& rel) const { return (fs::path(cfg_.out_dir) / rel).string(); }

void Pipeline::write_run_json() const {
  ensure_dir(cfg_.out_dir);
  write_text(path("run.json"), to_json(cfg_).dump(2) + "\n");
}

void Pipeline::gen_data() {
  write_run_json();
  ensure_dir(path("data"));
  const RunSeeds s = run_seeds(cfg_);
  write_dataset(path("data/train.csv"), gen_forecasts(ctx_.net, cfg_.train_forecasts, s.train_forecasts, cfg_.forecast_std));
  ScenarioSet test = gen_forecasts(ctx_.net, cfg_.test_forecasts, s.test_forecasts, cfg_.forecast_std);
  write_dataset(path("data/test.csv"), test);
  attach_realizations(test, static_cast<std::size_t>(cfg_.eval_realizations), s.evaluation, cfg_.realization_std);
  write_dataset(path("data/eval.csv"), test);
}

namespace {

ScenarioSet checked(ScenarioSet set, const DispatchContext& ctx, const std::string& path) {
  require(set.case_hash == case_hash(ctx.net), path + " was generated for another case");
  return set;
}

}  // namespace

ScenarioSet Pipeline::train_set() const { return checked(read_dataset(path("data/train.csv")), ctx_, "train.csv"); }
ScenarioSet Pipeline::test_set() const { return checked(read_dataset(path("data/test.csv")), ctx_, "test.csv"); }
ScenarioSet Pipeline::eval_set() const { return checked(read_dataset(path("data/eval.csv")), ctx_, "eval.csv"); }

TrainResult Pipeline::train(bool resume) {
  TrainConfig tc = cfg_.train;
  return feasopf::train(tc, ctx_, train_set(), {path("train"), resume});
}

InstanceDecisions Pipeline::benchmark() {
  const ScenarioSet test = test_set();
  const RunSeeds s = run_seeds(cfg_);
  InstanceDecisions out;
  out.method = kBenchmarkMethod;
  const std::size_t n = test.size();
  out.decisions.resize(n);
  out.seconds.resize(n);
  out.objectives.resize(n);
  out.infeasible.assign(n, false);
  parallel_for(n, cfg_.threads, [&](std::size_t i) {
    const auto scen = gen_realizations(test.forecasts[i], static_cast<std::size_t>(cfg_.benchmark_realizations),
                                       derive_seed(s.benchmark, i), cfg_.realization_std);
    FirstStageDecision& dec = out.decisions[i];
    out.seconds[i] = time_method([&] {
      if (ctx_.app == Application::kRld) {
        const auto r = solve_extensive_rld(ctx_.net, ctx_.ops, scen);
        dec.p0 = r.p0;
        out.objectives[i] = r.objective;
      } else {
        const auto r = solve_extensive_reserve(ctx_.net, ctx_.ops, scen);
        dec = {r.p0, r.r_up, r.r_dn};
        out.objectives[i] = r.objective;
      }
    });
  });
  ensure_dir(path("decisions"));
  write_decisions(path("decisions/extensive.json"), out, ctx_);
  return out;
}

InstanceDecisions Pipeline::fit_affine() {
  const RunSeeds s = run_seeds(cfg_);
  const auto fit_scen = gen_realizations(ctx_.net.nominal_load, static_cast<std::size_t>(cfg_.affine_realizations),
                                         s.affine_fit, cfg_.realization_std);
  const AffineFit fit = feasopf::fit_affine(ctx_, fit_scen, cfg_.affine);
  ensure_dir(cfg_.out_dir);
  write_affine(path("affine_fit.json"), fit, ctx_);
  const ScenarioSet test = test_set();
  InstanceDecisions out;
  out.method = "affine";
  const std::size_t n = test.size();
  out.decisions.resize(n);
  out.seconds.resize(n);
  out.objectives.resize(n);
  out.infeasible.assign(n, false);
  parallel_for(n, cfg_.threads, [&](std::size_t i) {
    // same scenario stream as the benchmark so the two see identical samples
    const auto scen = gen_realizations(test.forecasts[i], static_cast<std::size_t>(cfg_.affine_realizations),
                                       derive_seed(s.benchmark, i), cfg_.realization_std);
    const AffineDecision d = affine_first_stage(ctx_, fit.factors, scen);
    out.decisions[i] = d.decision;
    out.seconds[i] = d.solve_seconds;
    out.objectives[i] = d.objective;
    out.infeasible[i] = d.infeasible;
  });
  ensure_dir(path("decisions"));
  write_decisions(path("decisions/affine.json"), out, ctx_);
  return out;
}

InstanceDecisions Pipeline::decide_proposed() {
  const LoadedPolicies pol = load_policies(path("train/policies.ckpt"), ctx_);
  const ScenarioSet test = test_set();
  InstanceDecisions out;
  out.method = "proposed";
  for (const auto& f : test.forecasts) {
    FirstStageDecision d;
    out.seconds.push_back(time_method([&] { d = pol.phi0->decide(f); }));
    out.decisions.push_back(std::move(d));
    out.infeasible.push_back(false);
  }
  ensure_dir(path("decisions"));
  write_decisions(path("decisions/proposed.json"), out, ctx_);
  return out;
}

std::vector<ComparisonRow> Pipeline::evaluate() {
  const ScenarioSet eval = eval_set();
  std::vector<MethodResult> results;
  for (const char* name : {kBenchmarkMethod, "affine", "proposed"}) {
    const std::string file = path(std::string("decisions/") + name + ".json");
    if (!fs::exists(file)) {
      require(std::string(name) != kBenchmarkMethod, "benchmark decisions are missing; run the benchmark stage first");
      continue;
    }
    const InstanceDecisions d = read_decisions(file, ctx_);
    require(d.decisions.size() == eval.size(), file + " does not match the test set size");
    MethodResult r;
    r.method = d.method;
    r.seconds = d.seconds;
    r.infeasible = d.infeasible;
    r.costs.resize(d.decisions.size());
    parallel_for(d.decisions.size(), cfg_.threads,
                 [&](std::size_t i) { r.costs[i] = out_of_sample_cost(ctx_, d.decisions[i], eval.realizations[i]); });
    results.push_back(std::move(r));
  }
  const auto rows = compare(results);
  std::ostringstream costs;
  costs << "instance";
  for (const auto& r : results) costs << ',' << r.method;
  costs << '\n';
  for (std::size_t i = 0; i < eval.size(); ++i) {
    costs << i;
    for (const auto& r : results) costs << ',' << fmt_double(r.costs[i]);
    costs << '\n';
  }
  write_text(path("costs.csv"), costs.str());
  write_text(path("comparison.csv"), comparison_csv(rows));
  write_text(path("comparison.md"), comparison_markdown(rows));
  return rows;
}

std::string Pipeline::report() const {
  const auto rows = parse_comparison_csv(read_text(path("comparison.csv")));
  std::ostringstream out;
  out << "Case " << ctx_.net.n_buses << "-bus, application " << to_string(ctx_.app) << ", "
      << cfg_.test_forecasts << " test instances, " << cfg_.eval_realizations << " evaluation realizations\n\n";
  out << comparison_markdown(rows);
  return out.str();
}

std::vector<ComparisonRow> Pipeline::run_all() {
  gen_data();
  train();
  benchmark();
  fit_affine();
  decide_proposed();
  return evaluate();
}

}  // namespace feasopf
