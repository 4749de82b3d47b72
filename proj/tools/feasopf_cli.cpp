#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/pipeline.hpp"

using namespace feasopf;

namespace {

struct Overrides {
  std::string config;
  std::string case_path;
  std::string app;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  bool resume = false;
};

RunConfig resolve(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  std::string base = ".";
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw IoError("cannot open config " + o.config);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config " + o.config + ": " + e.what());
    }
    base = std::filesystem::path(o.config).parent_path().string();
  }
  if (!o.case_path.empty()) j["case"] = std::filesystem::absolute(o.case_path).string();
  if (!o.app.empty()) j["application"] = o.app;
  if (o.seed) j["seed"] = *o.seed;
  if (o.threads) j["threads"] = *o.threads;
  if (!o.out.empty()) j["out"] = o.out;
  if (!j.contains("case")) throw ValidationError("no case given (use --case or a config with \"case\")");
  return run_config_from_json(j, base.empty() ? "." : base);
}

void print_rows(const std::vector<ComparisonRow>& rows) { std::cout << comparison_csv(rows); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage DC optimal power flow with feasibility-guaranteed learned policies"};
  app.require_subcommand(1);
  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run config");
    sub->add_option("--case", o.case_path, "case file (overrides config)");
    sub->add_option("--app", o.app, "application")->check(CLI::IsMember({"rld", "reserve"}));
    sub->add_option("--seed", o.seed, "run seed");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "output directory (relative paths honour FEASOPF_OUT_ROOT)");
  };
  auto* gen = app.add_subcommand("gen-data", "generate train/test/eval load datasets");
  auto* train = app.add_subcommand("train", "train the first- and second-stage networks");
  train->add_flag("--resume", o.resume, "continue from the last checkpoint");
  auto* bench = app.add_subcommand("benchmark", "solve the extensive form per test instance");
  auto* affine = app.add_subcommand("fit-affine", "fit participation factors and decide test instances");
  auto* eval = app.add_subcommand("evaluate", "out-of-sample comparison of all available methods");
  auto* report = app.add_subcommand("report", "print the comparison table");
  for (auto* sub : {gen, train, bench, affine, eval, report}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Pipeline p(resolve(o));
    if (gen->parsed()) {
      p.gen_data();
      std::cout << "datasets written to " << p.path("data") << '\n';
    } else if (train->parsed()) {
      const TrainResult r = p.train(o.resume);
      std::cout << "trained " << r.loss_history.size() << " iterations, final loss "
                << (r.loss_history.empty() ? 0.0 : r.loss_history.back()) << '\n';
    } else if (bench->parsed()) {
      const auto d = p.benchmark();
      std::cout << "solved " << d.decisions.size() << " extensive-form instances\n";
    } else if (affine->parsed()) {
      const auto d = p.fit_affine();
      int bad = 0;
      for (bool b : d.infeasible) bad += b;
      std::cout << "affine decisions for " << d.decisions.size() << " instances (" << bad << " infeasible)\n";
    } else if (eval->parsed()) {
      if (std::filesystem::exists(p.path("train/policies.ckpt"))) p.decide_proposed();
      print_rows(p.evaluate());
    } else if (report->parsed()) {
      const std::string text = p.report();
      std::ofstream(p.path("report.md")) << text;
      std::cout << text;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
