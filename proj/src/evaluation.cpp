#include "feasopf/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/util.hpp"

namespace feasopf {

using detail::require;

double out_of_sample_cost(const DispatchContext& ctx, const FirstStageDecision& decision,
                          const std::vector<Eigen::VectorXd>& realizations) {
  require(!realizations.empty(), "out-of-sample evaluation needs realizations");
  require(first_stage_violation(ctx.net, ctx.app, decision) <= 1e-6, "decision violates first-stage constraints");
  double total = 0.0;
  for (const auto& d : realizations) {
    const Eigen::VectorXd net_demand = d - decision.p0;
    total += ctx.app == Application::kRld
                 ? second_stage_rld(ctx.net, ctx.ops, net_demand).cost
                 : second_stage_reserve(ctx.net, ctx.ops, net_demand, decision.r_up, decision.r_dn).cost;
  }
  return first_stage_cost(ctx.net, ctx.app, decision) + total / static_cast<double>(realizations.size());
}

double MethodResult::mean_cost() const {
  return costs.empty() ? 0.0 : std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

double MethodResult::mean_seconds() const {
  return seconds.empty() ? 0.0
                         : std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
}

std::vector<ComparisonRow> compare(const std::vector<MethodResult>& methods, const std::string& benchmark) {
  const auto it = std::find_if(methods.begin(), methods.end(), [&](const MethodResult& m) { return m.method == benchmark; });
  if (it == methods.end()) throw ValidationError("comparison needs the benchmark method \"" + benchmark + "\"");
  const double base = it->mean_cost();
  require(base != 0.0, "benchmark mean cost is zero; ratios are undefined");
  std::vector<ComparisonRow> rows;
  for (const auto& m : methods) {
    require(m.costs.size() == it->costs.size(), "method " + m.method + " was scored on a different instance count");
    ComparisonRow r;
    r.method = m.method;
    r.mean_cost = m.mean_cost();
    r.ratio_pct = m.method == benchmark ? 100.0 : 100.0 * r.mean_cost / base;
    r.mean_time_s = m.mean_seconds();
    r.infeasible = static_cast<int>(std::count(m.infeasible.begin(), m.infeasible.end(), true));
    rows.push_back(r);
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "method,mean_cost,ratio_pct,mean_time_s\n";
  for (const auto& r : rows)
    out << r.method << ',' << fmt_double(r.mean_cost) << ',' << fmt_double(r.ratio_pct) << ','
        << fmt_double(r.mean_time_s) << '\n';
  return out.str();
}

std::string comparison_markdown(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "| Method | Total cost (average, %) | Solving time (average, minutes) |\n";
  out << "|---|---:|---:|\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "| %s | %.3f | %.3e |\n", r.method.c_str(), r.ratio_pct, r.mean_time_s / 60.0);
    out << buf;
  }
  return out.str();
}

std::vector<ComparisonRow> parse_comparison_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  require(line == "method,mean_cost,ratio_pct,mean_time_s", "comparison CSV has an unexpected header");
  std::vector<ComparisonRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    for (auto& cell : f) std::getline(ss, cell, ',');
    try {
      rows.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), 0});
    } catch (const std::exception&) {
      throw ValidationError("comparison CSV row is malformed: " + line);
    }
  }
  return rows;
}

double time_method(const std::function<void()>& f) {
  const Stopwatch clock;
  f();
  return clock.seconds();
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace feasopf
