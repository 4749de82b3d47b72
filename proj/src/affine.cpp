#include "feasopf/affine.hpp"

#include <cmath>
#include <fstream>

#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/lp.hpp"
#include "feasopf/util.hpp"

namespace feasopf {

using detail::require;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double participation_violation(const PowerNetwork& net, const ParticipationFactors& f) {
  require(f.xi.size() == net.n_buses, "participation factors have the wrong length");
  double v = std::abs(f.xi.sum() - 1.0);
  for (int i = 0; i < net.n_buses; ++i)
    v = std::max(v, net.is_generator(i) ? -f.xi(i) : std::abs(f.xi(i)));
  return v;
}

ParticipationFactors uniform_participation(const PowerNetwork& net) {
  require(!net.gen_buses.empty(), "case has no generator buses");
  ParticipationFactors f{VectorXd::Zero(net.n_buses)};
  for (int g : net.gen_buses) f.xi(g) = 1.0 / static_cast<double>(net.gen_buses.size());
  return f;
}

MatrixXd ptdf(const AngleOperators& ops) {
  const Eigen::Index n = ops.injection.rows();
  MatrixXd reduced(n - 1, n - 1);
  MatrixXd select = MatrixXd::Zero(n - 1, n);
  for (Eigen::Index i = 0, r = 0; i < n; ++i) {
    if (i == ops.slack) continue;
    reduced.row(r) = ops.injection.row(i);
    select(r, i) = 1.0;
    ++r;
  }
  return ops.flow * reduced.partialPivLu().solve(select);
}

namespace {

struct Fixed {
  VectorXd p0, r_up, r_dn;
};

// Scenario totals and the pieces shared by both alternation steps.
struct Setup {
  const DispatchContext& ctx;
  const std::vector<VectorXd>& scen;
  MatrixXd H;  // ptdf
  VectorXd fmax;
  std::vector<int> gens;
  Setup(const DispatchContext& c, const std::vector<VectorXd>& s)
      : ctx(c), scen(s), H(ptdf(c.ops)), fmax(c.net.flow_limits()), gens(c.net.gen_buses) {}
  int n() const { return ctx.net.n_buses; }
  int m() const { return static_cast<int>(H.rows()); }
  int k() const { return static_cast<int>(scen.size()); }
  int g() const { return static_cast<int>(gens.size()); }
  bool reserve() const { return ctx.app == Application::kReserve; }
};

// Inequality rows are collected first and copied into the program once.
struct Rows {
  std::vector<Eigen::RowVectorXd> a;
  std::vector<double> b;
  void add(const Eigen::RowVectorXd& row, double rhs) {
    a.push_back(row);
    b.push_back(rhs);
  }
  void into(LinearProgram& lp) const {
    lp.A_ub.resize(static_cast<Eigen::Index>(a.size()), lp.n_vars());
    lp.b_ub.resize(static_cast<Eigen::Index>(a.size()));
    for (std::size_t r = 0; r < a.size(); ++r) {
      lp.A_ub.row(static_cast<Eigen::Index>(r)) = a[r];
      lp.b_ub(static_cast<Eigen::Index>(r)) = b[r];
    }
  }
};

// First stage with xi fixed. Layout: p0 | (r_up | r_dn) | per scenario epigraph.
LinearProgram first_stage_lp(const Setup& s, const VectorXd& xi, bool with_flows) {
  const int n = s.n(), k = s.k(), g = s.g();
  const int first = s.reserve() ? 3 * n : n;
  const int per = s.reserve() ? 2 * g : 1;
  LinearProgram lp = LinearProgram::with_variables(first + per * k);
  Rows rows;
  const double w = 1.0 / std::max(1, k);
  lp.c.head(n) = s.ctx.net.alpha;
  if (s.reserve()) {
    lp.c.segment(n, n) = s.ctx.net.mu;
    lp.c.segment(2 * n, n) = s.ctx.net.mu;
    lp.ub.head(n) = s.ctx.net.p_max;
  }
  const double beta_xi = s.ctx.net.beta.dot(xi);
  // flow rows depend on p0 through (I - xi 1^T)
  const MatrixXd Hp = s.H - (s.H * xi) * Eigen::RowVectorXd::Ones(n);
  if (s.reserve()) {
    for (int i = 0; i < n; ++i) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
      row(i) = 1.0;
      row(n + i) = 1.0;
      rows.add(row, s.ctx.net.p_max(i));
      row.setZero();
      row(2 * n + i) = 1.0;
      row(i) = -1.0;
      rows.add(row, 0.0);
    }
  }
  for (int j = 0; j < k; ++j) {
    const VectorXd& d = s.scen[j];
    const double total = d.sum();
    const int base = first + per * j;
    if (s.reserve()) {
      for (int a = 0; a < g; ++a) {
        const int i = s.gens[a];
        lp.c(base + a) = w * s.ctx.net.gamma_res(i);
        lp.c(base + g + a) = w * s.ctx.net.gamma_res(i);
        // xi_i (D - 1^T p0) - r_up_i - s+ <= 0
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
        row.head(n).setConstant(-xi(i));
        row(n + i) = -1.0;
        row(base + a) = -1.0;
        rows.add(row, -xi(i) * total);
        // -xi_i (D - 1^T p0) - r_dn_i - s- <= 0
        row.setZero();
        row.head(n).setConstant(xi(i));
        row(2 * n + i) = -1.0;
        row(base + g + a) = -1.0;
        rows.add(row, xi(i) * total);
      }
    } else {
      lp.c(base) = w * beta_xi;
      // t >= D - 1^T p0
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
      row.head(n).setConstant(-1.0);
      row(base) = -1.0;
      rows.add(row, -total);
    }
    if (!with_flows) continue;
    const VectorXd offset = s.H * (xi * total - d);
    for (int l = 0; l < s.m(); ++l) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
      row.head(n) = Hp.row(l);
      rows.add(row, s.fmax(l) - offset(l));
      row.head(n) = -Hp.row(l);
      rows.add(row, s.fmax(l) + offset(l));
    }
  }
  rows.into(lp);
  return lp;
}

Fixed read_first(const Setup& s, const VectorXd& x) {
  const int n = s.n();
  Fixed f;
  f.p0 = x.head(n).cwiseMax(0.0);
  if (s.reserve()) {
    f.r_up = x.segment(n, n).cwiseMax(0.0);
    f.r_dn = x.segment(2 * n, n).cwiseMax(0.0);
  }
  return f;
}

// xi with the first stage fixed. Layout: xi_G | per scenario epigraph.
LinearProgram participation_lp(const Setup& s, const Fixed& f) {
  const int k = s.k(), g = s.g();
  const int per = s.reserve() ? 2 * g : 0;
  LinearProgram lp = LinearProgram::with_variables(g + per * k);
  Rows rows;
  const double w = 1.0 / std::max(1, k);
  lp.A_eq = MatrixXd::Zero(1, lp.n_vars());
  lp.A_eq.row(0).head(g).setOnes();
  lp.b_eq = VectorXd::Ones(1);
  MatrixXd Hg(s.m(), g);
  for (int a = 0; a < g; ++a) Hg.col(a) = s.H.col(s.gens[a]);
  const double supplied = f.p0.sum();
  for (int j = 0; j < k; ++j) {
    const VectorXd& d = s.scen[j];
    const double mismatch = d.sum() - supplied;
    const int base = g + per * j;
    if (s.reserve()) {
      for (int a = 0; a < g; ++a) {
        const int i = s.gens[a];
        lp.c(base + a) = w * s.ctx.net.gamma_res(i);
        lp.c(base + g + a) = w * s.ctx.net.gamma_res(i);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
        row(a) = mismatch;
        row(base + a) = -1.0;
        rows.add(row, f.r_up(i));
        row.setZero();
        row(a) = -mismatch;
        row(base + g + a) = -1.0;
        rows.add(row, f.r_dn(i));
      }
    } else {
      for (int a = 0; a < g; ++a) lp.c(a) += w * std::max(0.0, mismatch) * s.ctx.net.beta(s.gens[a]);
    }
    const VectorXd offset = s.H * (f.p0 - d);
    for (int l = 0; l < s.m(); ++l) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(lp.n_vars());
      row.head(g) = mismatch * Hg.row(l);
      rows.add(row, s.fmax(l) - offset(l));
      row.head(g) = -mismatch * Hg.row(l);
      rows.add(row, s.fmax(l) + offset(l));
    }
  }
  rows.into(lp);
  return lp;
}

double first_stage_value(const Setup& s, const Fixed& f) {
  double v = s.ctx.net.alpha.dot(f.p0);
  if (s.reserve()) v += s.ctx.net.mu.dot(f.r_up + f.r_dn);
  return v;
}

bool clean(const LpSolution& sol) { return sol.optimal() && sol.residuals.within(1e-8); }

[[noreturn]] void report_infeasible(const Setup& s, const VectorXd& xi) {
  for (int j = 0; j < s.k(); ++j) {
    const std::vector<VectorXd> one{s.scen[j]};
    const Setup single(s.ctx, one);
    if (!solve_lp(first_stage_lp(single, xi, true)).optimal())
      throw SolverError("affine fit infeasible: scenario " + std::to_string(j) + " violates the flow limits");
  }
  throw SolverError("affine fit infeasible: scenarios are jointly incompatible with the flow limits");
}

AffineFit fit(const DispatchContext& ctx, const std::vector<VectorXd>& realizations, const AffineOptions& opts) {
  require(opts.max_rounds >= 1 && opts.tolerance >= 0.0, "affine options out of range");
  const Setup s(ctx, realizations);
  AffineFit out;
  out.factors = uniform_participation(ctx.net);
  const int n = s.n();
  if (realizations.empty()) {
    out.decision.p0 = VectorXd::Zero(n);
    if (s.reserve()) out.decision.r_up = out.decision.r_dn = VectorXd::Zero(n);
    return out;
  }
  for (const auto& d : realizations) require(d.size() == n, "realization has the wrong length");
  double previous = kInf;
  for (int round = 0; round < opts.max_rounds; ++round) {
    const LpSolution a = solve_lp(first_stage_lp(s, out.factors.xi, true));
    if (a.status == LpStatus::kInfeasible) report_infeasible(s, out.factors.xi);
    require_optimal(a, "affine first-stage step");
    const Fixed f = read_first(s, a.x);
    out.decision = {f.p0, f.r_up, f.r_dn};
    out.objective = a.objective;
    out.rounds = round + 1;
    out.objective_trace.push_back(a.objective);
    if (std::abs(previous - a.objective) <= opts.tolerance * std::max(1.0, std::abs(a.objective))) break;
    previous = a.objective;
    if (round + 1 == opts.max_rounds) break;
    const LpSolution b = solve_lp(participation_lp(s, f));
    if (!clean(b)) break;  // keep the last consistent pair
    ParticipationFactors next{VectorXd::Zero(n)};
    for (int a2 = 0; a2 < s.g(); ++a2) next.xi(s.gens[a2]) = std::max(0.0, b.x(a2));
    next.xi /= next.xi.sum();
    out.objective_trace.push_back(first_stage_value(s, f) + b.objective);
    out.factors = next;
  }
  return out;
}

}  // namespace

AffineFit fit_affine_rld(const DispatchContext& ctx, const std::vector<VectorXd>& realizations,
                         const AffineOptions& opts) {
  require(ctx.app == Application::kRld, "fit_affine_rld needs an RLD context");
  return fit(ctx, realizations, opts);
}

AffineFit fit_affine_reserve(const DispatchContext& ctx, const std::vector<VectorXd>& realizations,
                             const AffineOptions& opts) {
  require(ctx.app == Application::kReserve, "fit_affine_reserve needs a reserve context");
  return fit(ctx, realizations, opts);
}

AffineFit fit_affine(const DispatchContext& ctx, const std::vector<VectorXd>& realizations,
                     const AffineOptions& opts) {
  return fit(ctx, realizations, opts);
}

AffineDecision affine_first_stage(const DispatchContext& ctx, const ParticipationFactors& factors,
                                  const std::vector<VectorXd>& realizations) {
  const Stopwatch clock;
  require(participation_violation(ctx.net, factors) <= 1e-9, "participation factors are invalid");
  const Setup s(ctx, realizations);
  AffineDecision out;
  LpSolution sol = solve_lp(first_stage_lp(s, factors.xi, true));
  if (sol.status == LpStatus::kInfeasible) {
    out.infeasible = true;
    sol = solve_lp(first_stage_lp(s, factors.xi, false));
  }
  require_optimal(sol, "affine first-stage decision");
  const Fixed f = read_first(s, sol.x);
  out.decision = {f.p0, f.r_up, f.r_dn};
  out.objective = sol.objective;
  out.solve_seconds = clock.seconds();
  return out;
}

nlohmann::json to_json(const AffineFit& fit, const DispatchContext& ctx) {
  auto vec = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json j{{"case_hash", case_hash(ctx.net)},
                   {"application", to_string(ctx.app)},
                   {"xi", vec(fit.factors.xi)},
                   {"p0", vec(fit.decision.p0)},
                   {"objective", fit.objective},
                   {"rounds", fit.rounds},
                   {"objective_trace", fit.objective_trace}};
  if (ctx.app == Application::kReserve) {
    j["r_up"] = vec(fit.decision.r_up);
    j["r_dn"] = vec(fit.decision.r_dn);
  }
  return j;
}

void write_affine(const std::string& path, const AffineFit& fit, const DispatchContext& ctx) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << to_json(fit, ctx).dump(2) << '\n';
}

AffineFit read_affine(const std::string& path, const DispatchContext& ctx) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  AffineFit fit;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    require(j.at("case_hash").get<std::string>() == case_hash(ctx.net), path + " was fitted on another case");
    require(parse_application(j.at("application").get<std::string>()) == ctx.app,
            path + " was fitted for another application");
    auto vec = [&](const char* key) {
      const auto v = j.at(key).get<std::vector<double>>();
      require(static_cast<int>(v.size()) == ctx.net.n_buses, path + ": " + key + " has the wrong length");
      return VectorXd(Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    fit.factors.xi = vec("xi");
    fit.decision.p0 = vec("p0");
    if (ctx.app == Application::kReserve) {
      fit.decision.r_up = vec("r_up");
      fit.decision.r_dn = vec("r_dn");
    }
    fit.objective = j.at("objective").get<double>();
    fit.rounds = j.at("rounds").get<int>();
    fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  require(participation_violation(ctx.net, fit.factors) <= 1e-9, path + ": participation factors are invalid");
  return fit;
}

}  // namespace feasopf
