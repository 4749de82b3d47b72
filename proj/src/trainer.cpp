#include "feasopf/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "feasopf/checkpoint.hpp"
#include "feasopf/dispatch_lp.hpp"
#include "feasopf/errors.hpp"
#include "feasopf/util.hpp"

namespace feasopf {

namespace fs = std::filesystem;
using detail::require;
using nn::Matrix;
using nn::Tensor;

void TrainConfig::validate() const {
  require(realizations_per_iter >= 1, "realizations_per_iter must be >= 1");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(iterations >= 0, "iterations must be >= 0");
  require(checkpoint_every >= 0 && audit_every >= 1, "checkpoint_every >= 0 and audit_every >= 1 required");
  require(pretrain_iterations >= 0 && pretrain_samples >= 0, "pretraining counts must be >= 0");
  require(pretrain_iterations == 0 || pretrain_samples > 0, "pretraining needs pretrain_samples > 0");
  for (const PolicyShape* s : {&phi0_shape, &phiR_shape}) {
    require(!s->hidden.empty(), "hidden widths must be nonempty");
    for (int h : s->hidden) require(h >= 1, "hidden widths must be positive");
    require(s->dropout >= 0.0 && s->dropout < 1.0, "dropout must lie in [0, 1)");
    for (int c : s->conv_channels) require(c >= 1, "conv channels must be positive");
    require(s->kernel >= 1 && s->kernel % 2 == 1, "kernel must be odd");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"realizations_per_iter", c.realizations_per_iter},
          {"batch_size", c.batch_size},
          {"iterations", c.iterations},
          {"seed", c.seed},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps},
          {"phi0_conv", c.phi0_shape.conv_channels},
          {"phiR_conv", c.phiR_shape.conv_channels},
          {"kernel", c.phi0_shape.kernel},
          {"phi0_hidden", c.phi0_shape.hidden},
          {"phiR_hidden", c.phiR_shape.hidden},
          {"phi0_dropout", c.phi0_shape.dropout},
          {"phiR_dropout", c.phiR_shape.dropout},
          {"realization_std", c.realization_std},
          {"checkpoint_every", c.checkpoint_every},
          {"audit_every", c.audit_every},
          {"pretrain_iterations", c.pretrain_iterations},
          {"pretrain_samples", c.pretrain_samples}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "realizations_per_iter") c.realizations_per_iter = v.get<int>();
      else if (k == "batch_size") c.batch_size = v.get<int>();
      else if (k == "iterations") c.iterations = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "lr") c.adam.lr = v.get<double>();
      else if (k == "beta1") c.adam.beta1 = v.get<double>();
      else if (k == "beta2") c.adam.beta2 = v.get<double>();
      else if (k == "eps") c.adam.eps = v.get<double>();
      else if (k == "phi0_conv") c.phi0_shape.conv_channels = v.get<std::vector<int>>();
      else if (k == "phiR_conv") c.phiR_shape.conv_channels = v.get<std::vector<int>>();
      else if (k == "conv") c.phi0_shape.conv_channels = c.phiR_shape.conv_channels = v.get<std::vector<int>>();
      else if (k == "kernel") c.phi0_shape.kernel = c.phiR_shape.kernel = v.get<int>();
      else if (k == "phi0_hidden") c.phi0_shape.hidden = v.get<std::vector<int>>();
      else if (k == "phiR_hidden") c.phiR_shape.hidden = v.get<std::vector<int>>();
      else if (k == "hidden") c.phi0_shape.hidden = c.phiR_shape.hidden = v.get<std::vector<int>>();
      else if (k == "phi0_dropout") c.phi0_shape.dropout = v.get<double>();
      else if (k == "phiR_dropout") c.phiR_shape.dropout = v.get<double>();
      else if (k == "dropout") c.phi0_shape.dropout = c.phiR_shape.dropout = v.get<double>();
      else if (k == "realization_std") c.realization_std = v.get<double>();
      else if (k == "checkpoint_every") c.checkpoint_every = v.get<int>();
      else if (k == "audit_every") c.audit_every = v.get<int>();
      else if (k == "pretrain_iterations") c.pretrain_iterations = v.get<int>();
      else if (k == "pretrain_samples") c.pretrain_samples = v.get<int>();
      else throw ValidationError("unknown training key \"" + k + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

Tensor first_stage_cost_rows(const DispatchContext& ctx, const FirstStageBatch& b) {
  Tensor c = matmul(b.p0, Tensor::constant(ctx.net.alpha));
  if (ctx.app == Application::kReserve) c = add(c, matmul(add(b.r_up, b.r_dn), Tensor::constant(ctx.net.mu)));
  return c;
}

FirstStageBatch repeat(const FirstStageBatch& b, int k) {
  FirstStageBatch r;
  r.p0 = repeat_rows(b.p0, k);
  if (b.r_up.defined()) {
    r.r_up = repeat_rows(b.r_up, k);
    r.r_dn = repeat_rows(b.r_dn, k);
  }
  return r;
}

void audit(const DispatchContext& ctx, const LossTerms& t, int iteration) {
  for (Eigen::Index i = 0; i < t.first.p0.rows(); ++i) {
    const double v = first_stage_violation(ctx.net, ctx.app, t.first.row(i));
    if (v > 1e-9)
      throw SolverError("audit at iteration " + std::to_string(iteration) + ": first-stage violation " +
                        fmt_double(v));
  }
  const Matrix& theta = t.second.theta.value();
  for (Eigen::Index i = 0; i < theta.rows(); ++i)
    if (!contains(ctx.theta_set, theta.row(i).transpose(), 1e-9))
      throw SolverError("audit at iteration " + std::to_string(iteration) + ": angles leave the flow polytope");
}

struct RunFiles {
  fs::path dir;
  fs::path checkpoint() const { return dir / "checkpoint.ckpt"; }
  fs::path policies() const { return dir / "policies.ckpt"; }
  fs::path loss() const { return dir / "loss.csv"; }
  fs::path config() const { return dir / "config.json"; }
};

void write_loss_csv(const fs::path& path, const std::vector<double>& loss, const std::vector<double>& wall_ms) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,loss,wall_ms\n";
  for (std::size_t i = 0; i < loss.size(); ++i)
    out << i << ',' << fmt_double(loss[i]) << ',' << fmt_double(i < wall_ms.size() ? wall_ms[i] : 0.0) << '\n';
}

}  // namespace

LossTerms joint_loss(const DispatchContext& ctx, const FirstStagePolicy& phi0, const SecondStagePolicy& phiR,
                     const Matrix& forecasts, const Matrix& realizations, int k, nn::Mode mode,
                     std::mt19937_64* rng) {
  require(realizations.rows() == forecasts.rows() * k, "joint_loss: expected K realizations per forecast");
  LossTerms t;
  t.first = phi0.forward(Tensor::constant(forecasts), mode, rng);
  t.second = phiR.forward(repeat(t.first, k), Tensor::constant(realizations), mode, rng);
  // mean over rows of the repeated block = batch mean of (1/K) sum_k
  t.loss = add(mean(first_stage_cost_rows(ctx, t.first)), mean(t.second.cost));
  return t;
}

TrainResult train(const TrainConfig& cfg, const DispatchContext& ctx, const ScenarioSet& data,
                  const TrainOptions& opts) {
  cfg.validate();
  require(data.size() > 0, "training set is empty");
  require(data.n_buses() == ctx.net.n_buses, "training set does not match the case");
  TrainResult res;
  res.phi0 = std::make_unique<FirstStagePolicy>(ctx, cfg.phi0_shape, derive_seed(cfg.seed, 0xf0));
  res.phiR = std::make_unique<SecondStagePolicy>(ctx, cfg.phiR_shape, derive_seed(cfg.seed, 0xf1));

  RunFiles files{opts.run_dir};
  const bool persist = !opts.run_dir.empty();
  if (persist) {
    std::error_code ec;
    fs::create_directories(files.dir, ec);
    if (ec) throw IoError("cannot create run directory " + opts.run_dir + ": " + ec.message());
  }

  std::vector<nn::Tensor> params = res.phi0->model().parameters();
  for (const auto& p : res.phiR->model().parameters()) params.push_back(p);
  nn::Adam opt(params, cfg.adam);
  std::vector<double> wall_ms;
  int start = 0;

  if (persist && opts.resume && fs::exists(files.checkpoint())) {
    LoadedPolicies saved = load_policies(files.checkpoint().string(), ctx);
    const auto& h = saved.header;
    nlohmann::json saved_cfg = h.at("config"), now = to_json(cfg);
    saved_cfg.erase("iterations");
    now.erase("iterations");
    require(saved_cfg == now, "resume: training config differs from the checkpoint (only iterations may change)");
    res.phi0->model().set_flat_parameters(saved.phi0->model().flat_parameters());
    res.phiR->model().set_flat_parameters(saved.phiR->model().flat_parameters());
    opt.set_state(h.at("adam_step").get<long>(), saved.tail);
    start = h.at("iteration").get<int>();
    res.loss_history = h.at("loss_history").get<std::vector<double>>();
    res.pretrain_history = h.at("pretrain_history").get<std::vector<double>>();
    wall_ms = h.at("wall_ms").get<std::vector<double>>();
    require(static_cast<int>(res.loss_history.size()) == start, "checkpoint loss history is inconsistent");
  } else if (cfg.pretrain_iterations > 0) {
    const auto samples = make_pretrain_samples(ctx, data, static_cast<std::size_t>(cfg.pretrain_samples),
                                               derive_seed(cfg.seed, 0xb0), cfg.realization_std);
    res.pretrain_history = pretrain_phiR(cfg, ctx, *res.phiR, samples, cfg.pretrain_iterations);
  }
  if (persist) {
    std::ofstream out(files.config(), std::ios::trunc);
    if (!out) throw IoError("cannot write " + files.config().string());
    out << nlohmann::json{{"application", to_string(ctx.app)}, {"case_hash", case_hash(ctx.net)},
                          {"train", to_json(cfg)}}
               .dump(2)
        << '\n';
  }

  auto save = [&](int iteration) {
    const nlohmann::json extra{{"iteration", iteration},
                               {"adam_step", opt.step_count()},
                               {"loss_history", res.loss_history},
                               {"pretrain_history", res.pretrain_history},
                               {"wall_ms", wall_ms},
                               {"config", to_json(cfg)}};
    save_policies(files.checkpoint().string(), ctx, *res.phi0, *res.phiR, extra, opt.state());
    write_loss_csv(files.loss(), res.loss_history, wall_ms);
  };

  const int k = cfg.realizations_per_iter;
  const int n = ctx.net.n_buses;
  const auto n_data = static_cast<std::uint64_t>(data.size());
  const Stopwatch clock;
  const double offset_ms = wall_ms.empty() ? 0.0 : wall_ms.back();
  for (int it = start; it < cfg.iterations; ++it) {
    const std::uint64_t it_seed = derive_seed(cfg.seed, 0x1000, static_cast<std::uint64_t>(it));
    std::mt19937_64 rng(it_seed);
    std::vector<std::size_t> picks(static_cast<std::size_t>(cfg.batch_size));
    for (auto& p : picks) p = static_cast<std::size_t>(rng() % n_data);
    Matrix forecasts(cfg.batch_size, n), realizations(cfg.batch_size * k, n);
    for (int b = 0; b < cfg.batch_size; ++b) {
      forecasts.row(b) = data.forecasts[picks[b]].transpose();
      const auto draws = gen_realizations(data.forecasts[picks[b]], static_cast<std::size_t>(k),
                                          derive_seed(it_seed, 0x2000, static_cast<std::uint64_t>(b)),
                                          cfg.realization_std);
      for (int j = 0; j < k; ++j) realizations.row(b * k + j) = draws[j].transpose();
    }
    opt.zero_grad();
    const LossTerms t = joint_loss(ctx, *res.phi0, *res.phiR, forecasts, realizations, k, nn::Mode::kTrain, &rng);
    const double loss = t.loss.item();
    if (!std::isfinite(loss)) {
      std::string idx;
      for (auto p : picks) idx += (idx.empty() ? "" : ",") + std::to_string(p);
      throw SolverError("non-finite loss at iteration " + std::to_string(it) + " (batch forecasts " + idx + ")");
    }
    if (it % cfg.audit_every == 0) audit(ctx, t, it);
    t.loss.backward();
    opt.step();
    res.loss_history.push_back(loss);
    wall_ms.push_back(offset_ms + 1000.0 * clock.seconds());
    if (persist && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) save(it + 1);
  }
  if (persist) {
    save(static_cast<int>(res.loss_history.size()));
    save_policies(files.policies().string(), ctx, *res.phi0, *res.phiR);
  }
  return res;
}

std::vector<PretrainSample> make_pretrain_samples(const DispatchContext& ctx, const ScenarioSet& data,
                                                  std::size_t count, std::uint64_t seed, double realization_std) {
  require(data.size() > 0, "pretraining needs forecasts");
  const PowerNetwork& net = ctx.net;
  const int n = net.n_buses;
  std::vector<PretrainSample> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    std::mt19937_64 rng(derive_seed(seed, s));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::VectorXd& forecast = data.forecasts[rng() % data.size()];
    PretrainSample p;
    // generator-only dispatch around the forecast total
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    for (int g : net.gen_buses) w(g) = unit(rng);
    if (w.sum() <= 0.0) w(net.gen_buses.front()) = 1.0;
    p.decision.p0 = w / w.sum() * forecast.sum() * (0.7 + 0.6 * unit(rng));
    if (ctx.app == Application::kReserve) {
      p.decision.p0 = p.decision.p0.cwiseMin(net.p_max);
      p.decision.r_up = Eigen::VectorXd::Zero(n);
      p.decision.r_dn = Eigen::VectorXd::Zero(n);
      const double share = 0.5 * unit(rng);
      for (int i = 0; i < n; ++i) {
        p.decision.r_up(i) = share * unit(rng) * (net.p_max(i) - p.decision.p0(i));
        p.decision.r_dn(i) = share * unit(rng) * p.decision.p0(i);
      }
    }
    p.realization = sample_load(forecast, realization_std, rng());
    const Eigen::VectorXd net_demand = p.realization - p.decision.p0;
    p.target = ctx.app == Application::kRld
                   ? second_stage_rld(net, ctx.ops, net_demand).cost
                   : second_stage_reserve(net, ctx.ops, net_demand, p.decision.r_up, p.decision.r_dn).cost;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<double> pretrain_phiR(const TrainConfig& cfg, const DispatchContext& ctx, SecondStagePolicy& phiR,
                                  const std::vector<PretrainSample>& samples, int iterations) {
  require(!samples.empty() || iterations == 0, "pretraining needs samples");
  nn::Adam opt(phiR.model().parameters(), cfg.adam);
  const int n = ctx.net.n_buses;
  double scale2 = 0.0;
  for (const auto& s : samples) scale2 += s.target * s.target;
  scale2 = std::max(1.0, scale2 / static_cast<double>(std::max<std::size_t>(1, samples.size())));
  std::vector<double> history;
  const auto batch = static_cast<std::size_t>(std::min<std::size_t>(samples.size(), cfg.batch_size * cfg.realizations_per_iter));
  for (int it = 0; it < iterations; ++it) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 0xb1, static_cast<std::uint64_t>(it)));
    std::vector<FirstStageDecision> decisions;
    Matrix real(static_cast<Eigen::Index>(batch), n), target(static_cast<Eigen::Index>(batch), 1);
    for (std::size_t b = 0; b < batch; ++b) {
      const PretrainSample& s = samples[rng() % samples.size()];
      decisions.push_back(s.decision);
      real.row(static_cast<Eigen::Index>(b)) = s.realization.transpose();
      target(static_cast<Eigen::Index>(b), 0) = s.target;
    }
    opt.zero_grad();
    const SecondStageBatch out =
        phiR.forward(decision_batch(decisions, ctx.app), Tensor::constant(real), nn::Mode::kTrain, &rng);
    const Tensor diff = sub(out.cost, Tensor::constant(target));
    const Tensor loss = scale(mean(mul(diff, diff)), 1.0 / scale2);
    const double v = loss.item();
    if (!std::isfinite(v)) throw SolverError("non-finite pretraining loss at iteration " + std::to_string(it));
    loss.backward();
    opt.step();
    history.push_back(v);
  }
  return history;
}

}  // namespace feasopf
