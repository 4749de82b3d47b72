#include "feasopf/policy.hpp"

#include <algorithm>

#include "feasopf/checkpoint.hpp"
#include "feasopf/errors.hpp"

namespace feasopf {

using detail::require;
using nn::Matrix;
using nn::Tensor;

std::string to_string(Application app) { return app == Application::kRld ? "rld" : "reserve"; }

Application parse_application(const std::string& name) {
  if (name == "rld") return Application::kRld;
  if (name == "reserve") return Application::kReserve;
  throw ValidationError("unknown application \"" + name + "\" (expected rld or reserve)");
}

double first_stage_cost(const PowerNetwork& net, Application app, const FirstStageDecision& dec) {
  double c = net.alpha.dot(dec.p0);
  if (app == Application::kReserve) c += net.mu.dot(dec.r_up + dec.r_dn);
  return c;
}

double first_stage_violation(const PowerNetwork& net, Application app, const FirstStageDecision& dec) {
  require(dec.p0.size() == net.n_buses, "decision p0 has the wrong length");
  double v = std::max(0.0, -dec.p0.minCoeff());
  if (app == Application::kRld) return v;
  require(dec.r_up.size() == net.n_buses && dec.r_dn.size() == net.n_buses, "decision reserves have the wrong length");
  v = std::max(v, (dec.p0 - net.p_max).maxCoeff());
  v = std::max(v, (dec.p0 + dec.r_up - net.p_max).maxCoeff());
  v = std::max(v, (dec.r_dn - dec.p0).maxCoeff());
  v = std::max(v, -dec.r_up.minCoeff());
  v = std::max(v, -dec.r_dn.minCoeff());
  return v;
}

FirstStageDecision FirstStageBatch::row(Eigen::Index i) const {
  FirstStageDecision d;
  d.p0 = p0.value().row(i).transpose();
  if (r_up.defined()) {
    d.r_up = r_up.value().row(i).transpose();
    d.r_dn = r_dn.value().row(i).transpose();
  }
  return d;
}

DispatchContext::DispatchContext(PowerNetwork network, Application application)
    : net(std::move(network)),
      app(application),
      ops(build_operators(net)),
      theta_set(theta_polytope(ops, net.flow_limits())),
      box(unit_inf_ball(net.n_buses - 1)),
      load_scale(std::max(1.0, net.nominal_load.sum())) {
  require(net.n_buses >= 2, "policies need at least two buses");
}

namespace {

std::vector<nn::LayerSpec> trunk(int groups, int buses, int out, const PolicyShape& shape, nn::LayerKind head) {
  require(!shape.hidden.empty(), "at least one hidden layer is required");
  std::vector<nn::LayerSpec> specs;
  int channels = groups;
  for (int c : shape.conv_channels) {
    specs.push_back(nn::LayerSpec::conv1d(channels, c, shape.kernel, buses));
    specs.push_back(nn::LayerSpec::relu());
    channels = c;
  }
  int width = channels * buses;
  for (int h : shape.hidden) {
    specs.push_back(nn::LayerSpec::dense(width, h));
    specs.push_back(nn::LayerSpec::relu());
    if (shape.dropout > 0.0) specs.push_back(nn::LayerSpec::dropout(shape.dropout));
    width = h;
  }
  specs.push_back(nn::LayerSpec::dense(width, out));
  specs.push_back(head == nn::LayerKind::kRelu ? nn::LayerSpec::relu() : nn::LayerSpec::tanh());
  return specs;
}

Tensor row_constant(const Eigen::VectorXd& v) { return Tensor::constant(v.transpose()); }
Tensor col_constant(const Eigen::VectorXd& v) { return Tensor::constant(v); }

// (d - nominal) / (0.1 nominal), zero on buses without load.
Tensor normalized_load(const Tensor& d, const Eigen::VectorXd& nominal) {
  Eigen::VectorXd inv(nominal.size());
  for (Eigen::Index i = 0; i < nominal.size(); ++i) inv(i) = nominal(i) > 0.0 ? 10.0 / nominal(i) : 0.0;
  return add_row(mul_row(d, row_constant(inv)), row_constant(-nominal.cwiseProduct(inv)));
}

void check_last(const nn::Sequential& model, nn::LayerKind kind, const char* what) {
  require(model.specs().back().kind == kind, std::string(what) + ": unexpected output activation");
}

}  // namespace

FirstStagePolicy::FirstStagePolicy(const DispatchContext& ctx, const PolicyShape& shape, std::uint64_t seed)
    : FirstStagePolicy(ctx, nn::Sequential(trunk(1, ctx.net.n_buses,
                                                 ctx.app == Application::kRld ? ctx.net.n_buses : 3 * ctx.net.n_buses,
                                                 shape,
                                                 ctx.app == Application::kRld ? nn::LayerKind::kRelu
                                                                              : nn::LayerKind::kTanh),
                                           seed)) {}

FirstStagePolicy::FirstStagePolicy(const DispatchContext& ctx, nn::Sequential model)
    : ctx_(&ctx), model_(std::move(model)) {
  const int n = ctx.net.n_buses;
  require(model_.input_width() == n, "phi0 input width must equal the bus count");
  if (ctx.app == Application::kRld) {
    require(model_.output_width() == n, "RLD phi0 must output one value per bus");
    check_last(model_, nn::LayerKind::kRelu, "RLD phi0");
  } else {
    require(model_.output_width() == 3 * n, "reserve phi0 must output 3N values");
    check_last(model_, nn::LayerKind::kTanh, "reserve phi0");
  }
}

Tensor FirstStagePolicy::features(const Tensor& forecasts) const {
  require(forecasts.cols() == ctx_->net.n_buses, "forecast width does not match the bus count");
  return normalized_load(forecasts, ctx_->net.nominal_load);
}

FirstStageBatch FirstStagePolicy::decode_reserve(const Tensor& u, const Eigen::VectorXd& p_max) {
  const Eigen::Index n = p_max.size();
  require(u.cols() == 3 * n, "reserve decode expects 3N columns");
  auto unit = [&](Eigen::Index block) { return scale(add_scalar(slice_cols(u, block * n, n), 1.0), 0.5); };
  FirstStageBatch out;
  out.p0 = mul_row(unit(0), row_constant(p_max));
  out.r_up = mul(unit(1), add_row(scale(out.p0, -1.0), row_constant(p_max)));
  out.r_dn = mul(unit(2), out.p0);
  return out;
}

FirstStageBatch FirstStagePolicy::forward(const Tensor& forecasts, nn::Mode mode, std::mt19937_64* rng) const {
  const Tensor y = model_.forward(features(forecasts), mode, rng);
  if (ctx_->app == Application::kReserve) return decode_reserve(y, ctx_->net.p_max);
  // positive output scale keeps the ReLU range and puts p0 in MW
  FirstStageBatch out;
  out.p0 = scale(y, ctx_->load_scale / ctx_->net.n_buses);
  return out;
}

FirstStageDecision FirstStagePolicy::decide(const Eigen::VectorXd& forecast) const {
  nn::NoGradGuard guard;
  return forward(Tensor::constant(forecast.transpose()), nn::Mode::kEval).row(0);
}

Tensor gauge_map_rows(const Tensor& u, const PolyhedralCSet& box, const PolyhedralCSet& Q) {
  require(u.cols() == box.dim() && u.cols() == Q.dim(), "gauge map: dimension mismatch");
  const Matrix uv = u.value();
  Matrix out(uv.rows(), uv.cols());
  for (Eigen::Index i = 0; i < uv.rows(); ++i) out.row(i) = gauge_map(uv.row(i).transpose(), box, Q).image.transpose();
  return Tensor::make(std::move(out), {u}, [uv, &box, &Q](const Matrix& g, std::vector<Matrix>& grads) {
    Matrix gu(uv.rows(), uv.cols());
    for (Eigen::Index i = 0; i < uv.rows(); ++i)
      gu.row(i) = gauge_map_vjp(uv.row(i).transpose(), box, Q, g.row(i).transpose()).transpose();
    grads[0] = std::move(gu);
  });
}

SecondStagePolicy::SecondStagePolicy(const DispatchContext& ctx, const PolicyShape& shape, std::uint64_t seed)
    : SecondStagePolicy(ctx, nn::Sequential(trunk(ctx.app == Application::kRld ? 2 : 4, ctx.net.n_buses,
                                                  ctx.net.n_buses - 1, shape, nn::LayerKind::kTanh),
                                            seed)) {}

SecondStagePolicy::SecondStagePolicy(const DispatchContext& ctx, nn::Sequential model)
    : ctx_(&ctx), model_(std::move(model)) {
  const int n = ctx.net.n_buses;
  require(model_.input_width() == (ctx.app == Application::kRld ? 2 : 4) * n, "phiR input width mismatch");
  require(model_.output_width() == n - 1, "phiR must output one value per non-slack angle");
  check_last(model_, nn::LayerKind::kTanh, "phiR");
}

SecondStageBatch SecondStagePolicy::from_head(const Tensor& u, const FirstStageBatch& decision,
                                              const Tensor& realizations) const {
  const PowerNetwork& net = ctx_->net;
  require(realizations.cols() == net.n_buses, "realization width does not match the bus count");
  require(decision.p0.rows() == realizations.rows() && u.rows() == realizations.rows(),
          "phiR: decision and realization rows differ");
  SecondStageBatch out;
  out.u = u;
  out.theta = gauge_map_rows(u, ctx_->box, ctx_->theta_set);
  const Tensor bt = Tensor::constant(ctx_->ops.injection.transpose());
  out.p_recourse = add(matmul(out.theta, bt), sub(realizations, decision.p0));
  if (ctx_->app == Application::kRld) {
    out.cost = matmul(relu(out.p_recourse), col_constant(net.beta));
  } else {
    const Tensor short_up = relu(sub(out.p_recourse, decision.r_up));
    const Tensor short_dn = relu(scale(add(out.p_recourse, decision.r_dn), -1.0));
    out.cost = matmul(add(short_up, short_dn), col_constant(net.gamma_res));
  }
  return out;
}

SecondStageBatch SecondStagePolicy::forward(const FirstStageBatch& decision, const Tensor& realizations,
                                            nn::Mode mode, std::mt19937_64* rng) const {
  // one MW scale for every input so d - p0 is a plain linear feature
  const double s = static_cast<double>(ctx_->net.n_buses) / ctx_->load_scale;
  std::vector<Tensor> parts{scale(decision.p0, s)};
  if (ctx_->app == Application::kReserve) {
    parts.push_back(scale(decision.r_up, s));
    parts.push_back(scale(decision.r_dn, s));
  }
  parts.push_back(scale(add_row(realizations, row_constant(-ctx_->net.nominal_load)), s));
  const Tensor u = model_.forward(concat_cols(parts), mode, rng);
  return from_head(u, decision, realizations);
}

FirstStageDecision phi0_rld(const FirstStagePolicy& phi0, const Eigen::VectorXd& forecast) {
  return phi0.decide(forecast);
}

FirstStageDecision phi0_reserve(const FirstStagePolicy& phi0, const Eigen::VectorXd& forecast) {
  return phi0.decide(forecast);
}

FirstStageBatch decision_batch(const std::vector<FirstStageDecision>& decisions, Application app) {
  require(!decisions.empty(), "empty decision list");
  const Eigen::Index n = decisions.front().p0.size();
  const Eigen::Index rows = static_cast<Eigen::Index>(decisions.size());
  Matrix p0(rows, n), up(rows, n), dn(rows, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    p0.row(i) = decisions[i].p0.transpose();
    if (app == Application::kReserve) {
      up.row(i) = decisions[i].r_up.transpose();
      dn.row(i) = decisions[i].r_dn.transpose();
    }
  }
  FirstStageBatch b;
  b.p0 = Tensor::constant(std::move(p0));
  if (app == Application::kReserve) {
    b.r_up = Tensor::constant(std::move(up));
    b.r_dn = Tensor::constant(std::move(dn));
  }
  return b;
}

SecondStageOutput phiR(const SecondStagePolicy& policy, const FirstStageDecision& decision,
                       const Eigen::VectorXd& realization) {
  nn::NoGradGuard guard;
  const Application app = decision.r_up.size() > 0 ? Application::kReserve : Application::kRld;
  const SecondStageBatch b =
      policy.forward(decision_batch({decision}, app), Tensor::constant(realization.transpose()), nn::Mode::kEval);
  return {b.theta.value().row(0).transpose(), b.p_recourse.value().row(0).transpose(), b.cost.value()(0, 0)};
}

namespace {

nlohmann::json layers_json(const nn::Sequential& m) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : m.specs()) j.push_back(nn::to_json(s));
  return j;
}

nn::Sequential model_from(const nlohmann::json& layers, const std::vector<double>& blob, std::size_t& at) {
  std::vector<nn::LayerSpec> specs;
  for (const auto& j : layers) specs.push_back(nn::layer_from_json(j));
  nn::Sequential m(specs, 0);
  const std::size_t count = m.parameter_count();
  require(at + count <= blob.size(), "checkpoint blob is shorter than the declared models");
  m.set_flat_parameters(std::vector<double>(blob.begin() + static_cast<std::ptrdiff_t>(at),
                                            blob.begin() + static_cast<std::ptrdiff_t>(at + count)));
  at += count;
  return m;
}

}  // namespace

void save_policies(const std::string& path, const DispatchContext& ctx, const FirstStagePolicy& phi0,
                   const SecondStagePolicy& phiR, const nlohmann::json& extra, const std::vector<double>& tail) {
  nn::Checkpoint ckpt;
  ckpt.header = extra.is_object() ? extra : nlohmann::json::object();
  ckpt.header["application"] = to_string(ctx.app);
  ckpt.header["case_hash"] = case_hash(ctx.net);
  ckpt.header["phi0"] = layers_json(phi0.model());
  ckpt.header["phiR"] = layers_json(phiR.model());
  ckpt.header["tail"] = tail.size();
  ckpt.blob = phi0.model().flat_parameters();
  const auto r = phiR.model().flat_parameters();
  ckpt.blob.insert(ckpt.blob.end(), r.begin(), r.end());
  ckpt.blob.insert(ckpt.blob.end(), tail.begin(), tail.end());
  nn::write_checkpoint(path, ckpt);
}

LoadedPolicies load_policies(const std::string& path, const DispatchContext& ctx) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  LoadedPolicies out;
  out.header = ckpt.header;
  try {
    require(parse_application(ckpt.header.at("application").get<std::string>()) == ctx.app,
            "checkpoint " + path + " was trained for another application");
    require(ckpt.header.at("case_hash").get<std::string>() == case_hash(ctx.net),
            "checkpoint " + path + " was trained on another case");
    std::size_t at = 0;
    out.phi0 = std::make_unique<FirstStagePolicy>(ctx, model_from(ckpt.header.at("phi0"), ckpt.blob, at));
    out.phiR = std::make_unique<SecondStagePolicy>(ctx, model_from(ckpt.header.at("phiR"), ckpt.blob, at));
    const std::size_t tail = ckpt.header.at("tail").get<std::size_t>();
    require(at + tail == ckpt.blob.size(), "checkpoint " + path + " has a blob of unexpected length");
    out.tail.assign(ckpt.blob.begin() + static_cast<std::ptrdiff_t>(at), ckpt.blob.end());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint " + path + ": " + e.what());
  }
  return out;
}

}  // namespace feasopf
