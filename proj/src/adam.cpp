#include "feasopf/adam.hpp"

#include <cmath>
#include <string>

#include "feasopf/errors.hpp"

namespace feasopf::nn {

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  detail::require(config_.lr > 0.0 && config_.eps > 0.0, "Adam: lr and eps must be positive");
  detail::require(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0,
                  "Adam: betas must lie in [0, 1)");
  for (const Tensor& p : params_) {
    m_.push_back(Matrix::Zero(p.rows(), p.cols()));
    v_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (!params_[i].has_grad()) throw SolverError("Adam: parameter " + std::to_string(i) + " has no gradient");
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Matrix& g = params_[i].grad();
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    params_[i].mutable_value().array() -=
        config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

std::size_t Adam::state_size() const {
  std::size_t n = 0;
  for (const Matrix& m : m_) n += static_cast<std::size_t>(m.size());
  return 2 * n;
}

std::vector<double> Adam::state() const {
  std::vector<double> flat;
  flat.reserve(state_size());
  for (const Matrix& m : m_) flat.insert(flat.end(), m.data(), m.data() + m.size());
  for (const Matrix& v : v_) flat.insert(flat.end(), v.data(), v.data() + v.size());
  return flat;
}

void Adam::set_state(long step, const std::vector<double>& moments) {
  detail::require(moments.size() == state_size(), "Adam: moment blob has the wrong size");
  detail::require(step >= 0, "Adam: negative step count");
  std::size_t at = 0;
  for (auto* group : {&m_, &v_})
    for (Matrix& buf : *group) {
      std::copy(moments.begin() + static_cast<std::ptrdiff_t>(at),
                moments.begin() + static_cast<std::ptrdiff_t>(at + buf.size()), buf.data());
      at += static_cast<std::size_t>(buf.size());
    }
  step_ = step;
}

}  // namespace feasopf::nn
