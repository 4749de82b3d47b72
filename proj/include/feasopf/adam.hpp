#pragma once

#include <vector>

#include "feasopf/tensor.hpp"

namespace feasopf::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});

  /// Throws SolverError if any parameter has no gradient yet.
  void step();
  void zero_grad();

  long step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  /// Flat moment buffers (first moments of every parameter, then second).
  std::vector<double> state() const;
  void set_state(long step, const std::vector<double>& moments);
  std::size_t state_size() const;

 private:
  std::vector<Tensor> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig config_;
  long step_ = 0;
};

}  // namespace feasopf::nn
