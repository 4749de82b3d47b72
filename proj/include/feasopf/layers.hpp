#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "feasopf/tensor.hpp"
#include "json.hpp"

namespace feasopf::nn {

enum class LayerKind { kDense, kRelu, kTanh, kDropout, kConv1d };

/// One stage of a Sequential stack. Dense layers map `in` -> `out` features.
/// Conv1d treats its input as `channels_in` signals of length `length`
/// (channel-major), applies a same-padded kernel and emits `channels_out`
/// signals of the same length.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  int in = 0;
  int out = 0;
  int channels_in = 1;
  int channels_out = 1;
  int kernel = 3;
  int length = 0;
  double rate = 0.5;

  static LayerSpec dense(int in, int out);
  static LayerSpec relu();
  static LayerSpec tanh();
  static LayerSpec dropout(double rate = 0.5);
  static LayerSpec conv1d(int channels_in, int channels_out, int kernel, int length);
};

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_from_json(const nlohmann::json& j);
std::string to_string(LayerKind kind);

enum class Mode { kTrain, kEval };

class Sequential {
 public:
  Sequential() = default;
  /// Validates the chain and draws initial weights from `seed`.
  Sequential(std::vector<LayerSpec> specs, std::uint64_t seed);

  /// In train mode dropout masks are drawn from `rng`; eval mode ignores it.
  Tensor forward(const Tensor& x, Mode mode, std::mt19937_64* rng = nullptr) const;

  const std::vector<LayerSpec>& specs() const { return specs_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  int input_width() const { return input_width_; }
  int output_width() const { return output_width_; }
  std::size_t parameter_count() const;

  std::vector<double> flat_parameters() const;
  void set_flat_parameters(const std::vector<double>& flat);
  void zero_grad();

 private:
  std::vector<LayerSpec> specs_;
  std::vector<Tensor> params_;
  std::vector<int> param_index_;  // first parameter of each layer, -1 if none
  int input_width_ = 0;
  int output_width_ = 0;
};

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int channels_in, int channels_out,
              int kernel, int length);

}  // namespace feasopf::nn
