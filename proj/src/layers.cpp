#include "feasopf/layers.hpp"

#include <cmath>

#include "feasopf/errors.hpp"

namespace feasopf::nn {

using detail::require;

LayerSpec LayerSpec::dense(int in, int out) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.in = in;
  s.out = out;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::kRelu;
  return s;
}

LayerSpec LayerSpec::tanh() {
  LayerSpec s;
  s.kind = LayerKind::kTanh;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::kDropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::conv1d(int channels_in, int channels_out, int kernel, int length) {
  LayerSpec s;
  s.kind = LayerKind::kConv1d;
  s.channels_in = channels_in;
  s.channels_out = channels_out;
  s.kernel = kernel;
  s.length = length;
  s.in = channels_in * length;
  s.out = channels_out * length;
  return s;
}

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kDropout: return "dropout";
    case LayerKind::kConv1d: return "conv1d";
  }
  return "unknown";
}

nlohmann::json to_json(const LayerSpec& s) {
  nlohmann::json j{{"kind", to_string(s.kind)}};
  switch (s.kind) {
    case LayerKind::kDense:
      j["in"] = s.in;
      j["out"] = s.out;
      break;
    case LayerKind::kDropout: j["rate"] = s.rate; break;
    case LayerKind::kConv1d:
      j["channels_in"] = s.channels_in;
      j["channels_out"] = s.channels_out;
      j["kernel"] = s.kernel;
      j["length"] = s.length;
      break;
    default: break;
  }
  return j;
}

LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") return LayerSpec::dense(j.at("in").get<int>(), j.at("out").get<int>());
  if (kind == "relu") return LayerSpec::relu();
  if (kind == "tanh") return LayerSpec::tanh();
  if (kind == "dropout") return LayerSpec::dropout(j.at("rate").get<double>());
  if (kind == "conv1d")
    return LayerSpec::conv1d(j.at("channels_in").get<int>(), j.at("channels_out").get<int>(),
                             j.at("kernel").get<int>(), j.at("length").get<int>());
  throw ValidationError("unknown layer kind \"" + kind + "\"");
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, int channels_in, int channels_out,
              int kernel, int length) {
  require(x.cols() == channels_in * length, "conv1d: input width does not match channels * length");
  require(weight.rows() == channels_out && weight.cols() == channels_in * kernel, "conv1d: weight shape");
  require(bias.rows() == 1 && bias.cols() == channels_out, "conv1d: bias shape");
  const int half = kernel / 2;
  const Matrix xv = x.value();
  const Matrix wv = weight.value();
  const Eigen::Index batch = x.rows();
  Matrix y(batch, channels_out * length);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int o = 0; o < channels_out; ++o) {
      for (int t = 0; t < length; ++t) {
        double acc = bias.value()(0, o);
        for (int c = 0; c < channels_in; ++c)
          for (int k = 0; k < kernel; ++k) {
            const int src = t + k - half;
            if (src >= 0 && src < length) acc += wv(o, c * kernel + k) * xv(b, c * length + src);
          }
        y(b, o * length + t) = acc;
      }
    }
  }
  return Tensor::make(std::move(y), {x, weight, bias},
                      [=](const Matrix& g, std::vector<Matrix>& out) {
                        Matrix gx = Matrix::Zero(batch, channels_in * length);
                        Matrix gw = Matrix::Zero(channels_out, channels_in * kernel);
                        Matrix gb = Matrix::Zero(1, channels_out);
                        for (Eigen::Index b = 0; b < batch; ++b)
                          for (int o = 0; o < channels_out; ++o)
                            for (int t = 0; t < length; ++t) {
                              const double go = g(b, o * length + t);
                              gb(0, o) += go;
                              for (int c = 0; c < channels_in; ++c)
                                for (int k = 0; k < kernel; ++k) {
                                  const int src = t + k - half;
                                  if (src < 0 || src >= length) continue;
                                  gw(o, c * kernel + k) += go * xv(b, c * length + src);
                                  gx(b, c * length + src) += go * wv(o, c * kernel + k);
                                }
                            }
                        out[0] = std::move(gx);
                        out[1] = std::move(gw);
                        out[2] = std::move(gb);
                      });
}

Sequential::Sequential(std::vector<LayerSpec> specs, std::uint64_t seed) : specs_(std::move(specs)) {
  require(!specs_.empty(), "model needs at least one layer");
  std::mt19937_64 rng(seed);
  int width = -1;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& s = specs_[i];
    param_index_.push_back(-1);
    switch (s.kind) {
      case LayerKind::kDense:
      case LayerKind::kConv1d: {
        if (s.kind == LayerKind::kConv1d) {
          require(s.channels_in >= 1 && s.channels_out >= 1 && s.length >= 1, "conv1d: sizes must be positive");
          require(s.kernel >= 1 && s.kernel % 2 == 1, "conv1d: kernel must be odd");
        }
        require(s.in >= 1 && s.out >= 1, "layer widths must be >= 1");
        if (width < 0) input_width_ = s.in;
        else require(width == s.in, "layer " + std::to_string(i) + " expects width " + std::to_string(s.in) +
                                        " but receives " + std::to_string(width));
        width = s.out;
        // He scaling ahead of ReLU, Xavier otherwise.
        bool before_relu = false;
        for (std::size_t k = i + 1; k < specs_.size(); ++k) {
          if (specs_[k].kind == LayerKind::kDropout) continue;
          before_relu = specs_[k].kind == LayerKind::kRelu;
          break;
        }
        const int fan_in = s.kind == LayerKind::kDense ? s.in : s.channels_in * s.kernel;
        const int fan_out = s.kind == LayerKind::kDense ? s.out : s.channels_out * s.kernel;
        const double limit = before_relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        Matrix w = s.kind == LayerKind::kDense ? Matrix(s.in, s.out) : Matrix(s.channels_out, s.channels_in * s.kernel);
        for (Eigen::Index c = 0; c < w.cols(); ++c)
          for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
        const int bias_width = s.kind == LayerKind::kDense ? s.out : s.channels_out;
        param_index_.back() = static_cast<int>(params_.size());
        params_.push_back(Tensor::parameter(std::move(w)));
        params_.push_back(Tensor::parameter(Matrix::Zero(1, bias_width)));
        break;
      }
      case LayerKind::kDropout:
        require(s.rate >= 0.0 && s.rate < 1.0, "dropout rate must lie in [0, 1)");
        break;
      default: break;
    }
  }
  require(width > 0, "model needs at least one dense or conv1d layer");
  output_width_ = width;
}

Tensor Sequential::forward(const Tensor& x, Mode mode, std::mt19937_64* rng) const {
  require(x.cols() == input_width_, "model input has width " + std::to_string(x.cols()) + ", expected " +
                                        std::to_string(input_width_));
  Tensor h = x;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& s = specs_[i];
    switch (s.kind) {
      case LayerKind::kDense: {
        const int p = param_index_[i];
        h = add_row(matmul(h, params_[p]), params_[p + 1]);
        break;
      }
      case LayerKind::kConv1d: {
        const int p = param_index_[i];
        h = conv1d(h, params_[p], params_[p + 1], s.channels_in, s.channels_out, s.kernel, s.length);
        break;
      }
      case LayerKind::kRelu: h = relu(h); break;
      case LayerKind::kTanh: h = tanh(h); break;
      case LayerKind::kDropout:
        if (mode == Mode::kTrain && s.rate > 0.0) {
          require(rng != nullptr, "dropout in train mode needs a random generator");
          h = dropout(h, s.rate, *rng);
        }
        break;
    }
  }
  return h;
}

std::size_t Sequential::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += static_cast<std::size_t>(p.value().size());
  return n;
}

std::vector<double> Sequential::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const Tensor& p : params_) flat.insert(flat.end(), p.value().data(), p.value().data() + p.value().size());
  return flat;
}

void Sequential::set_flat_parameters(const std::vector<double>& flat) {
  require(flat.size() == parameter_count(), "parameter blob has " + std::to_string(flat.size()) +
                                                " values, model needs " + std::to_string(parameter_count()));
  std::size_t at = 0;
  for (Tensor& p : params_) {
    Matrix& v = p.mutable_value();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at),
              flat.begin() + static_cast<std::ptrdiff_t>(at + v.size()), v.data());
    at += static_cast<std::size_t>(v.size());
  }
}

void Sequential::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace feasopf::nn
