#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace feasopf::nn {

using Matrix = Eigen::MatrixXd;

struct Node;

/// Receives the gradient flowing into a node and writes the gradient of each
/// parent into the matching slot (slots of parents that do not require
/// gradients are left empty and ignored).
using BackwardFn = std::function<void(const Matrix& grad_out, std::vector<Matrix>& parent_grads)>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until a backward pass reaches the node
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
};

/// Handle to a 2-D array (rows = batch, cols = features) living in a
/// reverse-mode graph. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() > 0; }
  void zero_grad();

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  std::vector<Eigen::Index> shape() const { return {rows(), cols()}; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }
  double item() const;

  /// Reverse sweep from a 1x1 tensor. Parameter gradients accumulate across
  /// calls until zero_grad.
  void backward() const;

  const std::shared_ptr<Node>& node() const { return node_; }

  /// Generic graph node; used by layers with hand-written adjoints.
  static Tensor make(Matrix value, std::vector<Tensor> parents, BackwardFn backward);

 private:
  std::shared_ptr<Node> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor add_row(const Tensor& a, const Tensor& row);  // row broadcast over a's rows
Tensor mul_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sum(const Tensor& a);  // 1x1
Tensor mean(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count);
/// Each row repeated `times` times consecutively.
Tensor repeat_rows(const Tensor& a, Eigen::Index times);
/// Average of consecutive groups of `group` rows.
Tensor group_mean_rows(const Tensor& a, Eigen::Index group);
/// Inverted dropout: kept entries are scaled by 1 / (1 - rate).
Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng);

}  // namespace feasopf::nn
