#include "feasopf/tensor.hpp"

#include <initializer_list>
#include <string>
#include <unordered_set>

#include "feasopf/errors.hpp"

namespace feasopf::nn {

using detail::require;

namespace {

thread_local int no_grad_depth = 0;

bool records(std::initializer_list<const Tensor*> parents) {
  if (!grad_enabled()) return false;
  for (const Tensor* p : parents)
    if (p->requires_grad()) return true;
  return false;
}

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), std::string(op) + ": shape mismatch");
}

}  // namespace

NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }
bool grad_enabled() { return no_grad_depth == 0; }

Tensor Tensor::constant(Matrix value) {
  Tensor t;
  t.node_ = std::make_shared<Node>();
  t.node_->value = std::move(value);
  return t;
}

Tensor Tensor::parameter(Matrix value) {
  Tensor t = constant(std::move(value));
  t.node_->requires_grad = true;
  return t;
}

Tensor Tensor::make(Matrix value, std::vector<Tensor> parents, BackwardFn backward) {
  Tensor t = constant(std::move(value));
  if (!grad_enabled()) return t;
  bool any = false;
  for (const Tensor& p : parents) any = any || p.requires_grad();
  if (!any) return t;
  t.node_->requires_grad = true;
  t.node_->leaf = false;
  t.node_->backward = std::move(backward);
  for (Tensor& p : parents) t.node_->parents.push_back(p.node_);
  return t;
}

void Tensor::zero_grad() { node_->grad = Matrix::Zero(rows(), cols()); }

double Tensor::item() const {
  require(rows() == 1 && cols() == 1, "item() needs a 1x1 tensor");
  return value()(0, 0);
}

void Tensor::backward() const {
  require(rows() == 1 && cols() == 1, "backward() needs a scalar loss");
  require(requires_grad(), "backward() on a tensor without a recorded graph");

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  // iterative post-order DFS
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order)
    if (!n->leaf) n->grad.resize(0, 0);
  node_->grad = Matrix::Ones(1, 1);

  std::vector<Matrix> parent_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->leaf || n->grad.size() == 0) continue;
    parent_grads.assign(n->parents.size(), Matrix());
    n->backward(n->grad, parent_grads);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      Node* p = n->parents[i].get();
      if (!p->requires_grad || parent_grads[i].size() == 0) continue;
      if (p->grad.size() == 0) p->grad = std::move(parent_grads[i]);
      else p->grad += parent_grads[i];
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  if (!records({&a, &b})) return Tensor::constant(a.value() * b.value());
  Matrix av = a.value(), bv = b.value();
  return Tensor::make(a.value() * b.value(), {a, b},
                      [av, bv](const Matrix& g, std::vector<Matrix>& out) {
                        out[0] = g * bv.transpose();
                        out[1] = av.transpose() * g;
                      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  return Tensor::make(a.value() + b.value(), {a, b}, [](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g;
    out[1] = g;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  return Tensor::make(a.value() - b.value(), {a, b}, [](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g;
    out[1] = -g;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  if (!records({&a, &b})) return Tensor::constant(a.value().cwiseProduct(b.value()));
  Matrix av = a.value(), bv = b.value();
  return Tensor::make(av.cwiseProduct(bv), {a, b}, [av, bv](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g.cwiseProduct(bv);
    out[1] = g.cwiseProduct(av);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row has wrong shape");
  Matrix v = a.value();
  v.rowwise() += row.value().row(0);
  return Tensor::make(std::move(v), {a, row}, [](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g;
    out[1] = g.colwise().sum();
  });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "mul_row: row has wrong shape");
  if (!records({&a, &row})) return Tensor::constant(a.value().array().rowwise() * row.value().row(0).array());
  Matrix av = a.value();
  Eigen::RowVectorXd rv = row.value().row(0);
  Matrix v = av.array().rowwise() * rv.array();
  return Tensor::make(std::move(v), {a, row}, [av, rv](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g.array().rowwise() * rv.array();
    out[1] = g.cwiseProduct(av).colwise().sum();
  });
}

Tensor scale(const Tensor& a, double s) {
  return Tensor::make(a.value() * s, {a}, [s](const Matrix& g, std::vector<Matrix>& out) { out[0] = g * s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return Tensor::make(a.value().array() + s, {a}, [](const Matrix& g, std::vector<Matrix>& out) { out[0] = g; });
}

Tensor relu(const Tensor& a) {
  if (!records({&a})) return Tensor::constant(a.value().cwiseMax(0.0));
  Matrix mask = (a.value().array() > 0.0).cast<double>();
  return Tensor::make(a.value().cwiseMax(0.0), {a},
                      [mask](const Matrix& g, std::vector<Matrix>& out) { out[0] = g.cwiseProduct(mask); });
}

Tensor tanh(const Tensor& a) {
  if (!records({&a})) return Tensor::constant(a.value().array().tanh());
  Matrix y = a.value().array().tanh();
  return Tensor::make(y, {a}, [y](const Matrix& g, std::vector<Matrix>& out) {
    out[0] = g.array() * (1.0 - y.array().square());
  });
}

Tensor sum(const Tensor& a) {
  const Eigen::Index r = a.rows(), c = a.cols();
  return Tensor::make(Matrix::Constant(1, 1, a.value().sum()), {a},
                      [r, c](const Matrix& g, std::vector<Matrix>& out) { out[0] = Matrix::Constant(r, c, g(0, 0)); });
}

Tensor mean(const Tensor& a) {
  require(a.value().size() > 0, "mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: nothing to concatenate");
  const Eigen::Index r = parts.front().rows();
  Eigen::Index total = 0;
  std::vector<Eigen::Index> widths;
  for (const Tensor& p : parts) {
    require(p.rows() == r, "concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Matrix v(r, total);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return Tensor::make(std::move(v), parts, [widths](const Matrix& g, std::vector<Matrix>& out) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      out[i] = g.middleCols(at, widths[i]);
      at += widths[i];
    }
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: range out of bounds");
  const Eigen::Index r = a.rows(), c = a.cols();
  return Tensor::make(a.value().middleCols(start, count), {a},
                      [r, c, start, count](const Matrix& g, std::vector<Matrix>& out) {
                        out[0] = Matrix::Zero(r, c);
                        out[0].middleCols(start, count) = g;
                      });
}

Tensor repeat_rows(const Tensor& a, Eigen::Index times) {
  require(times >= 1, "repeat_rows: times must be positive");
  const Eigen::Index r = a.rows();
  Matrix v(r * times, a.cols());
  for (Eigen::Index i = 0; i < r; ++i) v.middleRows(i * times, times).rowwise() = a.value().row(i);
  return Tensor::make(std::move(v), {a}, [r, times](const Matrix& g, std::vector<Matrix>& out) {
    out[0].resize(r, g.cols());
    for (Eigen::Index i = 0; i < r; ++i) out[0].row(i) = g.middleRows(i * times, times).colwise().sum();
  });
}

Tensor group_mean_rows(const Tensor& a, Eigen::Index group) {
  require(group >= 1 && a.rows() % group == 0, "group_mean_rows: rows not divisible by group");
  const Eigen::Index r = a.rows() / group;
  Matrix v(r, a.cols());
  for (Eigen::Index i = 0; i < r; ++i) v.row(i) = a.value().middleRows(i * group, group).colwise().mean();
  return Tensor::make(std::move(v), {a}, [r, group](const Matrix& g, std::vector<Matrix>& out) {
    out[0].resize(r * group, g.cols());
    for (Eigen::Index i = 0; i < r; ++i)
      out[0].middleRows(i * group, group).rowwise() = g.row(i) / static_cast<double>(group);
  });
}

Tensor dropout(const Tensor& a, double rate, std::mt19937_64& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout rate must lie in [0, 1)");
  if (rate == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < mask.cols(); ++j)
    for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng) ? s : 0.0;
  return Tensor::make(a.value().cwiseProduct(mask), {a},
                      [mask](const Matrix& g, std::vector<Matrix>& out) { out[0] = g.cwiseProduct(mask); });
}

}  // namespace feasopf::nn
