#pragma once

// Dense row-major double tensors with a dynamic reverse-mode tape.
//
// A Tensor is a shared handle: copies alias the same storage and gradient,
// so parameters can be held by a store and by the ops that read them.
// Every op output keeps its inputs alive until it is destroyed; dropping the
// loss releases the tape. Tapes are per-thread (see NoGradGuard).

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "scenegnn/error.hpp"
#include "scenegnn/matrix.hpp"

namespace scenegnn::nn {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(Shape s) { return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")"; }

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

/// Disables tape recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode()) { detail::grad_mode() = false; }
  ~NoGradGuard() { detail::grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values) : node_(std::make_shared<detail::Node>()) {
    if (values.size() != shape.size()) {
      throw Error(ErrorKind::ShapeMismatch,
                  "tensor " + to_string(shape) + " given " + std::to_string(values.size()) + " values");
    }
    node_->shape = shape;
    node_->value = std::move(values);
  }

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0));
  }
  static Tensor filled(std::size_t rows, std::size_t cols, double v) {
    return Tensor({rows, cols}, std::vector<double>(rows * cols, v));
  }
  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor row(std::vector<double> values) {
    const auto n = values.size();
    return Tensor({1, n}, std::move(values));
  }
  static Tensor from(const Matrix& m) { return Tensor({m.rows, m.cols}, m.data); }
  /// Leaf tensor whose gradient is tracked.
  static Tensor parameter(Shape shape, std::vector<double> values) {
    Tensor t(shape, std::move(values));
    t.node_->requires_grad = true;
    return t;
  }

  bool defined() const { return static_cast<bool>(node_); }
  Shape shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> values() const { return node_->value; }
  /// Direct write access, for optimizers and finite differencing.
  std::span<double> mutable_values() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const {
    if (size() != 1) throw Error(ErrorKind::NotScalar, "item() on tensor " + to_string(shape()));
    return node_->value[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool is_leaf() const { return !node_->backward_fn; }

  /// Gradient accumulator; zeros if nothing has been accumulated yet.
  std::span<const double> grad() const { return node_->ensure_grad(); }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  /// Deep copy with no tape history; keeps the requires_grad flag.
  Tensor clone() const {
    Tensor t(shape(), node_->value);
    t.node_->requires_grad = node_->requires_grad;
    return t;
  }

  Matrix to_matrix() const {
    Matrix m(rows(), cols());
    m.data = node_->value;
    return m;
  }

  /// Accumulates d(this)/d(leaf) into every tracked leaf reachable from
  /// this scalar. Calling twice without zeroing doubles leaf gradients.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {

using BackwardFn = std::function<void(Node&)>;

/// Creates an op output; records the tape entry only when grad mode is on
/// and some input is tracked.
inline Tensor make_result(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
                          BackwardFn fn) {
  Tensor out(shape, std::move(values));
  if (!grad_mode()) return out;
  bool tracked = false;
  for (const auto& t : inputs) tracked = tracked || t.requires_grad();
  if (!tracked) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const auto& t : inputs) node.parents.push_back(t.node());
  node.backward_fn = std::move(fn);
  return out;
}

inline Tensor make_result(Shape shape, std::vector<double> values, const std::vector<Tensor>& inputs, BackwardFn fn) {
  Tensor out(shape, std::move(values));
  if (!grad_mode()) return out;
  bool tracked = false;
  for (const auto& t : inputs) tracked = tracked || t.requires_grad();
  if (!tracked) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const auto& t : inputs) node.parents.push_back(t.node());
  node.backward_fn = std::move(fn);
  return out;
}

}  // namespace detail

inline void Tensor::backward() const {
  if (!defined() || size() != 1) {
    throw Error(ErrorKind::NotScalar, "backward() requires a scalar, got " + (defined() ? to_string(shape()) : "undefined"));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients are per-call scratch; leaves accumulate.
  for (auto* node : order) {
    if (node->backward_fn) {
      node->grad.assign(node->value.size(), 0.0);
    } else {
      node->ensure_grad();
    }
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

}  // namespace scenegnn::nn
