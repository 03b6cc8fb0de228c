#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dstsa/tensor/tensor.hpp"

namespace dstsa {

// Reverse-mode differentiation. Every op applied to a Var that requires a
// gradient records a Node; the graph is rebuilt on each forward pass and
// backward() walks it once in reverse topological order. Leaf gradients
// accumulate additively across backward calls until zero_grad().

template <typename T>
struct Node {
  using BackwardFn = std::function<void(Node&)>;

  Tensor<T> value;
  Tensor<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward_fn;  // reads this->grad, accumulates into parents
  const char* op = "leaf";

  bool is_leaf() const noexcept { return !backward_fn; }

  // Gradient buffer, zero-initialized on first use.
  Tensor<T>& grad_buffer() {
    if (grad.empty() && value.numel() > 0) grad = Tensor<T>(value.shape());
    return grad;
  }
};

// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

template <typename T>
class Var {
 public:
  using NodePtr = std::shared_ptr<Node<T>>;

  Var();
  explicit Var(Tensor<T> value, bool requires_grad = false);

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t axis) const { return node_->value.dim(axis); }
  std::size_t rank() const { return node_->value.rank(); }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->is_leaf(); }
  bool has_grad() const { return !node_->grad.empty(); }
  // Empty tensor when no gradient has reached this variable.
  const Tensor<T>& grad() const { return node_->grad; }
  Tensor<T>& mutable_grad() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor<T>(); }

  // Seeds with 1; the variable must hold exactly one element.
  void backward();
  void backward(const Tensor<T>& seed);

  const NodePtr& node() const { return node_; }

  // Wraps a freshly computed value. When grad mode is on and any input
  // requires a gradient, the result records `inputs` as parents and `fn` as
  // its backward rule.
  static Var make(Tensor<T> value, std::vector<Var> inputs,
                  typename Node<T>::BackwardFn fn, const char* op);

 private:
  NodePtr node_;
};

// Adds `delta` into the parent's gradient when the parent tracks one.
template <typename T>
inline Tensor<T>* grad_target(const std::shared_ptr<Node<T>>& parent) {
  return parent->requires_grad ? &parent->grad_buffer() : nullptr;
}

// Test hook: deliberately corrupts selected backward rules so the
// verification suite can prove it detects broken gradients.
namespace fault_injection {
enum class Fault { None, TanhBackwardSignFlip };
void set(Fault fault) noexcept;
Fault active() noexcept;
}  // namespace fault_injection

extern template class Var<float>;
extern template class Var<double>;

}  // namespace dstsa
