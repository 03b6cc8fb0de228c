#include "dstsa/tensor/var.hpp"

#include <atomic>
#include <unordered_set>

namespace dstsa {

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<fault_injection::Fault> g_fault{fault_injection::Fault::None};
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() noexcept { return g_grad_enabled; }

namespace fault_injection {
void set(Fault fault) noexcept { g_fault.store(fault); }
Fault active() noexcept { return g_fault.load(std::memory_order_relaxed); }
}  // namespace fault_injection

template <typename T>
Var<T>::Var() : node_(std::make_shared<Node<T>>()) {}

template <typename T>
Var<T>::Var(Tensor<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

template <typename T>
Var<T> Var<T>::make(Tensor<T> value, std::vector<Var> inputs,
                    typename Node<T>::BackwardFn fn, const char* op) {
  Var out(std::move(value));
  out.node_->op = op;
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(inputs.size());
  for (auto& in : inputs) out.node_->parents.push_back(in.node_);
  out.node_->backward_fn = std::move(fn);
  return out;
}

template <typename T>
void Var<T>::backward() {
  if (node_->value.numel() != 1) {
    throw DimensionError("backward() without seed needs a single-element output, got " +
                         to_string(node_->value.shape()));
  }
  backward(Tensor<T>(node_->value.shape(), T{1}));
}

template <typename T>
void Var<T>::backward(const Tensor<T>& seed) {
  if (seed.shape() != node_->value.shape()) {
    throw DimensionError("backward seed " + to_string(seed.shape()) +
                         " does not match output " + to_string(node_->value.shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS: parents precede children in `order`.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior gradients restart from zero; leaves keep accumulating.
  for (Node<T>* n : order) {
    if (!n->is_leaf()) n->grad = Tensor<T>();
  }
  Tensor<T>& root = node_->grad_buffer();
  for (std::size_t i = 0; i < seed.numel(); ++i) root[i] += seed[i];

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->is_leaf() || n->grad.empty()) continue;
    n->backward_fn(*n);
    n->grad = Tensor<T>();  // interior gradients are not retained
  }
}

template class Var<float>;
template class Var<double>;

}  // namespace dstsa
