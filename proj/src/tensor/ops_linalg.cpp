#include "dstsa/tensor/ops.hpp"
#include "dstsa/tensor/parallel.hpp"
#include "kernels.hpp"

namespace dstsa::ops {

namespace {

// Matrix-slot offsets of each broadcast batch entry for both operands.
struct BatchPlan {
  std::vector<std::size_t> lhs;
  std::vector<std::size_t> rhs;
  bool lhs_unique = true;  // every batch entry owns its lhs slot
  bool rhs_unique = true;
};

BatchPlan plan_batches(const Shape& lhs_batch, const Shape& rhs_batch, const Shape& out_batch) {
  BatchPlan plan;
  const std::size_t count = numel(out_batch);
  plan.lhs.reserve(count);
  plan.rhs.reserve(count);
  const Index5 dims = pad_to_max_rank(out_batch);
  const Index5 sl = broadcast_strides(lhs_batch, out_batch);
  const Index5 sr = broadcast_strides(rhs_batch, out_batch);
  detail::for_each5(dims, sl, sr, [&](std::size_t, std::size_t a, std::size_t b) {
    plan.lhs.push_back(a);
    plan.rhs.push_back(b);
  });
  plan.lhs_unique = numel(lhs_batch) == count;
  plan.rhs_unique = numel(rhs_batch) == count;
  return plan;
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& lhs, const Var<T>& rhs) {
  Shape a = lhs.shape();
  Shape b = rhs.shape();
  auto mismatch = [&](const std::string& why) {
    return DimensionError("matmul " + why + ": lhs " + to_string(lhs.shape()) + ", rhs " +
                          to_string(rhs.shape()));
  };
  if (a.empty() || b.empty()) throw mismatch("needs rank >= 1 operands");
  const bool squeeze_row = a.size() == 1;
  const bool squeeze_col = b.size() == 1;
  if (squeeze_row) a.insert(a.begin(), 1);
  if (squeeze_col) b.push_back(1);
  const std::size_t m = a[a.size() - 2];
  const std::size_t k = a[a.size() - 1];
  const std::size_t n = b[b.size() - 1];
  if (b[b.size() - 2] != k) throw mismatch("inner extents differ");
  const Shape a_batch(a.begin(), a.end() - 2);
  const Shape b_batch(b.begin(), b.end() - 2);
  Shape out_batch;
  try {
    out_batch = broadcast_shapes(a_batch, b_batch);
  } catch (const DimensionError&) {
    throw mismatch("batch extents do not broadcast");
  }
  Shape out_shape = out_batch;
  if (!squeeze_row) out_shape.push_back(m);
  if (!squeeze_col) out_shape.push_back(n);
  if (out_batch.size() + 2 > kMaxRank) throw mismatch("result exceeds rank 5");

  auto plan = std::make_shared<BatchPlan>(plan_batches(a_batch, b_batch, out_batch));
  const std::size_t batches = plan->lhs.size();
  Tensor<T> out(out_shape);
  const T* pa = lhs.value().data();
  const T* pb = rhs.value().data();
  T* po = out.data();
  parallel_for(batches, [&](std::size_t i) {
    detail::ConstMatMap<T> A(pa + plan->lhs[i] * m * k, m, k);
    detail::ConstMatMap<T> B(pb + plan->rhs[i] * k * n, k, n);
    detail::MatMap<T> O(po + i * m * n, m, n);
    O.noalias() = A * B;
  });

  return Var<T>::make(
      std::move(out), {lhs, rhs},
      [plan, m, k, n](Node<T>& self) {
        const auto& na = self.parents[0];
        const auto& nb = self.parents[1];
        const T* g = self.grad.data();
        const std::size_t batches = plan->lhs.size();
        if (Tensor<T>* ga = grad_target(na)) {
          const T* vb = nb->value.data();
          T* dst = ga->data();
          auto body = [&](std::size_t i) {
            detail::ConstMatMap<T> G(g + i * m * n, m, n);
            detail::ConstMatMap<T> B(vb + plan->rhs[i] * k * n, k, n);
            detail::MatMap<T> D(dst + plan->lhs[i] * m * k, m, k);
            D.noalias() += G * B.transpose();
          };
          if (plan->lhs_unique) {
            parallel_for(batches, body);
          } else {
            for (std::size_t i = 0; i < batches; ++i) body(i);
          }
        }
        if (Tensor<T>* gb = grad_target(nb)) {
          const T* va = na->value.data();
          T* dst = gb->data();
          auto body = [&](std::size_t i) {
            detail::ConstMatMap<T> G(g + i * m * n, m, n);
            detail::ConstMatMap<T> A(va + plan->lhs[i] * m * k, m, k);
            detail::MatMap<T> D(dst + plan->rhs[i] * k * n, k, n);
            D.noalias() += A.transpose() * G;
          };
          if (plan->rhs_unique) {
            parallel_for(batches, body);
          } else {
            for (std::size_t i = 0; i < batches; ++i) body(i);
          }
        }
      },
      "matmul");
}

template <typename T>
Var<T> channel_map(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() < 2 || ws.size() != 2 || ws[1] != xs[1]) {
    throw DimensionError("channel_map: input " + to_string(xs) + " incompatible with weight " +
                         to_string(ws));
  }
  const std::size_t cout = ws[0];
  const std::size_t cin = ws[1];
  if (bias && bias->shape() != Shape{cout}) {
    throw DimensionError("channel_map: bias " + to_string(bias->shape()) + " for " +
                         std::to_string(cout) + " output channels");
  }
  const std::size_t batch = xs[0];
  std::size_t cols = 1;
  for (std::size_t i = 2; i < xs.size(); ++i) cols *= xs[i];
  Shape out_shape = xs;
  out_shape[1] = cout;
  Tensor<T> out(out_shape);
  const T* px = x.value().data();
  const T* pw = weight.value().data();
  const T* pbias = bias ? bias->value().data() : nullptr;
  T* po = out.data();
  parallel_for(batch, [&](std::size_t i) {
    detail::ConstMatMap<T> W(pw, cout, cin);
    detail::ConstMatMap<T> X(px + i * cin * cols, cin, cols);
    detail::MatMap<T> Y(po + i * cout * cols, cout, cols);
    Y.noalias() = W * X;
    if (pbias) {
      for (std::size_t c = 0; c < cout; ++c) Y.row(c).array() += pbias[c];
    }
  });

  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return Var<T>::make(
      std::move(out), std::move(inputs),
      [batch, cin, cout, cols](Node<T>& self) {
        const auto& nx = self.parents[0];
        const auto& nw = self.parents[1];
        const T* g = self.grad.data();
        if (Tensor<T>* gx = grad_target(nx)) {
          const T* w = nw->value.data();
          T* dst = gx->data();
          parallel_for(batch, [&](std::size_t i) {
            detail::ConstMatMap<T> W(w, cout, cin);
            detail::ConstMatMap<T> G(g + i * cout * cols, cout, cols);
            detail::MatMap<T> D(dst + i * cin * cols, cin, cols);
            D.noalias() += W.transpose() * G;
          });
        }
        if (Tensor<T>* gw = grad_target(nw)) {
          const T* xv = nx->value.data();
          detail::MatMap<T> D(gw->data(), cout, cin);
          for (std::size_t i = 0; i < batch; ++i) {
            detail::ConstMatMap<T> G(g + i * cout * cols, cout, cols);
            detail::ConstMatMap<T> X(xv + i * cin * cols, cin, cols);
            D.noalias() += G * X.transpose();
          }
        }
        if (self.parents.size() > 2) {
          if (Tensor<T>* gb = grad_target(self.parents[2])) {
            T* dst = gb->data();
            for (std::size_t i = 0; i < batch; ++i) {
              detail::ConstMatMap<T> G(g + i * cout * cols, cout, cols);
              for (std::size_t c = 0; c < cout; ++c) dst[c] += G.row(c).sum();
            }
          }
        }
      },
      "channel_map");
}

#define DSTSA_INSTANTIATE(T)                                  \
  template Var<T> matmul(const Var<T>&, const Var<T>&);       \
  template Var<T> channel_map(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::ops
