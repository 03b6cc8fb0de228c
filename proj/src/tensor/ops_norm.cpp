#include <algorithm>
#include <cmath>
#include <limits>

#include "dstsa/tensor/ops.hpp"

namespace dstsa::ops {

template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormState<T>& state, bool training, const BatchNormOptions& options) {
  const Shape& xs = x.shape();
  if (xs.size() < 2) {
    throw DimensionError("batch_norm expects (N, C, ...), got " + to_string(xs));
  }
  const std::size_t batch = xs[0];
  const std::size_t channels = xs[1];
  std::size_t inner = 1;
  for (std::size_t i = 2; i < xs.size(); ++i) inner *= xs[i];
  if (gamma.shape() != Shape{channels} || beta.shape() != Shape{channels}) {
    throw DimensionError("batch_norm: scale/shift must have shape (" +
                         std::to_string(channels) + ")");
  }
  if (state.running_mean.numel() != channels) state.running_mean = Tensor<T>(Shape{channels});
  if (state.running_var.numel() != channels) state.running_var = Tensor<T>(Shape{channels}, T{1});
  const std::size_t count = batch * inner;
  const T eps = static_cast<T>(options.eps);

  auto center = std::make_shared<std::vector<T>>(channels);
  auto inv_std = std::make_shared<std::vector<T>>(channels);
  const T* px = x.value().data();
  auto at = [&](std::size_t n, std::size_t c) { return (n * channels + c) * inner; };

  if (training) {
    if (count == 0) throw DimensionError("batch_norm on an empty batch");
    const T momentum = static_cast<T>(options.momentum);
    for (std::size_t c = 0; c < channels; ++c) {
      // Two-pass in double keeps the 32-bit path's statistics accurate.
      double total = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = px + at(n, c);
        for (std::size_t i = 0; i < inner; ++i) total += p[i];
      }
      const double mu = total / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* p = px + at(n, c);
        for (std::size_t i = 0; i < inner; ++i) {
          const double d = p[i] - mu;
          sq += d * d;
        }
      }
      const double var = sq / static_cast<double>(count);
      (*center)[c] = static_cast<T>(mu);
      (*inv_std)[c] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = count > 1 ? var * count / (count - 1) : var;
      state.running_mean[c] = momentum * state.running_mean[c] + (T{1} - momentum) * static_cast<T>(mu);
      state.running_var[c] =
          momentum * state.running_var[c] + (T{1} - momentum) * static_cast<T>(unbiased);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      (*center)[c] = state.running_mean[c];
      (*inv_std)[c] = T{1} / std::sqrt(state.running_var[c] + eps);
    }
  }

  Tensor<T> out(xs);
  T* py = out.data();
  const T* g = gamma.value().data();
  const T* b = beta.value().data();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* p = px + at(n, c);
      T* q = py + at(n, c);
      const T mu = (*center)[c];
      const T is = (*inv_std)[c];
      for (std::size_t i = 0; i < inner; ++i) q[i] = g[c] * (p[i] - mu) * is + b[c];
    }
  }

  return Var<T>::make(
      std::move(out), {x, gamma, beta},
      [=](Node<T>& self) {
        const T* xv = self.parents[0]->value.data();
        const T* gv = self.parents[1]->value.data();
        const T* dy = self.grad.data();
        auto pos = [&](std::size_t n, std::size_t c) { return (n * channels + c) * inner; };
        std::vector<T> sum_dy(channels, T{0});
        std::vector<T> sum_dy_xhat(channels, T{0});
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < channels; ++c) {
            const T* p = xv + pos(n, c);
            const T* d = dy + pos(n, c);
            const T mu = (*center)[c];
            const T is = (*inv_std)[c];
            T s1{0};
            T s2{0};
            for (std::size_t i = 0; i < inner; ++i) {
              s1 += d[i];
              s2 += d[i] * (p[i] - mu) * is;
            }
            sum_dy[c] += s1;
            sum_dy_xhat[c] += s2;
          }
        }
        if (Tensor<T>* gg = grad_target(self.parents[1])) {
          for (std::size_t c = 0; c < channels; ++c) (*gg)[c] += sum_dy_xhat[c];
        }
        if (Tensor<T>* gb = grad_target(self.parents[2])) {
          for (std::size_t c = 0; c < channels; ++c) (*gb)[c] += sum_dy[c];
        }
        Tensor<T>* gx = grad_target(self.parents[0]);
        if (!gx) return;
        T* dx = gx->data();
        const T m = static_cast<T>(count);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t c = 0; c < channels; ++c) {
            const T* p = xv + pos(n, c);
            const T* d = dy + pos(n, c);
            T* q = dx + pos(n, c);
            const T mu = (*center)[c];
            const T is = (*inv_std)[c];
            const T k = gv[c] * is;
            if (training) {
              for (std::size_t i = 0; i < inner; ++i) {
                const T xhat = (p[i] - mu) * is;
                q[i] += k * (d[i] - sum_dy[c] / m - xhat * sum_dy_xhat[c] / m);
              }
            } else {
              for (std::size_t i = 0; i < inner; ++i) q[i] += k * d[i];
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  const Shape& ls = logits.shape();
  if (ls.size() != 2) {
    throw DimensionError("cross_entropy expects logits (N, K), got " + to_string(ls));
  }
  const std::size_t batch = ls[0];
  const std::size_t classes = ls[1];
  if (labels.size() != batch) {
    throw InputError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  if (batch == 0) throw InputError("cross_entropy: empty batch");
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw InputError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
  }
  auto probs = std::make_shared<Tensor<T>>(ls);
  auto targets = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  const T* z = logits.value().data();
  double loss = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const T* row = z + n * classes;
    const T peak = *std::max_element(row, row + classes);
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      const double e = std::exp(static_cast<double>(row[k] - peak));
      (*probs)[n * classes + k] = static_cast<T>(e);
      total += e;
    }
    for (std::size_t k = 0; k < classes; ++k) {
      (*probs)[n * classes + k] = static_cast<T>((*probs)[n * classes + k] / total);
    }
    loss += std::log(total) + static_cast<double>(peak) -
            static_cast<double>(row[(*targets)[n]]);
  }
  loss /= static_cast<double>(batch);
  return Var<T>::make(
      Tensor<T>::scalar(static_cast<T>(loss)), {logits},
      [probs, targets, batch, classes](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T scale = self.grad[0] / static_cast<T>(batch);
        for (std::size_t n = 0; n < batch; ++n) {
          for (std::size_t k = 0; k < classes; ++k) {
            const T onehot = static_cast<int>(k) == (*targets)[n] ? T{1} : T{0};
            (*g)[n * classes + k] += scale * ((*probs)[n * classes + k] - onehot);
          }
        }
      },
      "cross_entropy");
}

#define DSTSA_INSTANTIATE(T)                                                               \
  template Var<T> batch_norm(const Var<T>&, const Var<T>&, const Var<T>&,                  \
                             BatchNormState<T>&, bool, const BatchNormOptions&);           \
  template Var<T> cross_entropy(const Var<T>&, std::span<const int>);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::ops
