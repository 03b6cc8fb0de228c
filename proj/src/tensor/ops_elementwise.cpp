#include <algorithm>
#include <cmath>
#include <type_traits>

#include "dstsa/tensor/ops.hpp"
#include "kernels.hpp"

namespace dstsa::ops {

namespace {

enum class Binary { Add, Sub, Mul };

template <typename T>
Tensor<T> binary_forward(const Tensor<T>& a, const Tensor<T>& b, Binary kind) {
  const Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  Tensor<T> out(out_shape);
  T* o = out.data();
  const T* pa = a.data();
  const T* pb = b.data();
  auto apply = [kind](T x, T y) {
    switch (kind) {
      case Binary::Add: return x + y;
      case Binary::Sub: return x - y;
      case Binary::Mul: return x * y;
    }
    return T{0};
  };
  if (a.shape() == b.shape()) {
    for (std::size_t i = 0; i < out.numel(); ++i) o[i] = apply(pa[i], pb[i]);
    return out;
  }
  const Index5 dims = pad_to_max_rank(out_shape);
  const Index5 sa = broadcast_strides(a.shape(), out_shape);
  const Index5 sb = broadcast_strides(b.shape(), out_shape);
  detail::for_each5(dims, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    o[i] = apply(pa[ia], pb[ib]);
  });
  return out;
}

template <typename T>
Var<T> binary(const Var<T>& a, const Var<T>& b, Binary kind, const char* name) {
  Tensor<T> out = binary_forward(a.value(), b.value(), kind);
  return Var<T>::make(
      std::move(out), {a, b},
      [kind](Node<T>& self) {
        const auto& pa = self.parents[0];
        const auto& pb = self.parents[1];
        const Tensor<T>& g = self.grad;
        if (kind == Binary::Mul) {
          const Shape& out_shape = g.shape();
          const Index5 dims = pad_to_max_rank(out_shape);
          const Index5 sa = broadcast_strides(pa->value.shape(), out_shape);
          const Index5 sb = broadcast_strides(pb->value.shape(), out_shape);
          const T* va = pa->value.data();
          const T* vb = pb->value.data();
          const T* pg = g.data();
          if (Tensor<T>* ga = grad_target(pa)) {
            T* t = ga->data();
            detail::for_each5(dims, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
              t[ia] += pg[i] * vb[ib];
            });
          }
          if (Tensor<T>* gb = grad_target(pb)) {
            T* t = gb->data();
            detail::for_each5(dims, sa, sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
              t[ib] += pg[i] * va[ia];
            });
          }
          return;
        }
        if (Tensor<T>* ga = grad_target(pa)) detail::accumulate_reduced(g, *ga);
        if (Tensor<T>* gb = grad_target(pb)) {
          if (kind == Binary::Add) {
            detail::accumulate_reduced(g, *gb);
          } else {
            Tensor<T> neg = g;
            for (auto& v : neg.values()) v = -v;
            detail::accumulate_reduced(neg, *gb);
          }
        }
      },
      name);
}

template <typename T>
T hardswish_value(T x) {
  return x * std::clamp(x + T{3}, T{0}, T{6}) / T{6};
}

template <typename T>
T hardswish_slope(T x) {
  if (x <= T{-3}) return T{0};
  if (x >= T{3}) return T{1};
  return (T{2} * x + T{3}) / T{6};
}

}  // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, Binary::Add, "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, Binary::Sub, "sub");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary(a, b, Binary::Mul, "mul");
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
  Tensor<T> out = x.value();
  for (auto& v : out.values()) v *= factor;
  return Var<T>::make(
      std::move(out), {x},
      [factor](Node<T>& self) {
        if (Tensor<T>* g = grad_target(self.parents[0])) {
          for (std::size_t i = 0; i < g->numel(); ++i) (*g)[i] += factor * self.grad[i];
        }
      },
      "scale");
}

template <typename T>
Var<T> unary(const Var<T>& x, Unary kind) {
  const Tensor<T>& in = x.value();
  Tensor<T> out(in.shape());
  const T* px = in.data();
  T* py = out.data();
  const std::size_t n = in.numel();
  // Single precision uses Eigen's vectorized transcendentals (a few ulp);
  // double keeps the libm results the loop oracles are written against.
  if constexpr (std::is_same_v<T, float>) {
    Eigen::Map<const Eigen::ArrayXf> xa(px, static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::ArrayXf> ya(py, static_cast<Eigen::Index>(n));
    if (kind == Unary::Tanh) {
      ya = xa.tanh();
    } else if (kind == Unary::Sigmoid) {
      ya = ((-xa).exp() + 1.0f).inverse();
    } else if (kind == Unary::Exp) {
      ya = xa.exp();
    }
  }
  switch (kind) {
    case Unary::Tanh:
      if constexpr (!std::is_same_v<T, float>) {
        for (std::size_t i = 0; i < n; ++i) py[i] = std::tanh(px[i]);
      }
      break;
    case Unary::Sigmoid:
      if constexpr (!std::is_same_v<T, float>) {
        for (std::size_t i = 0; i < n; ++i) py[i] = T{1} / (T{1} + std::exp(-px[i]));
      }
      break;
    case Unary::Relu:
      for (std::size_t i = 0; i < n; ++i) py[i] = px[i] > T{0} ? px[i] : T{0};
      break;
    case Unary::Hardswish:
      for (std::size_t i = 0; i < n; ++i) py[i] = hardswish_value(px[i]);
      break;
    case Unary::Exp:
      if constexpr (!std::is_same_v<T, float>) {
        for (std::size_t i = 0; i < n; ++i) py[i] = std::exp(px[i]);
      }
      break;
  }
  static constexpr const char* names[] = {"tanh", "sigmoid", "relu", "hardswish", "exp"};
  return Var<T>::make(
      std::move(out), {x},
      [kind](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* y = self.value.data();
        const T* xin = self.parents[0]->value.data();
        const T* gy = self.grad.data();
        T* gx = g->data();
        const std::size_t count = self.value.numel();
        switch (kind) {
          case Unary::Tanh: {
            const T sign =
                fault_injection::active() == fault_injection::Fault::TanhBackwardSignFlip
                    ? T{-1}
                    : T{1};
            for (std::size_t i = 0; i < count; ++i) gx[i] += sign * gy[i] * (T{1} - y[i] * y[i]);
            break;
          }
          case Unary::Sigmoid:
            for (std::size_t i = 0; i < count; ++i) gx[i] += gy[i] * y[i] * (T{1} - y[i]);
            break;
          case Unary::Relu:
            for (std::size_t i = 0; i < count; ++i) gx[i] += xin[i] > T{0} ? gy[i] : T{0};
            break;
          case Unary::Hardswish:
            for (std::size_t i = 0; i < count; ++i) gx[i] += gy[i] * hardswish_slope(xin[i]);
            break;
          case Unary::Exp:
            for (std::size_t i = 0; i < count; ++i) gx[i] += gy[i] * y[i];
            break;
        }
      },
      names[static_cast<int>(kind)]);
}

template <typename T>
Var<T> pairwise_difference(const Var<T>& u, const Var<T>& w) {
  if (u.shape() != w.shape() || u.rank() == 0) {
    throw DimensionError("pairwise_difference: " + to_string(u.shape()) + " vs " +
                         to_string(w.shape()));
  }
  const std::size_t v = u.shape().back();
  const std::size_t rows = u.value().numel() / v;
  Shape out_shape = u.shape();
  out_shape.push_back(v);
  Tensor<T> out(out_shape);
  const T* pu = u.value().data();
  const T* pw = w.value().data();
  T* po = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* ur = pu + r * v;
    const T* wr = pw + r * v;
    T* orow = po + r * v * v;
    for (std::size_t i = 0; i < v; ++i)
      for (std::size_t j = 0; j < v; ++j) orow[i * v + j] = ur[i] - wr[j];
  }
  return Var<T>::make(
      std::move(out), {u, w},
      [v, rows](Node<T>& self) {
        Tensor<T>* gu = grad_target(self.parents[0]);
        Tensor<T>* gw = grad_target(self.parents[1]);
        const T* g = self.grad.data();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* grow = g + r * v * v;
          for (std::size_t i = 0; i < v; ++i) {
            T acc{0};
            for (std::size_t j = 0; j < v; ++j) {
              acc += grow[i * v + j];
              if (gw) (*gw)[r * v + j] -= grow[i * v + j];
            }
            if (gu) (*gu)[r * v + i] += acc;
          }
        }
      },
      "pairwise_difference");
}

#define DSTSA_INSTANTIATE(T)                                  \
  template Var<T> add(const Var<T>&, const Var<T>&);          \
  template Var<T> sub(const Var<T>&, const Var<T>&);          \
  template Var<T> mul(const Var<T>&, const Var<T>&);          \
  template Var<T> scale(const Var<T>&, T);                    \
  template Var<T> unary(const Var<T>&, Unary);                \
  template Var<T> pairwise_difference(const Var<T>&, const Var<T>&);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::ops
