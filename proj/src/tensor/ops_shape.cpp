#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dstsa/tensor/ops.hpp"
#include "kernels.hpp"

namespace dstsa::ops {

namespace {

// (outer, extent, inner) factorization around one axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

template <typename T>
Var<T> reduce_sum(const Var<T>& x, const std::vector<long>& axes, bool keepdim, bool average,
                  const char* name) {
  const Shape& in_shape = x.shape();
  std::vector<bool> reduced(in_shape.size(), false);
  for (long a : axes) reduced[normalize_axis(a, in_shape.size())] = true;
  if (axes.empty()) reduced.assign(in_shape.size(), true);
  Shape keep_shape = in_shape;
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t i = 0; i < in_shape.size(); ++i) {
    if (reduced[i]) {
      keep_shape[i] = 1;
      count *= in_shape[i];
      if (keepdim) out_shape.push_back(1);
    } else {
      out_shape.push_back(in_shape[i]);
    }
  }
  const T factor = average ? T{1} / static_cast<T>(count) : T{1};
  Tensor<T> out(keep_shape);
  const Index5 dims = pad_to_max_rank(in_shape);
  const Index5 so = broadcast_strides(keep_shape, in_shape);
  const T* px = x.value().data();
  T* po = out.data();
  detail::for_each5(dims, so, so, [&](std::size_t i, std::size_t o, std::size_t) { po[o] += px[i]; });
  if (average) {
    for (auto& v : out.values()) v *= factor;
  }
  out = out.reshaped(out_shape);
  return Var<T>::make(
      std::move(out), {x},
      [keep_shape, factor](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const Shape& in = self.parents[0]->value.shape();
        const Index5 d = pad_to_max_rank(in);
        const Index5 s = broadcast_strides(keep_shape, in);
        const T* go = self.grad.data();
        T* gi = g->data();
        detail::for_each5(d, s, s, [&](std::size_t i, std::size_t o, std::size_t) {
          gi[i] += factor * go[o];
        });
      },
      name);
}

}  // namespace

template <typename T>
Var<T> sum(const Var<T>& x, const std::vector<long>& axes, bool keepdim) {
  return reduce_sum(x, axes, keepdim, false, "sum");
}

template <typename T>
Var<T> mean(const Var<T>& x, const std::vector<long>& axes, bool keepdim) {
  return reduce_sum(x, axes, keepdim, true, "mean");
}

template <typename T>
Var<T> softmax(const Var<T>& x, long axis_in) {
  const std::size_t axis = normalize_axis(axis_in, x.rank());
  const AxisSplit s = split_at(x.shape(), axis);
  Tensor<T> out(x.shape());
  const T* px = x.value().data();
  T* py = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.extent * s.inner + in;
      T peak = -std::numeric_limits<T>::infinity();
      for (std::size_t k = 0; k < s.extent; ++k) peak = std::max(peak, px[base + k * s.inner]);
      T total{0};
      for (std::size_t k = 0; k < s.extent; ++k) {
        const T e = std::exp(px[base + k * s.inner] - peak);
        py[base + k * s.inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < s.extent; ++k) py[base + k * s.inner] /= total;
    }
  }
  return Var<T>::make(
      std::move(out), {x},
      [s](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* y = self.value.data();
        const T* gy = self.grad.data();
        T* gx = g->data();
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.extent * s.inner + in;
            T dot{0};
            for (std::size_t k = 0; k < s.extent; ++k) {
              dot += gy[base + k * s.inner] * y[base + k * s.inner];
            }
            for (std::size_t k = 0; k < s.extent; ++k) {
              const std::size_t i = base + k * s.inner;
              gx[i] += y[i] * (gy[i] - dot);
            }
          }
        }
      },
      "softmax");
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return Var<T>::make(
      std::move(out), {x},
      [](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        T* gx = g->data();
        const T* gy = self.grad.data();
        for (std::size_t i = 0; i < g->numel(); ++i) gx[i] += gy[i];
      },
      "reshape");
}

template <typename T>
Var<T> permute(const Var<T>& x, const std::vector<std::size_t>& perm) {
  const Shape& in_shape = x.shape();
  if (perm.size() != in_shape.size()) {
    throw DimensionError("permutation of length " + std::to_string(perm.size()) +
                         " for shape " + to_string(in_shape));
  }
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t p : perm) {
    if (p >= perm.size() || seen[p]) {
      throw DimensionError("invalid permutation for shape " + to_string(in_shape));
    }
    seen[p] = true;
  }
  Shape out_shape(perm.size());
  const auto in_strides = contiguous_strides(in_shape);
  Index5 gather{0, 0, 0, 0, 0};
  const std::size_t offset = kMaxRank - perm.size();
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out_shape[i] = in_shape[perm[i]];
    gather[offset + i] = in_strides[perm[i]];
  }
  const Index5 dims = pad_to_max_rank(out_shape);
  Tensor<T> out(out_shape);
  const T* px = x.value().data();
  T* py = out.data();
  detail::for_each5(dims, gather, gather, [&](std::size_t o, std::size_t i, std::size_t) {
    py[o] = px[i];
  });
  return Var<T>::make(
      std::move(out), {x},
      [dims, gather](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* gy = self.grad.data();
        T* gx = g->data();
        detail::for_each5(dims, gather, gather, [&](std::size_t o, std::size_t i, std::size_t) {
          gx[i] += gy[o];
        });
      },
      "permute");
}

template <typename T>
Var<T> slice(const Var<T>& x, long axis_in, std::size_t begin, std::size_t end) {
  const std::size_t axis = normalize_axis(axis_in, x.rank());
  const Shape& in_shape = x.shape();
  if (begin > end || end > in_shape[axis]) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range on axis " + std::to_string(axis) + " of " +
                         to_string(in_shape));
  }
  const AxisSplit s = split_at(in_shape, axis);
  Shape out_shape = in_shape;
  out_shape[axis] = end - begin;
  const std::size_t width = end - begin;
  Tensor<T> out(out_shape);
  const T* px = x.value().data();
  T* py = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(px + (o * s.extent + begin) * s.inner, width * s.inner,
                py + o * width * s.inner);
  }
  return Var<T>::make(
      std::move(out), {x},
      [s, begin, width](Node<T>& self) {
        Tensor<T>* g = grad_target(self.parents[0]);
        if (!g) return;
        const T* gy = self.grad.data();
        T* gx = g->data();
        for (std::size_t o = 0; o < s.outer; ++o) {
          T* dst = gx + (o * s.extent + begin) * s.inner;
          const T* src = gy + o * width * s.inner;
          for (std::size_t i = 0; i < width * s.inner; ++i) dst[i] += src[i];
        }
      },
      "slice");
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& xs, long axis_in) {
  if (xs.empty()) throw DimensionError("concat of zero tensors");
  const std::size_t axis = normalize_axis(axis_in, xs.front().rank());
  Shape reference = xs.front().shape();
  reference[axis] = 0;
  Shape out_shape = reference;
  for (const auto& x : xs) {
    Shape probe = x.shape();
    if (probe.size() != reference.size()) {
      throw DimensionError("concat rank mismatch: " + to_string(xs.front().shape()) + " vs " +
                           to_string(probe));
    }
    const std::size_t extent = probe[axis];
    probe[axis] = 0;
    if (probe != reference) {
      throw DimensionError("concat shape mismatch: " + to_string(xs.front().shape()) + " vs " +
                           to_string(x.shape()));
    }
    out_shape[axis] += extent;
  }
  const AxisSplit s = split_at(out_shape, axis);
  Tensor<T> out(out_shape);
  T* py = out.data();
  std::vector<std::size_t> offsets;
  std::size_t cursor = 0;
  for (const auto& x : xs) {
    offsets.push_back(cursor);
    const std::size_t width = x.shape()[axis];
    const T* px = x.value().data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(px + o * width * s.inner, width * s.inner,
                  py + (o * s.extent + cursor) * s.inner);
    }
    cursor += width;
  }
  return Var<T>::make(
      std::move(out), xs,
      [s, offsets, axis](Node<T>& self) {
        const T* gy = self.grad.data();
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
          Tensor<T>* g = grad_target(self.parents[k]);
          if (!g) continue;
          const std::size_t width = self.parents[k]->value.shape()[axis];
          T* gx = g->data();
          for (std::size_t o = 0; o < s.outer; ++o) {
            const T* src = gy + (o * s.extent + offsets[k]) * s.inner;
            T* dst = gx + o * width * s.inner;
            for (std::size_t i = 0; i < width * s.inner; ++i) dst[i] += src[i];
          }
        }
      },
      "concat");
}

#define DSTSA_INSTANTIATE(T)                                                         \
  template Var<T> sum(const Var<T>&, const std::vector<long>&, bool);                \
  template Var<T> mean(const Var<T>&, const std::vector<long>&, bool);               \
  template Var<T> softmax(const Var<T>&, long);                                      \
  template Var<T> reshape(const Var<T>&, Shape);                                     \
  template Var<T> permute(const Var<T>&, const std::vector<std::size_t>&);           \
  template Var<T> slice(const Var<T>&, long, std::size_t, std::size_t);              \
  template Var<T> concat(const std::vector<Var<T>>&, long);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::ops
