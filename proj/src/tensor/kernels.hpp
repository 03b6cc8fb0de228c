#pragma once

// Internal iteration helpers shared by the op implementations.

#include <Eigen/Core>

#include "dstsa/tensor/shape.hpp"
#include "dstsa/tensor/tensor.hpp"

namespace dstsa::detail {

// Visits every element of a rank-5 (padded) iteration space in row-major
// order, passing the flat output index and the offsets of two strided
// operands.
template <typename F>
inline void for_each5(const Index5& d, const Index5& sa, const Index5& sb, F&& f) {
  std::size_t o = 0;
  for (std::size_t i0 = 0; i0 < d[0]; ++i0) {
    for (std::size_t i1 = 0; i1 < d[1]; ++i1) {
      for (std::size_t i2 = 0; i2 < d[2]; ++i2) {
        for (std::size_t i3 = 0; i3 < d[3]; ++i3) {
          std::size_t a = i0 * sa[0] + i1 * sa[1] + i2 * sa[2] + i3 * sa[3];
          std::size_t b = i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3];
          for (std::size_t i4 = 0; i4 < d[4]; ++i4) {
            f(o++, a, b);
            a += sa[4];
            b += sb[4];
          }
        }
      }
    }
  }
}

// Sums `grad` (shaped like the broadcast result) down to `shape`.
template <typename T>
void accumulate_reduced(const Tensor<T>& grad, Tensor<T>& target) {
  if (grad.shape() == target.shape()) {
    T* t = target.data();
    const T* g = grad.data();
    for (std::size_t i = 0; i < grad.numel(); ++i) t[i] += g[i];
    return;
  }
  const Index5 dims = pad_to_max_rank(grad.shape());
  const Index5 st = broadcast_strides(target.shape(), grad.shape());
  const T* g = grad.data();
  T* t = target.data();
  for_each5(dims, st, st, [&](std::size_t o, std::size_t a, std::size_t) { t[a] += g[o]; });
}

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMatrix<T>>;

}  // namespace dstsa::detail
