#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dstsa/tensor/var.hpp"

namespace dstsa::ops {

// ---- elementwise (broadcasting, trailing-axis alignment) ----

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& x, T factor);

enum class Unary { Tanh, Sigmoid, Relu, Hardswish, Exp };

template <typename T> Var<T> unary(const Var<T>& x, Unary kind);
template <typename T> Var<T> tanh(const Var<T>& x) { return unary(x, Unary::Tanh); }
template <typename T> Var<T> sigmoid(const Var<T>& x) { return unary(x, Unary::Sigmoid); }
template <typename T> Var<T> relu(const Var<T>& x) { return unary(x, Unary::Relu); }
template <typename T> Var<T> hardswish(const Var<T>& x) { return unary(x, Unary::Hardswish); }
template <typename T> Var<T> exp(const Var<T>& x) { return unary(x, Unary::Exp); }

// out[..., i, j] = u[..., i] - w[..., j] for equally shaped u, w (..., V).
template <typename T> Var<T> pairwise_difference(const Var<T>& u, const Var<T>& w);

// Max-subtracted softmax along `axis`.
template <typename T> Var<T> softmax(const Var<T>& x, long axis);

// ---- reductions ----
// An empty axis list reduces over every axis.

template <typename T>
Var<T> sum(const Var<T>& x, const std::vector<long>& axes, bool keepdim = false);
template <typename T>
Var<T> mean(const Var<T>& x, const std::vector<long>& axes, bool keepdim = false);

// ---- shape ----

template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
template <typename T> Var<T> permute(const Var<T>& x, const std::vector<std::size_t>& perm);
// Half-open range [begin, end) along `axis`.
template <typename T>
Var<T> slice(const Var<T>& x, long axis, std::size_t begin, std::size_t end);
template <typename T> Var<T> concat(const std::vector<Var<T>>& xs, long axis);

// ---- linear algebra ----

// Batched matrix product over the last two axes; leading axes broadcast.
// Rank-1 operands are promoted to a row (lhs) or column (rhs) and squeezed.
template <typename T> Var<T> matmul(const Var<T>& lhs, const Var<T>& rhs);

// 1x1 channel map: x (N, Cin, ...) with weight (Cout, Cin) and optional bias
// (Cout) -> (N, Cout, ...).
template <typename T>
Var<T> channel_map(const Var<T>& x, const Var<T>& weight,
                   const std::optional<Var<T>>& bias = std::nullopt);
template <typename T>
Var<T> channel_map(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  return channel_map(x, weight, std::optional<Var<T>>(bias));
}

// ---- temporal operators over (N, C, T, V) ----

struct TemporalConvSpec {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t padding = 0;
};

// Output frames for a temporal window op; throws ConfigError when < 1.
std::size_t temporal_output_length(std::size_t frames, std::size_t kernel,
                                   const TemporalConvSpec& spec);

// Convolution along the frame axis with weight (Cout, Cin, k).
template <typename T>
Var<T> conv_temporal(const Var<T>& x, const Var<T>& weight,
                     const std::optional<Var<T>>& bias, const TemporalConvSpec& spec);
template <typename T>
Var<T> conv_temporal(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
                     const TemporalConvSpec& spec) {
  return conv_temporal(x, weight, std::optional<Var<T>>(bias), spec);
}

// Max over a temporal window; padded positions never win.
template <typename T>
Var<T> max_pool_temporal(const Var<T>& x, std::size_t window, std::size_t stride,
                         std::size_t padding);

// Keeps frames 0, s, 2s, ...; output length ceil(T / s).
template <typename T> Var<T> subsample_frames(const Var<T>& x, std::size_t stride);

// ---- normalization ----

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;
  Tensor<T> running_var;
};

struct BatchNormOptions {
  double momentum = 0.9;  // running <- momentum * running + (1 - momentum) * batch
  double eps = 1e-5;
};

// Per-channel normalization over every axis except 1. Training mode
// normalizes with batch statistics and updates `state`; eval mode uses it.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormState<T>& state, bool training,
                  const BatchNormOptions& options = {});

// ---- loss ----

// Mean negative log-likelihood of softmax(logits) at the labelled classes.
template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::span<const int> labels);

// ---- operator sugar ----

template <typename T> Var<T> operator+(const Var<T>& a, const Var<T>& b) { return add(a, b); }
template <typename T> Var<T> operator-(const Var<T>& a, const Var<T>& b) { return sub(a, b); }
template <typename T> Var<T> operator*(const Var<T>& a, const Var<T>& b) { return mul(a, b); }

}  // namespace dstsa::ops
