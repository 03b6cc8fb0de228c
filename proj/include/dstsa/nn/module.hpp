#pragma once

#include <optional>
#include <string>
#include <vector>

#include <cmath>

#include "dstsa/tensor/ops.hpp"

namespace dstsa::nn {

template <typename T>
struct Param {
  std::string name;
  Var<T> var;  // shares its node with the owning layer
  bool decay = true;
};

// Flat view of a model's trainable parameters and persistent buffers, built
// on demand by walking the layers. Buffer pointers stay valid while the
// model is neither moved nor destroyed.
template <typename T>
struct Collector {
  std::vector<Param<T>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  void param(const std::string& name, const Var<T>& v, bool decay = true) {
    params.push_back({name, v, decay});
  }
  void buffer(const std::string& name, Tensor<T>& t) { buffers.emplace_back(name, &t); }
};

template <typename T>
Var<T> make_param(Tensor<T> value) {
  return Var<T>(std::move(value), true);
}

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename T>
Var<T> fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(fan_in)));
  return make_param(Tensor<T>::uniform(std::move(shape), -bound, bound, rng));
}

template <typename T>
Var<T> zeros_param(Shape shape) {
  return make_param(Tensor<T>(std::move(shape)));
}

template <typename T>
Var<T> scalar_param(T value) {
  return make_param(Tensor<T>::scalar(value));
}

// 1x1 channel map with optional bias: x (N, Cin, ...) -> (N, Cout, ...).
template <typename T>
struct ChannelLinear {
  Var<T> weight;  // (Cout, Cin)
  std::optional<Var<T>> bias;

  ChannelLinear() = default;
  ChannelLinear(std::size_t cin, std::size_t cout, bool with_bias, Rng& rng);
  Var<T> operator()(const Var<T>& x) const;
  void collect(Collector<T>& c, const std::string& prefix) const;
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
};

// Per-channel batch normalization over (N, C, ...) with learned scale/shift.
template <typename T>
struct BatchNorm {
  Var<T> gamma;
  Var<T> beta;
  ops::BatchNormState<T> state;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels);
  Var<T> operator()(const Var<T>& x, bool training);
  void collect(Collector<T>& c, const std::string& prefix);
};

}  // namespace dstsa::nn
