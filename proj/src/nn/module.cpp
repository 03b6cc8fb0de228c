#include "dstsa/nn/module.hpp"

namespace dstsa::nn {

template <typename T>
ChannelLinear<T>::ChannelLinear(std::size_t cin, std::size_t cout, bool with_bias, Rng& rng)
    : weight(fan_in_uniform<T>(Shape{cout, cin}, cin, rng)) {
  if (with_bias) bias = zeros_param<T>(Shape{cout});
}

template <typename T>
Var<T> ChannelLinear<T>::operator()(const Var<T>& x) const {
  return ops::channel_map(x, weight, bias);
}

template <typename T>
void ChannelLinear<T>::collect(Collector<T>& c, const std::string& prefix) const {
  c.param(prefix + ".weight", weight);
  if (bias) c.param(prefix + ".bias", *bias);
}

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels)
    : gamma(make_param(Tensor<T>(Shape{channels}, T{1}))),
      beta(zeros_param<T>(Shape{channels})),
      state{Tensor<T>(Shape{channels}), Tensor<T>(Shape{channels}, T{1})} {}

template <typename T>
Var<T> BatchNorm<T>::operator()(const Var<T>& x, bool training) {
  return ops::batch_norm(x, gamma, beta, state, training);
}

template <typename T>
void BatchNorm<T>::collect(Collector<T>& c, const std::string& prefix) {
  c.param(prefix + ".gamma", gamma, false);
  c.param(prefix + ".beta", beta, false);
  c.buffer(prefix + ".running_mean", state.running_mean);
  c.buffer(prefix + ".running_var", state.running_var);
}

template struct ChannelLinear<float>;
template struct ChannelLinear<double>;
template struct BatchNorm<float>;
template struct BatchNorm<double>;

}  // namespace dstsa::nn
