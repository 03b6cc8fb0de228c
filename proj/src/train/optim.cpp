#include "dstsa/train/optim.hpp"

#include <cmath>

#include "dstsa/errors.hpp"

namespace dstsa::train {

double lr_at(std::size_t epoch, const ScheduleConfig& cfg) {
  if (epoch < cfg.warmup_epochs) {
    return cfg.lr0 * static_cast<double>(epoch + 1) / static_cast<double>(cfg.warmup_epochs);
  }
  double lr = cfg.lr0;
  for (std::size_t step : cfg.step_epochs) {
    if (epoch >= step) lr /= 10.0;
  }
  return lr;
}

template <typename T>
Sgd<T>::Sgd(std::vector<nn::Param<T>> params, const SgdOptions& options)
    : params_(std::move(params)), options_(options) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.var.shape());
}

template <typename T>
void Sgd<T>::step(double lr) {
  for (const auto& p : params_) {
    if (p.var.has_grad() && !p.var.grad().all_finite()) {
      throw NumericError("non-finite gradient in parameter " + p.name);
    }
  }
  const T mu = static_cast<T>(options_.momentum);
  const T rate = static_cast<T>(lr);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    Tensor<T>& value = p.var.mutable_value();
    Tensor<T>& v = velocity_[k];
    const T wd = p.decay ? static_cast<T>(options_.weight_decay) : T{0};
    const T* g = p.var.has_grad() ? p.var.grad().data() : nullptr;
    for (std::size_t i = 0; i < value.numel(); ++i) {
      const T grad = (g ? g[i] : T{0}) + wd * value[i];
      v[i] = mu * v[i] + grad;
      value[i] -= rate * (options_.nesterov ? grad + mu * v[i] : v[i]);
    }
  }
}

template <typename T>
void Sgd<T>::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace dstsa::train
