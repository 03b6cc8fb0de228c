#pragma once

#include <vector>

#include "dstsa/nn/module.hpp"

namespace dstsa::train {

struct ScheduleConfig {
  double lr0 = 0.1;
  std::size_t warmup_epochs = 20;
  std::vector<std::size_t> step_epochs{70, 100};  // lr divided by 10 at each
  std::size_t epochs = 170;
};

// Linear warmup lr0 * (epoch + 1) / warmup, then lr0 divided by 10 once per
// step epoch already reached. Repeated division keeps 0.1 -> 0.01 -> 0.001
// exact in double.
double lr_at(std::size_t epoch, const ScheduleConfig& cfg);

struct SgdOptions {
  double momentum = 0.9;
  bool nesterov = true;
  double weight_decay = 4e-4;  // applied to params with decay = true
};

// SGD with (Nesterov) momentum. The L2 term is added to the gradient:
// g' = g + wd * p, v = mu * v + g', p -= lr * (g' + mu * v) (Nesterov) or
// p -= lr * v.
template <typename T>
class Sgd {
 public:
  Sgd(std::vector<nn::Param<T>> params, const SgdOptions& options);

  // Throws NumericError naming the parameter when any gradient is
  // non-finite; no parameter is modified in that case.
  void step(double lr);
  void zero_grad();

  const std::vector<nn::Param<T>>& params() const { return params_; }
  std::vector<Tensor<T>>& velocities() { return velocity_; }
  const SgdOptions& options() const { return options_; }

 private:
  std::vector<nn::Param<T>> params_;
  std::vector<Tensor<T>> velocity_;
  SgdOptions options_;
};

}  // namespace dstsa::train
