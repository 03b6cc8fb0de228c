#include "dstsa/verify/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dstsa/tensor/ops.hpp"

namespace dstsa::verify {

GradCheckResult check_gradients(const std::function<Var<double>()>& loss,
                                std::vector<NamedInput> inputs,
                                const GradCheckOptions& options) {
  for (auto& in : inputs) in.var.zero_grad();
  Var<double> out = loss();
  if (out.value().numel() != 1) {
    throw DimensionError("check_gradients needs a scalar loss, got " + to_string(out.shape()));
  }
  out.backward();

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& in : inputs) {
    const std::size_t count = in.var.value().numel();
    const Tensor<double> analytic =
        in.var.has_grad() ? in.var.grad() : Tensor<double>(in.var.shape());
    std::vector<std::size_t> entries(count);
    std::iota(entries.begin(), entries.end(), 0);
    if (options.max_entries && count > options.max_entries) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(options.max_entries);
    }
    for (std::size_t idx : entries) {
      double& slot = in.var.mutable_value()[idx];
      const double saved = slot;
      double plus = 0.0;
      double minus = 0.0;
      {
        NoGradGuard guard;
        slot = saved + options.step;
        plus = loss().value().item();
        slot = saved - options.step;
        minus = loss().value().item();
      }
      slot = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.probed;
      if (rel >= result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = rel;
        std::ostringstream os;
        os.precision(10);
        os << in.name << '[' << idx << "]: analytic=" << a << ", numeric=" << numeric;
        result.worst = os.str();
      }
    }
  }
  return result;
}

Var<double> random_projection(const Var<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  Var<double> weights(Tensor<double>::uniform(y.shape(), -1.0, 1.0, rng));
  return ops::sum(ops::mul(y, weights), {}, false);
}

}  // namespace dstsa::verify
