#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dstsa/tensor/var.hpp"

namespace dstsa::verify {

struct GradCheckOptions {
  double step = 1e-6;  // central-difference half width
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead.
  double floor = 1e-4;
  // Entries probed per input; 0 probes every entry.
  std::size_t max_entries = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<input>[<flat index>]: analytic=..., numeric=..."
  std::size_t probed = 0;
};

struct NamedInput {
  std::string name;
  Var<double> var;
};

// Compares reverse-mode gradients of the scalar `loss` with respect to each
// input against central finite differences. The loss is re-evaluated with
// graph recording disabled for every probe; inputs must be leaves.
GradCheckResult check_gradients(const std::function<Var<double>()>& loss,
                                std::vector<NamedInput> inputs,
                                const GradCheckOptions& options = {});

// sum(weights * y): a scalar probe whose gradient exercises every output
// entry with a distinct weight.
Var<double> random_projection(const Var<double>& y, std::uint64_t seed);

}  // namespace dstsa::verify
