#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dstsa/data/skeleton.hpp"

namespace dstsa::data {

struct BatchOptions {
  Modality modality = Modality::Joint;
  std::size_t frames = 150;
  SamplingMode sampling = SamplingMode::Uniform;
  std::uint64_t seed = 0;  // random sampling: per-sample streams derive from this
  int label_set = 14;
};

struct Batch {
  Tensor<float> x;  // (N, 3, frames, V)
  std::vector<int> labels;
};

// Resamples each selected sequence to `frames`, derives the modality and
// stacks the result. Sample i of the dataset always uses the same random
// stream for a given seed, independent of batch composition.
Batch make_batch(const std::vector<SkeletonSequence>& seqs, std::span<const std::size_t> order,
                 const GraphSpec& graph, const BatchOptions& options);

}  // namespace dstsa::data
