#include "dstsa/data/batch.hpp"

#include "dstsa/errors.hpp"

namespace dstsa::data {

Batch make_batch(const std::vector<SkeletonSequence>& seqs, std::span<const std::size_t> order,
                 const GraphSpec& graph, const BatchOptions& options) {
  const std::size_t joints = graph.joints;
  const std::size_t frames = options.frames;
  Batch batch;
  batch.x = Tensor<float>(Shape{order.size(), 3, frames, joints});
  batch.labels.reserve(order.size());
  const std::size_t plane = 3 * frames * joints;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= seqs.size()) throw InputError("batch index out of range");
    const SkeletonSequence& seq = seqs[order[i]];
    if (seq.joints() != joints) {
      throw DimensionError("sequence has " + std::to_string(seq.joints()) + " joints, graph " +
                           graph.name + " has " + std::to_string(joints));
    }
    // Derive on the full sequence so motion uses true neighbouring frames.
    const Tensor<double> feats = derive_modality(seq.coords, graph, options.modality);
    const auto idx = sample_indices(seq.frames(), frames, options.sampling,
                                    derive_seed(options.seed, order[i]));
    const Tensor<double> picked = gather_frames(feats, idx);
    float* dst = batch.x.data() + i * plane;
    for (std::size_t k = 0; k < plane; ++k) dst[k] = static_cast<float>(picked[k]);
    batch.labels.push_back(seq.label(options.label_set));
  }
  return batch;
}

}  // namespace dstsa::data
