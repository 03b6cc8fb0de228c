#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dstsa/data/graph.hpp"
#include "dstsa/tensor/tensor.hpp"

namespace dstsa::data {

// World coordinates in metres, laid out (3, T, V).
struct SkeletonSequence {
  Tensor<double> coords;
  int label14 = 0;  // 0-based
  int label28 = 0;  // 0-based
  int subject = 0;
  int trial = 0;

  std::size_t frames() const { return coords.dim(1); }
  std::size_t joints() const { return coords.dim(2); }
  int label(int label_set) const { return label_set == 28 ? label28 : label14; }
};

enum class Modality { Joint, Bone, JointMotion, BoneMotion };

Modality parse_modality(const std::string& name);
std::string modality_name(Modality m);
const std::vector<Modality>& all_modalities();

// e[:, t, i] = x[:, t, i] - x[:, t, parent(i)]; the root row stays zero.
Tensor<double> derive_bone(const Tensor<double>& coords, const GraphSpec& graph);

// m[:, t] = x[:, t] - x[:, t-1] for t >= 1; frame 0 is zero. Throws
// InputError when T < 2.
Tensor<double> derive_motion(const Tensor<double>& coords);

Tensor<double> derive_modality(const Tensor<double>& coords, const GraphSpec& graph,
                               Modality modality);

// Subtracts the root joint's frame-0 position from every frame.
void center_on_root(Tensor<double>& coords, std::size_t root);

enum class SamplingMode { Uniform, Random };

// Frame indices for resampling a T-frame sequence to `target` frames.
// Uniform: round(linspace(0, T-1, target)) with ties to even. Random: one
// uniformly drawn index inside each of `target` equal-width bins over
// [0, T), so the result is sorted; short sequences repeat frames.
std::vector<std::size_t> sample_indices(std::size_t frames, std::size_t target,
                                        SamplingMode mode, std::uint64_t seed);

Tensor<double> gather_frames(const Tensor<double>& coords, const std::vector<std::size_t>& idx);

SkeletonSequence sample_frames(const SkeletonSequence& seq, std::size_t target,
                               SamplingMode mode, std::uint64_t seed);

}  // namespace dstsa::data
