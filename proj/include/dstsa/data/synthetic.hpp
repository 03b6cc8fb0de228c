#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dstsa/data/skeleton.hpp"

namespace dstsa::data {

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t per_class = 16;
  std::size_t joints = 22;
  std::size_t frames = 30;
  std::uint64_t seed = 7;
  double noise = 0.01;  // Gaussian sigma, metres
};

// Rest pose plus a class-specific oscillation: class c bends the subset of
// finger chains encoded by (c mod (2^chains - 1)) + 1 at (1 + c div that)
// cycles per sequence. Phase, amplitude and global translation are drawn per
// sample, so the time-averaged pose carries no class information. 22 joints
// use the hand graph; other counts use a chain. Sequences come out
// class-major, centred on the root joint of frame 0.
std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec);

// Graph the generator used for `joints`.
GraphSpec synthetic_graph(std::size_t joints);

// Binary container, little-endian:
//   "DSTSASYN" | u32 version | u32 V | u32 T | u32 C0 (=3) | u32 count
//   count x { i32 label14, label28, subject, trial | f64[C0 * T * V] }
void save_sequences(const std::filesystem::path& file, const std::vector<SkeletonSequence>& seqs);
std::vector<SkeletonSequence> load_sequences(const std::filesystem::path& file);

}  // namespace dstsa::data
