#include "dstsa/data/skeleton.hpp"

#include <cmath>
#include <random>

#include "dstsa/errors.hpp"

namespace dstsa::data {

namespace {

void require_coords(const Tensor<double>& coords) {
  if (coords.rank() != 3 || coords.dim(0) != 3) {
    throw DimensionError("skeleton coordinates must be (3, T, V), got " +
                         to_string(coords.shape()));
  }
}

}  // namespace

Modality parse_modality(const std::string& name) {
  if (name == "joint") return Modality::Joint;
  if (name == "bone") return Modality::Bone;
  if (name == "joint_motion") return Modality::JointMotion;
  if (name == "bone_motion") return Modality::BoneMotion;
  throw ConfigError("unknown modality '" + name +
                    "' (expected joint, bone, joint_motion or bone_motion)");
}

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::Joint: return "joint";
    case Modality::Bone: return "bone";
    case Modality::JointMotion: return "joint_motion";
    case Modality::BoneMotion: return "bone_motion";
  }
  return "joint";
}

const std::vector<Modality>& all_modalities() {
  static const std::vector<Modality> kAll{Modality::Joint, Modality::Bone, Modality::JointMotion,
                                          Modality::BoneMotion};
  return kAll;
}

Tensor<double> derive_bone(const Tensor<double>& coords, const GraphSpec& graph) {
  require_coords(coords);
  const std::size_t frames = coords.dim(1);
  const std::size_t joints = coords.dim(2);
  if (joints != graph.joints) {
    throw DimensionError("sequence has " + std::to_string(joints) + " joints, graph " +
                         graph.name + " has " + std::to_string(graph.joints));
  }
  Tensor<double> out(coords.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t t = 0; t < frames; ++t) {
      const double* row = coords.data() + (c * frames + t) * joints;
      double* dst = out.data() + (c * frames + t) * joints;
      for (auto [child, par] : graph.edges) dst[child] = row[child] - row[par];
    }
  }
  return out;
}

Tensor<double> derive_motion(const Tensor<double>& coords) {
  require_coords(coords);
  const std::size_t frames = coords.dim(1);
  const std::size_t joints = coords.dim(2);
  if (frames < 2) {
    throw InputError("motion needs at least 2 frames, got " + std::to_string(frames));
  }
  Tensor<double> out(coords.shape());
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t t = 1; t < frames; ++t) {
      const double* cur = coords.data() + (c * frames + t) * joints;
      const double* prev = cur - joints;
      double* dst = out.data() + (c * frames + t) * joints;
      for (std::size_t v = 0; v < joints; ++v) dst[v] = cur[v] - prev[v];
    }
  }
  return out;
}

Tensor<double> derive_modality(const Tensor<double>& coords, const GraphSpec& graph,
                               Modality modality) {
  switch (modality) {
    case Modality::Joint: return coords;
    case Modality::Bone: return derive_bone(coords, graph);
    case Modality::JointMotion: return derive_motion(coords);
    case Modality::BoneMotion: return derive_motion(derive_bone(coords, graph));
  }
  return coords;
}

void center_on_root(Tensor<double>& coords, std::size_t root) {
  require_coords(coords);
  const std::size_t frames = coords.dim(1);
  const std::size_t joints = coords.dim(2);
  if (frames == 0) return;
  for (std::size_t c = 0; c < 3; ++c) {
    double* plane = coords.data() + c * frames * joints;
    const double origin = plane[root];
    for (std::size_t i = 0; i < frames * joints; ++i) plane[i] -= origin;
  }
}

std::vector<std::size_t> sample_indices(std::size_t frames, std::size_t target,
                                        SamplingMode mode, std::uint64_t seed) {
  if (frames == 0) throw InputError("cannot sample from an empty sequence");
  if (target == 0) throw InputError("target frame count must be at least 1");
  std::vector<std::size_t> idx(target);
  if (mode == SamplingMode::Uniform) {
    if (target == 1) return {0};
    const double step = static_cast<double>(frames - 1) / static_cast<double>(target - 1);
    for (std::size_t i = 0; i < target; ++i) {
      idx[i] = static_cast<std::size_t>(std::nearbyint(step * static_cast<double>(i)));
    }
    return idx;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double width = static_cast<double>(frames) / static_cast<double>(target);
  for (std::size_t i = 0; i < target; ++i) {
    const double pos = (static_cast<double>(i) + unit(rng)) * width;
    idx[i] = std::min(frames - 1, static_cast<std::size_t>(std::floor(pos)));
  }
  return idx;
}

Tensor<double> gather_frames(const Tensor<double>& coords, const std::vector<std::size_t>& idx) {
  require_coords(coords);
  const std::size_t frames = coords.dim(1);
  const std::size_t joints = coords.dim(2);
  Tensor<double> out(Shape{3, idx.size(), joints});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t t = 0; t < idx.size(); ++t) {
      if (idx[t] >= frames) throw InputError("frame index out of range");
      const double* src = coords.data() + (c * frames + idx[t]) * joints;
      std::copy_n(src, joints, out.data() + (c * idx.size() + t) * joints);
    }
  }
  return out;
}

SkeletonSequence sample_frames(const SkeletonSequence& seq, std::size_t target,
                               SamplingMode mode, std::uint64_t seed) {
  SkeletonSequence out = seq;
  out.coords = gather_frames(seq.coords, sample_indices(seq.frames(), target, mode, seed));
  return out;
}

}  // namespace dstsa::data
