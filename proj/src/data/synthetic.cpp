#include "dstsa/data/synthetic.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

#include "dstsa/errors.hpp"

namespace dstsa::data {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace {

constexpr char kMagic[8] = {'D', 'S', 'T', 'S', 'A', 'S', 'Y', 'N'};
constexpr std::uint32_t kVersion = 1;

// Joint positions (V x 3) of an open hand / straight chain: each joint sits
// 3 cm beyond its parent, chains fanned out along x.
std::vector<std::array<double, 3>> rest_pose(const GraphSpec& graph) {
  std::vector<std::array<double, 3>> pos(graph.joints, {0.0, 0.0, 0.0});
  std::vector<double> spread(graph.joints, 0.0);
  const double n = static_cast<double>(graph.chains.size());
  for (std::size_t k = 0; k < graph.chains.size(); ++k) {
    for (std::size_t j : graph.chains[k]) spread[j] = 0.012 * (static_cast<double>(k) - (n - 1) / 2);
  }
  // Parents precede children in BFS order from the root.
  std::vector<std::size_t> order{graph.root};
  const auto adj = graph.neighbours();
  std::vector<bool> seen(graph.joints, false);
  seen[graph.root] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t w : adj[order[i]]) {
      if (!seen[w]) {
        seen[w] = true;
        order.push_back(w);
      }
    }
  }
  for (std::size_t j : order) {
    if (graph.parent[j] < 0) continue;
    const auto& p = pos[static_cast<std::size_t>(graph.parent[j])];
    pos[j] = {p[0] + spread[j], p[1] + 0.03, p[2]};
  }
  return pos;
}

template <typename V>
void write_pod(std::ofstream& out, V value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& in, const std::filesystem::path& file) {
  V value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(V))) {
    throw FormatError(file.string() + ": truncated sequence container");
  }
  return value;
}

}  // namespace

GraphSpec synthetic_graph(std::size_t joints) {
  return joints == 22 ? hand22() : chain_graph(joints);
}

std::vector<SkeletonSequence> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw InputError("synthetic data needs at least 2 classes");
  if (spec.frames < 2 || spec.joints < 2) {
    throw InputError("synthetic data needs at least 2 frames and 2 joints");
  }
  const GraphSpec graph = synthetic_graph(spec.joints);
  const auto rest = rest_pose(graph);
  const std::size_t patterns = (std::size_t{1} << graph.chains.size()) - 1;
  const std::size_t frames = spec.frames;
  const std::size_t joints = spec.joints;

  Rng rng(spec.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp_dist(0.015, 0.025);
  std::uniform_real_distribution<double> shift_dist(-0.1, 0.1);
  std::normal_distribution<double> noise(0.0, spec.noise);

  std::vector<SkeletonSequence> out;
  out.reserve(spec.classes * spec.per_class);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    const std::size_t mask = c % patterns + 1;
    const double cycles = static_cast<double>(1 + c / patterns);
    for (std::size_t s = 0; s < spec.per_class; ++s) {
      const double phase = phase_dist(rng);
      const double amp = amp_dist(rng);
      const std::array<double, 3> shift{shift_dist(rng), shift_dist(rng), shift_dist(rng)};
      SkeletonSequence seq;
      seq.coords = Tensor<double>(Shape{3, frames, joints});
      for (std::size_t t = 0; t < frames; ++t) {
        const double angle =
            2.0 * std::numbers::pi * cycles * static_cast<double>(t) / static_cast<double>(frames) +
            phase;
        std::vector<std::array<double, 3>> pose = rest;
        for (std::size_t k = 0; k < graph.chains.size(); ++k) {
          if (!(mask >> k & 1)) continue;
          const auto& chain = graph.chains[k];
          for (std::size_t d = 0; d < chain.size(); ++d) {
            const double depth = static_cast<double>(d + 1);
            pose[chain[d]][2] += amp * depth * std::sin(angle);
            pose[chain[d]][0] += 0.3 * amp * depth * std::cos(angle);
          }
        }
        for (std::size_t v = 0; v < joints; ++v) {
          for (std::size_t ax = 0; ax < 3; ++ax) {
            seq.coords.at({ax, t, v}) = pose[v][ax] + shift[ax] + noise(rng);
          }
        }
      }
      center_on_root(seq.coords, graph.root);
      seq.label14 = static_cast<int>(c);
      seq.label28 = static_cast<int>(c);
      seq.subject = static_cast<int>(s);
      out.push_back(std::move(seq));
    }
  }
  return out;
}

void save_sequences(const std::filesystem::path& file, const std::vector<SkeletonSequence>& seqs) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InputError("cannot write " + file.string());
  const std::size_t frames = seqs.empty() ? 0 : seqs.front().frames();
  const std::size_t joints = seqs.empty() ? 0 : seqs.front().joints();
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kVersion);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(joints));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(frames));
  write_pod<std::uint32_t>(out, 3);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(seqs.size()));
  for (const auto& seq : seqs) {
    if (seq.frames() != frames || seq.joints() != joints) {
      throw InputError("save_sequences: all sequences must share (T, V)");
    }
    for (int field : {seq.label14, seq.label28, seq.subject, seq.trial}) {
      write_pod<std::int32_t>(out, field);
    }
    out.write(reinterpret_cast<const char*>(seq.coords.data()),
              static_cast<std::streamsize>(seq.coords.numel() * sizeof(double)));
  }
  if (!out) throw InputError("write failed: " + file.string());
}

std::vector<SkeletonSequence> load_sequences(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw InputError("cannot open " + file.string());
  char magic[8] = {};
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(file.string() + ": not a sequence container");
  }
  const auto version = read_pod<std::uint32_t>(in, file);
  if (version != kVersion) {
    throw FormatError(file.string() + ": unsupported container version " + std::to_string(version));
  }
  const std::size_t joints = read_pod<std::uint32_t>(in, file);
  const std::size_t frames = read_pod<std::uint32_t>(in, file);
  const std::size_t channels = read_pod<std::uint32_t>(in, file);
  const std::size_t count = read_pod<std::uint32_t>(in, file);
  if (channels != 3) {
    throw FormatError(file.string() + ": expected 3 coordinate channels, got " +
                      std::to_string(channels));
  }
  std::vector<SkeletonSequence> seqs(count);
  for (auto& seq : seqs) {
    seq.label14 = read_pod<std::int32_t>(in, file);
    seq.label28 = read_pod<std::int32_t>(in, file);
    seq.subject = read_pod<std::int32_t>(in, file);
    seq.trial = read_pod<std::int32_t>(in, file);
    seq.coords = Tensor<double>(Shape{3, frames, joints});
    if (!in.read(reinterpret_cast<char*>(seq.coords.data()),
                 static_cast<std::streamsize>(seq.coords.numel() * sizeof(double)))) {
      throw FormatError(file.string() + ": truncated sequence container");
    }
    if (!seq.coords.all_finite()) {
      throw IntegrityError(file.string() + ": non-finite coordinate");
    }
  }
  return seqs;
}

}  // namespace dstsa::data
