#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dstsa/nn/module.hpp"

namespace dstsa::nn {

enum class BranchKind {
  Dilated,   // "g<d>": 1x1 reduce, then k-wide temporal conv with dilation d
  MaxPool,   // "M": 1x1 reduce, then 3-wide temporal max-pool
  Shortcut,  // "S": 1x1 reduce, strided frame selection
  Plain,     // "tcn": single full-width temporal conv, no reduce map (ablation baseline)
};

struct Branch {
  BranchKind kind = BranchKind::Dilated;
  std::size_t dilation = 1;
};

// Comma list such as "M,S,g1,g2,g3,g4"; "tcn" must appear alone.
std::vector<Branch> parse_branches(std::string_view text);
std::string branches_name(const std::vector<Branch>& branches);

struct MsTcnOptions {
  std::vector<Branch> branches = parse_branches("M,S,g1,g2,g3,g4");
  std::size_t kernel = 3;
  std::size_t plain_kernel = 5;
  std::size_t stride = 1;
};

// Output width of each branch: `total` split as evenly as possible, the
// first `total % parts` branches taking one extra channel.
std::vector<std::size_t> split_channels(std::size_t total, std::size_t parts);

// Frames after a same-padded (dilation * (k - 1) / 2) window; even k is a
// ConfigError.
std::size_t branch_output_length(std::size_t frames, std::size_t kernel, std::size_t dilation,
                                 std::size_t stride);

// Temporal convolution layer with weight (Cout, Cin, k).
template <typename T>
struct TemporalConv {
  Var<T> weight;
  std::optional<Var<T>> bias;
  ops::TemporalConvSpec spec;

  TemporalConv() = default;
  TemporalConv(std::size_t cin, std::size_t cout, std::size_t kernel,
               const ops::TemporalConvSpec& spec, bool with_bias, Rng& rng);
  Var<T> operator()(const Var<T>& x) const;
  void collect(Collector<T>& c, const std::string& prefix) const;
};

template <typename T>
class MsTcn {
 public:
  struct BranchLayer {
    Branch branch;
    std::optional<ChannelLinear<T>> reduce;
    std::optional<TemporalConv<T>> conv;
  };

  MsTcn() = default;
  MsTcn(std::size_t cin, std::size_t cout, const MsTcnOptions& options, Rng& rng);

  Var<T> operator()(const Var<T>& x) const;
  Var<T> branch_forward(std::size_t index, const Var<T>& x) const;
  void collect(Collector<T>& c, const std::string& prefix) const;

  const MsTcnOptions& options() const { return options_; }
  std::vector<BranchLayer> layers;

 private:
  MsTcnOptions options_;
};

}  // namespace dstsa::nn
