#pragma once

#include <string>
#include <vector>

#include "dstsa/data/graph.hpp"
#include "dstsa/nn/graph_conv.hpp"
#include "dstsa/nn/mstcn.hpp"

namespace dstsa::nn {

struct ModelConfig {
  std::string graph = "hand22";
  std::size_t in_channels = 3;
  std::size_t num_classes = 14;
  std::size_t input_frames = 150;
  std::size_t base_channels = 64;
  std::vector<std::size_t> stage_depths{5, 3, 2};
  GraphConvOptions gc;
  MsTcnOptions tcn;  // stride is set per block

  // base * 2^s for stage s.
  std::vector<std::size_t> stage_channels() const;
  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

struct BlockPlan {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t stride;
};

// Every stage's blocks in order, with one stride-2, channel-doubling block
// after each stage but the last.
std::vector<BlockPlan> block_plan(const ModelConfig& cfg);

// h = relu(BN(GC(x))); y = relu(BN(MS-TCN(h))) + residual(x).
template <typename T>
struct Block {
  GraphConv<T> gc;
  BatchNorm<T> gc_bn;
  MsTcn<T> tcn;
  BatchNorm<T> tcn_bn;
  std::optional<TemporalConv<T>> res_conv;  // strided 1x1 when shapes change
  std::optional<BatchNorm<T>> res_bn;

  Block() = default;
  Block(const BlockPlan& plan, const data::GraphSpec& graph, const ModelConfig& cfg, Rng& rng);
  Var<T> forward(const Var<T>& x, bool training,
                 typename GraphConv<T>::Trace* trace = nullptr);
  void collect(Collector<T>& c, const std::string& prefix);
};

template <typename T>
class Model {
 public:
  struct Output {
    Var<T> logits;    // (N, classes)
    Var<T> features;  // last block output before pooling (N, C, T', V)
  };

  Model(const ModelConfig& cfg, std::uint64_t seed);

  Output forward(const Var<T>& x, bool training,
                 std::vector<typename GraphConv<T>::Trace>* traces = nullptr);
  Var<T> operator()(const Var<T>& x, bool training) { return forward(x, training).logits; }

  void collect(Collector<T>& c);
  std::vector<std::string> layer_names() const;
  const ModelConfig& config() const { return cfg_; }
  const data::GraphSpec& graph() const { return graph_; }

  BatchNorm<T> data_bn;
  ChannelLinear<T> embed;
  BatchNorm<T> embed_bn;
  std::vector<Block<T>> blocks;
  ChannelLinear<T> head;

 private:
  ModelConfig cfg_;
  data::GraphSpec graph_;
};

template <typename T>
std::size_t count_params(Model<T>& model);

struct LayerCost {
  std::string name;  // "stem", "block<i>" or "head"
  std::size_t params = 0;
  std::size_t mult_adds = 0;
};

struct ModelCost {
  std::size_t params = 0;
  // Per-sample multiply-accumulates of channel maps, convolutions, pooling,
  // topology construction and graph aggregation at cfg.input_frames.
  // Normalization, activations and max-pool comparisons are not counted.
  std::size_t mult_adds = 0;
  std::vector<LayerCost> layers;  // sums to the totals
};

// Closed-form accounting from the configuration alone.
ModelCost count_params_flops(const ModelConfig& cfg);

// M[t, v] = sum_k weight[cls, k] * features[k, t, v] for features (C, T', V)
// and classifier weight (classes, C).
Tensor<double> class_activation_map(const Tensor<double>& features, const Tensor<double>& weight,
                                    std::size_t cls);

// Min-max scaling to [0, 1]; a constant map becomes all 0.5.
Tensor<double> normalize_map(const Tensor<double>& map);

}  // namespace dstsa::nn
