#pragma once

#include <optional>

#include "dstsa/nn/pooling.hpp"
#include "dstsa/nn/topology.hpp"

namespace dstsa::nn {

struct GraphConvOptions {
  std::size_t groups = 8;  // K
  Theta theta = Theta::Tanh;
  StaticInit static_init = StaticInit::Random;
  bool use_stca = true;
  std::size_t stca_reduction = 4;
  bool use_tgp = true;  // false: plain temporal mean feeds the channel topology
  bool use_cgp = true;  // false: plain channel mean feeds the temporal topology
  bool enable_gcgc = true;
  bool enable_gtgc = true;
};

// out[n, c, t, :] = x_hat[n, c, t, :] . A[n, c] for A (N, C, V, V).
template <typename T> Var<T> channel_aggregate(const Var<T>& x_hat, const Var<T>& a_hat);

// Group k of x_hat's channels is aggregated frame by frame with A_t[n, k, t].
template <typename T> Var<T> temporal_aggregate(const Var<T>& x_hat, const Var<T>& a_t);

// Single-subset-per-partition spatial graph convolution evaluated with plain
// loops: out[n, o, t, j] = sum_p sum_i sum_c A_p[i, j] x[n, c, t, i] W_p[o, c].
Tensor<double> baseline_sgcn(const Tensor<double>& x, const std::vector<Tensor<double>>& partitions,
                             const std::vector<Tensor<double>>& weights);

// Parallel channel-wise (GC-GC) and temporal-wise (GT-GC) grouped graph
// convolutions sharing one transformed feature map, fused as a*gc + b*gt.
template <typename T>
class GraphConv {
 public:
  struct Trace {
    Var<T> x_hat;       // (N, Cout, T, V)
    Var<T> a_channel;   // fused (N, Cout, V, V); empty when GC-GC is off
    Var<T> a_temporal;  // (N, K, T, V, V); empty when GT-GC is off
    Var<T> gc;
    Var<T> gt;
    Var<T> out;
  };

  GraphConv() = default;
  GraphConv(std::size_t cin, std::size_t cout, const data::GraphSpec& graph,
            const GraphConvOptions& options, Rng& rng);

  Var<T> operator()(const Var<T>& x) const { return forward(x).out; }
  Trace forward(const Var<T>& x) const;
  Var<T> transform(const Var<T>& x) const;

  void collect(Collector<T>& c, const std::string& prefix) const;
  const GraphConvOptions& options() const { return options_; }

  std::optional<Stca<T>> stca;
  ChannelLinear<T> weight;  // W, bias-free
  ChannelLinear<T> phi1, phi2;
  std::optional<Var<T>> bank;  // static (K, V, V)
  Var<T> alpha;
  Var<T> phi3;  // shared scalar lifting pooled maps before differencing
  Var<T> a, b;  // fusion scalars

 private:
  GraphConvOptions options_;
};

}  // namespace dstsa::nn
