#pragma once

#include <vector>

#include "dstsa/nn/graph_conv.hpp"

// Loop-level reference evaluations used to cross-check the tensor-op
// implementations. Nothing here touches the autodiff graph: inputs and
// parameters are read as plain 64-bit tensors and every sum is spelled out.
namespace dstsa::verify::oracle {

// Frame weights (N, T) and pooled output (N, C, V).
struct Pooled {
  Tensor<double> weights;
  Tensor<double> out;
};
Pooled tgp(const Tensor<double>& x);
// Channel pooling within K contiguous groups: weights (N, C), out (N, K, T, V).
Pooled grouped_cgp(const Tensor<double>& x, std::size_t groups, bool gated = true);

double theta(double z, nn::Theta kind);

Tensor<double> stca(const Tensor<double>& x, const nn::Stca<double>& p);

// Full GraphConv forward (a * gc + b * gt) from the layer's parameters.
struct GraphConvRef {
  Tensor<double> x_hat;      // (N, C, T, V)
  Tensor<double> a_channel;  // (N, C, V, V)
  Tensor<double> a_temporal; // (N, K, T, V, V)
  Tensor<double> gc;
  Tensor<double> gt;
  Tensor<double> out;
};
GraphConvRef graph_conv(const Tensor<double>& x, const nn::GraphConv<double>& layer);

// Applies a joint permutation: y[..., perm[v]] = x[..., v] on the last axis.
Tensor<double> permute_joints(const Tensor<double>& x, const std::vector<std::size_t>& perm);
// Applies a frame permutation on axis 2 of (N, C, T, V): y[:, :, perm[t]] = x[:, :, t].
Tensor<double> permute_frames(const Tensor<double>& x, const std::vector<std::size_t>& perm);

}  // namespace dstsa::verify::oracle
