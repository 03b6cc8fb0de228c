#pragma once

#include <string>

#include "dstsa/data/graph.hpp"
#include "dstsa/nn/module.hpp"

namespace dstsa::nn {

// Nonlinearity applied to pairwise feature differences.
enum class Theta { Tanh, Relu, Sigmoid, Softmax };

Theta parse_theta(const std::string& name);
std::string theta_name(Theta theta);

// Softmax normalizes over the last (sender j) axis.
template <typename T> Var<T> apply_theta(const Var<T>& x, Theta theta);

enum class StaticInit { None, Random, Distance, Spatial1, Spatial2 };

StaticInit parse_static_init(const std::string& name);
std::string static_init_name(StaticInit init);

// D^{-1/2} A D^{-1/2} with D_ii = sum_j A_ij + eps.
Tensor<double> normalize_adjacency(const Tensor<double>& a, double eps = 1e-4);

// Static bank (K, V, V), laid out for right multiplication (row i sends to
// column j). random: U(-1/sqrt(V), 1/sqrt(V)); distance: exp(-hops) plus
// U(-1e-2, 1e-2) noise per group; spatial1: {I, child->parent, parent->child};
// spatial2: root / centripetal / centrifugal partitions by root distance,
// each normalized over receivers. Spatial strategies need K = 3
// (ConfigError otherwise). None yields an empty tensor.
Tensor<double> init_static(StaticInit strategy, const data::GraphSpec& graph, std::size_t groups,
                           std::uint64_t seed);

// Pairwise differences theta(u[..., i] - w[..., j]) for u, w of shape
// (..., V) -> (..., V, V).
template <typename T> Var<T> pairwise_topology(const Var<T>& u, const Var<T>& w, Theta theta);

// Channel topology from pooled features (N, Cin, V): A_c (N, Cout, V, V).
template <typename T>
Var<T> dynamic_channel_topology(const Var<T>& pooled, const ChannelLinear<T>& phi1,
                                const ChannelLinear<T>& phi2, Theta theta);

// alpha * A_c + A[group(c)] with channels split into K contiguous groups.
// `bank` may be empty (no static part). A_c is (N, C, V, V); bank (K, V, V).
template <typename T>
Var<T> fuse_topology(const Var<T>& a_c, const Var<T>& alpha, const std::optional<Var<T>>& bank,
                     std::size_t groups);

// Temporal topology from grouped channel pooling m (N, K, T, V):
// A_t[n, k, t, i, j] = theta(phi3 * (m[n, k, t, i] - m[n, k, t, j])).
template <typename T>
Var<T> dynamic_temporal_topology(const Var<T>& pooled, const Var<T>& phi3, Theta theta);

}  // namespace dstsa::nn
