#pragma once

#include "dstsa/nn/module.hpp"

namespace dstsa::nn {

// All poolings take batched features x of shape (N, C, T, V).

// Mean over frames -> (N, C, V).
template <typename T> Var<T> tap(const Var<T>& x);
// Mean over joints -> (N, C, T).
template <typename T> Var<T> vap(const Var<T>& x);

// Softmax over frames of the per-frame mean over (C, V) -> (N, T).
template <typename T> Var<T> tgp_weights(const Var<T>& x);
// Frame-importance weighted sum over frames -> (N, C, V).
template <typename T> Var<T> tgp(const Var<T>& x);

// Softmax over channels of the per-channel mean over (T, V) -> (N, C).
template <typename T> Var<T> cgp_weights(const Var<T>& x);
// Channel-importance weighted sum over channels -> (N, T, V).
template <typename T> Var<T> cgp(const Var<T>& x);

// cgp applied independently to each of `groups` contiguous channel slices
// -> (N, groups, T, V). groups = 1 is plain cgp with a singleton axis.
// `gated` = false replaces the softmax weights with a plain channel mean.
template <typename T> Var<T> grouped_channel_pool(const Var<T>& x, std::size_t groups, bool gated);

// Largest r' <= r dividing `channels` with channels / r' >= 4 (or r' = 1).
std::size_t stca_reduction(std::size_t channels, std::size_t r);

// Spatio-temporal coordinate-aware gate. The joined profile is
// [vap(x) (length T) | tap(x) (length V)], mixed by F1 (C -> C/r) and
// hardswish, then split at T into the frame gate sigmoid(f_t(.)) and the
// joint gate sigmoid(f_v(.)); output = x * g_t * g_v.
template <typename T>
struct Stca {
  ChannelLinear<T> reduce;  // F1
  ChannelLinear<T> temporal_head;
  ChannelLinear<T> joint_head;

  Stca() = default;
  Stca(std::size_t channels, std::size_t r, Rng& rng);
  Var<T> operator()(const Var<T>& x) const;
  // Gates (N, C, T, 1) and (N, C, 1, V), for inspection.
  std::pair<Var<T>, Var<T>> gates(const Var<T>& x) const;
  void collect(Collector<T>& c, const std::string& prefix) const;
};

}  // namespace dstsa::nn
