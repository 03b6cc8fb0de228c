#include "dstsa/nn/pooling.hpp"

namespace dstsa::nn {

namespace {

template <typename T>
void check_rank4(const Var<T>& x, const char* op) {
  if (x.rank() != 4) {
    throw DimensionError(std::string(op) + " expects (N, C, T, V), got " + to_string(x.shape()));
  }
}

}  // namespace

template <typename T>
Var<T> tap(const Var<T>& x) {
  check_rank4(x, "tap");
  return ops::mean(x, {2});
}

template <typename T>
Var<T> vap(const Var<T>& x) {
  check_rank4(x, "vap");
  return ops::mean(x, {3});
}

template <typename T>
Var<T> tgp_weights(const Var<T>& x) {
  check_rank4(x, "tgp");
  return ops::softmax(ops::mean(x, {1, 3}), 1);
}

template <typename T>
Var<T> tgp(const Var<T>& x) {
  const Var<T> w = ops::reshape(tgp_weights(x), {x.dim(0), 1, x.dim(2), 1});
  return ops::sum(ops::mul(x, w), {2});
}

template <typename T>
Var<T> cgp_weights(const Var<T>& x) {
  check_rank4(x, "cgp");
  return ops::softmax(ops::mean(x, {2, 3}), 1);
}

template <typename T>
Var<T> cgp(const Var<T>& x) {
  const Var<T> w = ops::reshape(cgp_weights(x), {x.dim(0), x.dim(1), 1, 1});
  return ops::sum(ops::mul(x, w), {1});
}

template <typename T>
Var<T> grouped_channel_pool(const Var<T>& x, std::size_t groups, bool gated) {
  check_rank4(x, "grouped_channel_pool");
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  if (groups == 0 || c % groups != 0) {
    throw ConfigError("cannot split " + std::to_string(c) + " channels into " +
                      std::to_string(groups) + " groups");
  }
  const Var<T> g = ops::reshape(x, {n, groups, c / groups, t, v});
  if (!gated) return ops::mean(g, {2});
  const Var<T> w = ops::softmax(ops::mean(g, {3, 4}), 2);
  return ops::sum(ops::mul(g, ops::reshape(w, {n, groups, c / groups, 1, 1})), {2});
}

std::size_t stca_reduction(std::size_t channels, std::size_t r) {
  for (std::size_t cand = std::max<std::size_t>(r, 1); cand > 1; --cand) {
    if (channels % cand == 0 && channels / cand >= 4) return cand;
  }
  return 1;
}

template <typename T>
Stca<T>::Stca(std::size_t channels, std::size_t r, Rng& rng) {
  if (r == 0 || channels % r != 0) {
    throw ConfigError("STCA reduction " + std::to_string(r) + " does not divide " +
                      std::to_string(channels) + " channels");
  }
  const std::size_t hidden = channels / r;
  reduce = ChannelLinear<T>(channels, hidden, true, rng);
  temporal_head = ChannelLinear<T>(hidden, channels, true, rng);
  joint_head = ChannelLinear<T>(hidden, channels, true, rng);
}

template <typename T>
std::pair<Var<T>, Var<T>> Stca<T>::gates(const Var<T>& x) const {
  check_rank4(x, "stca");
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), v = x.dim(3);
  const Var<T> joined = ops::concat(std::vector<Var<T>>{vap(x), tap(x)}, 2);  // (N, C, T+V)
  const Var<T> mixed = ops::hardswish(reduce(joined));
  const Var<T> gt = ops::sigmoid(temporal_head(ops::slice(mixed, 2, 0, t)));
  const Var<T> gv = ops::sigmoid(joint_head(ops::slice(mixed, 2, t, t + v)));
  return {ops::reshape(gt, {n, c, t, 1}), ops::reshape(gv, {n, c, 1, v})};
}

template <typename T>
Var<T> Stca<T>::operator()(const Var<T>& x) const {
  auto [gt, gv] = gates(x);
  return ops::mul(ops::mul(x, gt), gv);
}

template <typename T>
void Stca<T>::collect(Collector<T>& c, const std::string& prefix) const {
  reduce.collect(c, prefix + ".reduce");
  temporal_head.collect(c, prefix + ".temporal_head");
  joint_head.collect(c, prefix + ".joint_head");
}

#define DSTSA_INSTANTIATE(T)                                                  \
  template Var<T> tap(const Var<T>&);                                         \
  template Var<T> vap(const Var<T>&);                                         \
  template Var<T> tgp_weights(const Var<T>&);                                 \
  template Var<T> tgp(const Var<T>&);                                         \
  template Var<T> cgp_weights(const Var<T>&);                                 \
  template Var<T> cgp(const Var<T>&);                                         \
  template Var<T> grouped_channel_pool(const Var<T>&, std::size_t, bool);     \
  template struct Stca<T>;

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::nn
