#include "dstsa/nn/graph_conv.hpp"

namespace dstsa::nn {

template <typename T>
Var<T> channel_aggregate(const Var<T>& x_hat, const Var<T>& a_hat) {
  return ops::matmul(x_hat, a_hat);
}

template <typename T>
Var<T> temporal_aggregate(const Var<T>& x_hat, const Var<T>& a_t) {
  const std::size_t n = x_hat.dim(0), c = x_hat.dim(1), t = x_hat.dim(2), v = x_hat.dim(3);
  if (a_t.rank() != 5 || a_t.dim(0) != n || a_t.dim(2) != t || a_t.dim(3) != v) {
    throw DimensionError("temporal topology " + to_string(a_t.shape()) + " for features " +
                         to_string(x_hat.shape()));
  }
  const std::size_t k = a_t.dim(1);
  if (c % k != 0) {
    throw ConfigError("cannot split " + std::to_string(c) + " channels into " +
                      std::to_string(k) + " groups");
  }
  // (N, K, C/K, T, V) -> (N, K, T, C/K, V) so each frame's rows meet A_t[n, k, t].
  Var<T> g = ops::permute(ops::reshape(x_hat, {n, k, c / k, t, v}), {0, 1, 3, 2, 4});
  g = ops::matmul(g, a_t);
  return ops::reshape(ops::permute(g, {0, 1, 3, 2, 4}), {n, c, t, v});
}

Tensor<double> baseline_sgcn(const Tensor<double>& x, const std::vector<Tensor<double>>& partitions,
                             const std::vector<Tensor<double>>& weights) {
  if (x.rank() != 4 || partitions.size() != weights.size() || partitions.empty()) {
    throw DimensionError("baseline_sgcn: bad operands");
  }
  const std::size_t n = x.dim(0), cin = x.dim(1), t = x.dim(2), v = x.dim(3);
  const std::size_t cout = weights[0].dim(0);
  Tensor<double> out(Shape{n, cout, t, v});
  for (std::size_t p = 0; p < partitions.size(); ++p) {
    const Tensor<double>& a = partitions[p];
    const Tensor<double>& w = weights[p];
    if (a.shape() != Shape{v, v} || w.shape() != Shape{cout, cin}) {
      throw DimensionError("baseline_sgcn: partition/weight shape mismatch");
    }
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t f = 0; f < t; ++f)
          for (std::size_t j = 0; j < v; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < v; ++i) {
              double mixed = 0.0;
              for (std::size_t c = 0; c < cin; ++c) mixed += w.at({o, c}) * x.at({b, c, f, i});
              acc += a.at({i, j}) * mixed;
            }
            out.at({b, o, f, j}) += acc;
          }
  }
  return out;
}

template <typename T>
GraphConv<T>::GraphConv(std::size_t cin, std::size_t cout, const data::GraphSpec& graph,
                        const GraphConvOptions& options, Rng& rng)
    : options_(options) {
  const std::size_t k = options.groups;
  if (k == 0 || cout % k != 0) {
    throw ConfigError("output channels " + std::to_string(cout) + " not divisible by K = " +
                      std::to_string(k));
  }
  if (!options.enable_gcgc && !options.enable_gtgc) {
    throw ConfigError("at least one of GC-GC and GT-GC must be enabled");
  }
  if (options.enable_gtgc && cin % k != 0) {
    throw ConfigError("GT-GC pools input channels in K groups: " + std::to_string(cin) +
                      " not divisible by K = " + std::to_string(k));
  }
  if (options.use_stca) stca = Stca<T>(cin, stca_reduction(cin, options.stca_reduction), rng);
  weight = ChannelLinear<T>(cin, cout, false, rng);
  if (options.enable_gcgc) {
    phi1 = ChannelLinear<T>(cin, cout, true, rng);
    phi2 = ChannelLinear<T>(cin, cout, true, rng);
    if (options.static_init != StaticInit::None) {
      bank = make_param(init_static(options.static_init, graph, k, rng()).template cast<T>());
    }
    alpha = scalar_param<T>(T{0});
    a = scalar_param<T>(T{0.5});
  }
  if (options.enable_gtgc) {
    phi3 = make_param(Tensor<T>::uniform(Shape{}, T{-1}, T{1}, rng));
    b = scalar_param<T>(T{0.5});
  }
}

template <typename T>
Var<T> GraphConv<T>::transform(const Var<T>& x) const {
  return weight(stca ? (*stca)(x) : x);
}

template <typename T>
typename GraphConv<T>::Trace GraphConv<T>::forward(const Var<T>& x) const {
  Trace tr;
  tr.x_hat = transform(x);
  const std::size_t k = options_.groups;
  if (options_.enable_gcgc) {
    const Var<T> pooled = options_.use_tgp ? tgp(x) : tap(x);
    tr.a_channel =
        fuse_topology(dynamic_channel_topology(pooled, phi1, phi2, options_.theta), alpha, bank, k);
    tr.gc = channel_aggregate(tr.x_hat, tr.a_channel);
    tr.out = ops::mul(tr.gc, a);
  }
  if (options_.enable_gtgc) {
    const Var<T> pooled = grouped_channel_pool(x, k, options_.use_cgp);
    tr.a_temporal = dynamic_temporal_topology(pooled, phi3, options_.theta);
    tr.gt = temporal_aggregate(tr.x_hat, tr.a_temporal);
    const Var<T> scaled = ops::mul(tr.gt, b);
    tr.out = options_.enable_gcgc ? ops::add(tr.out, scaled) : scaled;
  }
  return tr;
}

template <typename T>
void GraphConv<T>::collect(Collector<T>& c, const std::string& prefix) const {
  if (stca) stca->collect(c, prefix + ".stca");
  weight.collect(c, prefix + ".weight");
  if (options_.enable_gcgc) {
    phi1.collect(c, prefix + ".phi1");
    phi2.collect(c, prefix + ".phi2");
    if (bank) c.param(prefix + ".static", *bank);
    c.param(prefix + ".alpha", alpha, false);
    c.param(prefix + ".a", a, false);
  }
  if (options_.enable_gtgc) {
    c.param(prefix + ".phi3", phi3);
    c.param(prefix + ".b", b, false);
  }
}

#define DSTSA_INSTANTIATE(T)                                              \
  template Var<T> channel_aggregate(const Var<T>&, const Var<T>&);        \
  template Var<T> temporal_aggregate(const Var<T>&, const Var<T>&);       \
  template class GraphConv<T>;

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::nn
