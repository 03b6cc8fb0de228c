#include "dstsa/nn/topology.hpp"

#include <cmath>

namespace dstsa::nn {

Theta parse_theta(const std::string& name) {
  if (name == "tanh") return Theta::Tanh;
  if (name == "relu") return Theta::Relu;
  if (name == "sigmoid") return Theta::Sigmoid;
  if (name == "softmax") return Theta::Softmax;
  throw ConfigError("unknown theta '" + name + "' (expected tanh, relu, sigmoid or softmax)");
}

std::string theta_name(Theta theta) {
  switch (theta) {
    case Theta::Tanh: return "tanh";
    case Theta::Relu: return "relu";
    case Theta::Sigmoid: return "sigmoid";
    case Theta::Softmax: return "softmax";
  }
  return "tanh";
}

template <typename T>
Var<T> apply_theta(const Var<T>& x, Theta theta) {
  switch (theta) {
    case Theta::Tanh: return ops::tanh(x);
    case Theta::Relu: return ops::relu(x);
    case Theta::Sigmoid: return ops::sigmoid(x);
    case Theta::Softmax: return ops::softmax(x, -1);
  }
  return x;
}

StaticInit parse_static_init(const std::string& name) {
  if (name == "none") return StaticInit::None;
  if (name == "random") return StaticInit::Random;
  if (name == "distance") return StaticInit::Distance;
  if (name == "spatial1") return StaticInit::Spatial1;
  if (name == "spatial2") return StaticInit::Spatial2;
  throw ConfigError("unknown static topology init '" + name +
                    "' (expected none, random, distance, spatial1 or spatial2)");
}

std::string static_init_name(StaticInit init) {
  switch (init) {
    case StaticInit::None: return "none";
    case StaticInit::Random: return "random";
    case StaticInit::Distance: return "distance";
    case StaticInit::Spatial1: return "spatial1";
    case StaticInit::Spatial2: return "spatial2";
  }
  return "random";
}

Tensor<double> normalize_adjacency(const Tensor<double>& a, double eps) {
  if (a.rank() != 2 || a.dim(0) != a.dim(1)) {
    throw DimensionError("normalize_adjacency expects a square matrix, got " + to_string(a.shape()));
  }
  const std::size_t v = a.dim(0);
  std::vector<double> inv_sqrt(v);
  for (std::size_t i = 0; i < v; ++i) {
    double degree = eps;
    for (std::size_t j = 0; j < v; ++j) degree += a[i * v + j];
    inv_sqrt[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
  }
  Tensor<double> out(a.shape());
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = 0; j < v; ++j) out[i * v + j] = inv_sqrt[i] * a[i * v + j] * inv_sqrt[j];
  return out;
}

Tensor<double> init_static(StaticInit strategy, const data::GraphSpec& graph, std::size_t groups,
                           std::uint64_t seed) {
  const std::size_t v = graph.joints;
  if (strategy == StaticInit::None) return Tensor<double>();
  if (groups == 0) throw ConfigError("static topology needs at least one group");
  if ((strategy == StaticInit::Spatial1 || strategy == StaticInit::Spatial2) && groups != 3) {
    throw ConfigError("static init " + static_init_name(strategy) +
                      " defines exactly 3 partitions, but K = " + std::to_string(groups));
  }
  Tensor<double> bank(Shape{groups, v, v});
  auto at = [&](std::size_t k, std::size_t i, std::size_t j) -> double& {
    return bank[(k * v + i) * v + j];
  };
  Rng rng(seed);
  switch (strategy) {
    case StaticInit::Random: {
      const double s = 1.0 / std::sqrt(static_cast<double>(v));
      bank = Tensor<double>::uniform(bank.shape(), -s, s, rng);
      break;
    }
    case StaticInit::Distance: {
      std::uniform_real_distribution<double> jitter(-1e-2, 1e-2);
      for (std::size_t k = 0; k < groups; ++k)
        for (std::size_t i = 0; i < v; ++i)
          for (std::size_t j = 0; j < v; ++j) at(k, i, j) = std::exp(-graph.hops[i][j]) + jitter(rng);
      break;
    }
    case StaticInit::Spatial1: {
      for (std::size_t i = 0; i < v; ++i) at(0, i, i) = 1.0;
      for (auto [child, par] : graph.edges) {
        at(1, child, par) = 1.0;  // inward: child sends to parent
        at(2, par, child) = 1.0;  // outward: parent sends to child
      }
      break;
    }
    case StaticInit::Spatial2: {
      const auto& root_dist = graph.hops[graph.root];
      for (std::size_t j = 0; j < v; ++j) {
        for (std::size_t i = 0; i < v; ++i) {
          if (graph.hops[i][j] > 1) continue;
          std::size_t part = 0;  // same distance to the root as the receiver (incl. self)
          if (root_dist[i] < root_dist[j]) part = 1;       // centripetal sender
          else if (root_dist[i] > root_dist[j]) part = 2;  // centrifugal sender
          at(part, i, j) = 1.0;
        }
        for (std::size_t k = 0; k < 3; ++k) {
          double total = 0.0;
          for (std::size_t i = 0; i < v; ++i) total += at(k, i, j);
          if (total > 0.0)
            for (std::size_t i = 0; i < v; ++i) at(k, i, j) /= total;
        }
      }
      break;
    }
    case StaticInit::None: break;
  }
  return bank;
}

template <typename T>
Var<T> pairwise_topology(const Var<T>& u, const Var<T>& w, Theta theta) {
  if (u.shape() != w.shape() || u.rank() == 0) {
    throw DimensionError("pairwise_topology: " + to_string(u.shape()) + " vs " +
                         to_string(w.shape()));
  }
  return apply_theta(ops::pairwise_difference(u, w), theta);
}

template <typename T>
Var<T> dynamic_channel_topology(const Var<T>& pooled, const ChannelLinear<T>& phi1,
                                const ChannelLinear<T>& phi2, Theta theta) {
  return pairwise_topology(phi1(pooled), phi2(pooled), theta);
}

template <typename T>
Var<T> fuse_topology(const Var<T>& a_c, const Var<T>& alpha, const std::optional<Var<T>>& bank,
                     std::size_t groups) {
  if (a_c.rank() != 4 || a_c.dim(2) != a_c.dim(3)) {
    throw DimensionError("fuse_topology expects (N, C, V, V), got " + to_string(a_c.shape()));
  }
  const std::size_t n = a_c.dim(0), c = a_c.dim(1), v = a_c.dim(2);
  if (groups == 0 || c % groups != 0) {
    throw ConfigError("cannot split " + std::to_string(c) + " channels into " +
                      std::to_string(groups) + " groups");
  }
  Var<T> fused = ops::mul(a_c, alpha);
  if (!bank) return fused;
  if (bank->shape() != Shape{groups, v, v}) {
    throw DimensionError("static bank " + to_string(bank->shape()) + " for " +
                         std::to_string(groups) + " groups of " + std::to_string(v) + " joints");
  }
  fused = ops::reshape(fused, {n, groups, c / groups, v, v});
  fused = ops::add(fused, ops::reshape(*bank, {groups, 1, v, v}));
  return ops::reshape(fused, {n, c, v, v});
}

template <typename T>
Var<T> dynamic_temporal_topology(const Var<T>& pooled, const Var<T>& phi3, Theta theta) {
  const Var<T> z = ops::mul(pooled, phi3);
  return pairwise_topology(z, z, theta);
}

#define DSTSA_INSTANTIATE(T)                                                                 \
  template Var<T> apply_theta(const Var<T>&, Theta);                                         \
  template Var<T> pairwise_topology(const Var<T>&, const Var<T>&, Theta);                    \
  template Var<T> dynamic_channel_topology(const Var<T>&, const ChannelLinear<T>&,           \
                                           const ChannelLinear<T>&, Theta);                  \
  template Var<T> fuse_topology(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&,  \
                                std::size_t);                                                \
  template Var<T> dynamic_temporal_topology(const Var<T>&, const Var<T>&, Theta);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::nn
