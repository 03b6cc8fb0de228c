#include <gtest/gtest.h>

#include <cmath>

#include "dstsa/errors.hpp"
#include "dstsa/nn/topology.hpp"
#include "dstsa/verify/gradcheck.hpp"
#include "dstsa/verify/oracles.hpp"

using namespace dstsa;
using namespace dstsa::nn;
namespace oracle = dstsa::verify::oracle;

namespace {

Var<double> random_input(Shape shape, std::uint64_t seed, bool grad = false) {
  Rng rng(seed);
  return Var<double>(Tensor<double>::uniform(std::move(shape), -1.0, 1.0, rng), grad);
}

}  // namespace

TEST(NormalizeAdjacency, Examples) {
  const auto eye = normalize_adjacency(Tensor<double>(Shape{2, 2}, {1, 0, 0, 1}), 1e-4);
  EXPECT_NEAR(eye.at({0, 0}), 1.0 / (1.0 + 1e-4), 1e-15);
  EXPECT_NEAR(eye.at({1, 1}), 1.0 / (1.0 + 1e-4), 1e-15);
  EXPECT_EQ(eye.at({0, 1}), 0.0);
  const Tensor<double> swap(Shape{2, 2}, {0, 1, 1, 0});
  EXPECT_EQ(normalize_adjacency(swap, 0.0), swap);
  const auto zero = normalize_adjacency(Tensor<double>(Shape{3, 3}), 1e-4);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(StaticInit, Spatial1Partitions) {
  const auto g = data::hand22();
  const auto bank = init_static(StaticInit::Spatial1, g, 3, 0);
  ASSERT_EQ(bank.shape(), (Shape{3, 22, 22}));
  for (std::size_t i = 0; i < 22; ++i)
    for (std::size_t j = 0; j < 22; ++j) {
      EXPECT_EQ(bank.at({0, i, j}), i == j ? 1.0 : 0.0);
      EXPECT_EQ(bank.at({1, i, j}), g.parent[i] == static_cast<long>(j) ? 1.0 : 0.0);
      EXPECT_EQ(bank.at({2, i, j}), g.parent[j] == static_cast<long>(i) ? 1.0 : 0.0);
    }
}

TEST(StaticInit, Spatial2PartitionsByRootDistance) {
  const auto g = data::chain_graph(4);  // 0 - 1 - 2 - 3, root 0
  const auto bank = init_static(StaticInit::Spatial2, g, 3, 0);
  // Receiver 2: self in the root partition, 1 centripetal, 3 centrifugal.
  EXPECT_DOUBLE_EQ(bank.at({0, 2, 2}), 1.0);
  EXPECT_DOUBLE_EQ(bank.at({1, 1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(bank.at({2, 3, 2}), 1.0);
  EXPECT_DOUBLE_EQ(bank.at({1, 3, 2}), 0.0);
  const auto hand = init_static(StaticInit::Spatial2, data::hand22(), 3, 0);
  // Wrist receives from palm and thumb base, both centrifugal: 1/2 each.
  EXPECT_DOUBLE_EQ(hand.at({2, 1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(hand.at({2, 2, 0}), 0.5);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t j = 0; j < 22; ++j) {
      double total = 0.0;
      for (std::size_t i = 0; i < 22; ++i) total += hand.at({k, i, j});
      EXPECT_TRUE(total == 0.0 || std::abs(total - 1.0) < 1e-15);
    }
}

TEST(StaticInit, SpatialNeedsThreeGroups) {
  EXPECT_THROW(init_static(StaticInit::Spatial1, data::hand22(), 8, 0), ConfigError);
  EXPECT_THROW(init_static(StaticInit::Spatial2, data::hand22(), 4, 0), ConfigError);
}

TEST(StaticInit, DistanceAndRandom) {
  const auto g = data::hand22();
  const auto dist = init_static(StaticInit::Distance, g, 4, 1);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 22; ++i) {
      EXPECT_NEAR(dist.at({k, i, i}), 1.0, 1e-2);
      EXPECT_NEAR(dist.at({k, i, 0}), std::exp(-g.hops[i][0]), 1e-2);
    }
  const auto r1 = init_static(StaticInit::Random, g, 8, 5);
  EXPECT_EQ(r1, init_static(StaticInit::Random, g, 8, 5));
  EXPECT_NE(r1, init_static(StaticInit::Random, g, 8, 6));
  const double s = 1.0 / std::sqrt(22.0);
  for (double v : r1.values()) EXPECT_LE(std::abs(v), s);
  EXPECT_TRUE(init_static(StaticInit::None, g, 8, 5).empty());
}

TEST(ChannelTopology, Examples) {
  Rng rng(1);
  ChannelLinear<double> phi(3, 4, true, rng);
  auto pooled = random_input({2, 3, 5}, 2);
  const auto same = dynamic_channel_topology(pooled, phi, phi, Theta::Tanh).value();
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(same.at({n, c, i, i}), 0.0);

  auto u = Var<double>(Tensor<double>(Shape{1, 1, 2}, {1.0, 1.0}));
  auto w = Var<double>(Tensor<double>(Shape{1, 1, 2}, {0.0, 0.0}));
  EXPECT_NEAR(pairwise_topology(u, w, Theta::Tanh).value().at({0, 0, 0, 1}), 0.76159, 1e-5);
}

TEST(ChannelTopology, JointPermutationConjugates) {
  Rng rng(3);
  ChannelLinear<double> phi1(3, 4, true, rng), phi2(3, 4, true, rng);
  auto pooled = random_input({1, 3, 4}, 4);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  const auto a = dynamic_channel_topology(pooled, phi1, phi2, Theta::Tanh).value();
  const auto ap = dynamic_channel_topology(Var<double>(oracle::permute_joints(pooled.value(), perm)),
                                           phi1, phi2, Theta::Tanh)
                      .value();
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j)
        EXPECT_NEAR(ap.at({0, c, perm[i], perm[j]}), a.at({0, c, i, j}), 1e-15);
  for (double v : a.values()) {
    EXPECT_GT(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(FuseTopology, GroupsAndAlpha) {
  auto a_c = random_input({2, 4, 3, 3}, 5);
  auto bank = random_input({2, 3, 3}, 6);
  auto zero = Var<double>(Tensor<double>::scalar(0.0));
  const auto only_static = fuse_topology(a_c, zero, std::optional(bank), 2).value();
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
          EXPECT_EQ(only_static.at({n, c, i, j}), bank.value().at({c / 2, i, j}));

  auto alpha = Var<double>(Tensor<double>::scalar(0.3));
  auto empty_bank = Var<double>(Tensor<double>(Shape{2, 3, 3}));
  const auto dyn = fuse_topology(a_c, alpha, std::optional(empty_bank), 2).value();
  for (std::size_t i = 0; i < dyn.numel(); ++i) EXPECT_DOUBLE_EQ(dyn[i], 0.3 * a_c.value()[i]);
  // Linear in alpha with a zero bank.
  auto alpha2 = Var<double>(Tensor<double>::scalar(0.6));
  const auto dyn2 = fuse_topology(a_c, alpha2, std::optional(empty_bank), 2).value();
  for (std::size_t i = 0; i < dyn.numel(); ++i) EXPECT_NEAR(dyn2[i], 2.0 * dyn[i], 1e-15);

  auto bank1 = random_input({1, 3, 3}, 7);
  const auto k1 = fuse_topology(a_c, alpha, std::optional(bank1), 1).value();
  const auto direct = ops::add(ops::mul(a_c, alpha), bank1).value();
  EXPECT_EQ(k1, direct);
  EXPECT_THROW(fuse_topology(a_c, alpha, std::optional(bank), 3), ConfigError);
}

TEST(TemporalTopology, Properties) {
  auto x = random_input({1, 4, 6, 5}, 8);
  // Frames 1 and 4 identical.
  Tensor<double> xv = x.value();
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t v = 0; v < 5; ++v) xv.at({0, c, 4, v}) = xv.at({0, c, 1, v});
  auto phi3 = Var<double>(Tensor<double>::scalar(1.7));
  const auto a_t = dynamic_temporal_topology(grouped_channel_pool(Var<double>(xv), 2, true), phi3,
                                             Theta::Tanh)
                       .value();
  ASSERT_EQ(a_t.shape(), (Shape{1, 2, 6, 5, 5}));
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(a_t.at({0, k, 1, i, j}), a_t.at({0, k, 4, i, j}));
        for (std::size_t t = 0; t < 6; ++t) {
          EXPECT_EQ(a_t.at({0, k, t, i, j}), -a_t.at({0, k, t, j, i}));
          EXPECT_GT(a_t.at({0, k, t, i, j}), -1.0);
          EXPECT_LT(a_t.at({0, k, t, i, j}), 1.0);
        }
      }
}

TEST(Theta, SoftmaxRowsSumToOne) {
  auto x = random_input({2, 3, 4, 4}, 9);
  const auto y = apply_theta(x, Theta::Softmax).value();
  for (std::size_t r = 0; r < y.numel() / 4; ++r) {
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) total += y[r * 4 + j];
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_EQ(parse_theta(theta_name(Theta::Relu)), Theta::Relu);
  EXPECT_THROW(parse_theta("gelu"), ConfigError);
}

TEST(TopologyGradients, OverTenSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    ChannelLinear<double> phi1(3, 4, true, rng), phi2(3, 4, true, rng);
    auto pooled = random_input({2, 3, 4}, 200 + seed, true);
    auto alpha = Var<double>(Tensor<double>::scalar(0.4), true);
    auto bank = random_input({2, 4, 4}, 300 + seed, true);
    auto phi3 = Var<double>(Tensor<double>::scalar(0.8), true);
    auto m = random_input({2, 2, 3, 4}, 400 + seed, true);
    for (Theta th : {Theta::Tanh, Theta::Sigmoid, Theta::Softmax}) {
      auto r = verify::check_gradients(
          [&] {
            auto a = fuse_topology(dynamic_channel_topology(pooled, phi1, phi2, th), alpha,
                                   std::optional(bank), 2);
            auto t = dynamic_temporal_topology(m, phi3, th);
            return ops::add(verify::random_projection(a, seed),
                            verify::random_projection(t, seed + 1));
          },
          {{"pooled", pooled}, {"alpha", alpha}, {"bank", bank}, {"phi3", phi3}, {"m", m},
           {"phi1.w", phi1.weight}, {"phi2.b", *phi2.bias}});
      EXPECT_LE(r.max_rel_error, 1e-5) << theta_name(th) << " seed " << seed << ": " << r.worst;
    }
  }
}
