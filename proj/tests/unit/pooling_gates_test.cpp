#include <gtest/gtest.h>

#include "dstsa/errors.hpp"
#include "dstsa/nn/pooling.hpp"
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

// x of shape (1, C, T, V) from nested [c][t][v] values.
Var<double> ctv(std::size_t c, std::size_t t, std::size_t v, std::vector<double> values) {
  return Var<double>(Tensor<double>(Shape{1, c, t, v}, std::move(values)));
}

void zero_out(ChannelLinear<double>& m) {
  m.weight.mutable_value().fill(0.0);
  if (m.bias) m.bias->mutable_value().fill(0.0);
}

}  // namespace

TEST(AveragePooling, ConstantAndMean) {
  auto x = Var<double>(Tensor<double>(Shape{1, 2, 3, 4}, 1.25));
  const auto t = tap(x);
  const auto v = vap(x);
  for (double e : t.value().values()) EXPECT_DOUBLE_EQ(e, 1.25);
  for (double e : v.value().values()) EXPECT_DOUBLE_EQ(e, 1.25);
  EXPECT_DOUBLE_EQ(tap(ctv(1, 2, 1, {1, 3})).value()[0], 2.0);
}

TEST(AveragePooling, MeansCommute) {
  auto x = random_input({2, 3, 5, 4}, 1);
  const auto lhs = ops::mean(tap(x), {2});
  const auto rhs = ops::mean(vap(x), {2});
  EXPECT_LT(max_abs_diff(lhs.value(), rhs.value()), 1e-15);
}

TEST(Tgp, IdenticalFramesGiveThatFrame) {
  Rng rng(2);
  auto frame = Tensor<double>::uniform(Shape{1, 3, 1, 4}, -1.0, 1.0, rng);
  Tensor<double> x(Shape{1, 3, 5, 4});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t v = 0; v < 4; ++v) x.at({0, c, t, v}) = frame.at({0, c, 0, v});
  const auto out = tgp(Var<double>(x));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t v = 0; v < 4; ++v)
      EXPECT_NEAR(out.value().at({0, c, v}), frame.at({0, c, 0, v}), 1e-15);
}

TEST(Tgp, ScalarSoftmaxExample) {
  EXPECT_NEAR(tgp(ctv(1, 2, 1, {1, 3})).value()[0], 2.76159, 1e-4);
}

TEST(Tgp, ConvexCombinationAndMatchesOracle) {
  auto x = random_input({3, 4, 6, 5}, 3);
  const auto out = tgp(x).value();
  const auto w = tgp_weights(x).value();
  const auto ref = oracle::tgp(x.value());
  EXPECT_LT(max_abs_diff(out, ref.out), 1e-14);
  EXPECT_LT(max_abs_diff(w, ref.weights), 1e-14);
  for (std::size_t n = 0; n < 3; ++n) {
    double total = 0.0;
    for (std::size_t t = 0; t < 6; ++t) total += w.at({n, t});
    EXPECT_NEAR(total, 1.0, 1e-6);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t v = 0; v < 5; ++v) {
        double lo = 1e9, hi = -1e9;
        for (std::size_t t = 0; t < 6; ++t) {
          lo = std::min(lo, x.value().at({n, c, t, v}));
          hi = std::max(hi, x.value().at({n, c, t, v}));
        }
        EXPECT_GE(out.at({n, c, v}), lo - 1e-15);
        EXPECT_LE(out.at({n, c, v}), hi + 1e-15);
      }
  }
}

TEST(Tgp, JointPermutationPermutesOutput) {
  auto x = random_input({1, 3, 4, 5}, 4);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const auto px = oracle::permute_joints(x.value(), perm);
  EXPECT_LT(max_abs_diff(tgp(Var<double>(px)).value(),
                         oracle::permute_joints(tgp(x).value(), perm)),
            1e-14);
  EXPECT_LT(max_abs_diff(vap(Var<double>(px)).value(), vap(x).value()), 1e-15);
}

TEST(Cgp, Examples) {
  // Identical channels.
  Tensor<double> same(Shape{1, 3, 2, 2});
  for (std::size_t c = 0; c < 3; ++c) {
    same.at({0, c, 0, 0}) = 1;
    same.at({0, c, 0, 1}) = -2;
    same.at({0, c, 1, 0}) = 0.5;
    same.at({0, c, 1, 1}) = 4;
  }
  const auto out = cgp(Var<double>(same)).value();
  EXPECT_NEAR(out.at({0, 0, 1}), -2.0, 1e-15);
  EXPECT_NEAR(out.at({0, 1, 1}), 4.0, 1e-15);
  EXPECT_DOUBLE_EQ(cgp(ctv(2, 1, 1, {0, 0})).value()[0], 0.0);
  EXPECT_NEAR(cgp(ctv(2, 1, 1, {1, 3})).value()[0], 2.76159, 1e-4);
}

TEST(Cgp, WeightsSumToOneAndGroupedMatchesOracle) {
  auto x = random_input({2, 8, 3, 4}, 5);
  const auto w = cgp_weights(x).value();
  for (std::size_t n = 0; n < 2; ++n) {
    double total = 0.0;
    for (std::size_t c = 0; c < 8; ++c) total += w.at({n, c});
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
  const auto plain = grouped_channel_pool(x, 1, true).value();
  EXPECT_LT(max_abs_diff(plain.reshaped({2, 3, 4}), cgp(x).value()), 1e-15);
  for (std::size_t k : {1, 2, 4, 8}) {
    for (bool gated : {true, false}) {
      const auto ref = oracle::grouped_cgp(x.value(), k, gated);
      EXPECT_LT(max_abs_diff(grouped_channel_pool(x, k, gated).value(), ref.out), 1e-14);
    }
  }
  EXPECT_THROW(grouped_channel_pool(x, 3, true), ConfigError);
}

TEST(Stca, ReductionClamp) {
  EXPECT_EQ(stca_reduction(64, 4), 4u);
  EXPECT_EQ(stca_reduction(8, 4), 2u);
  EXPECT_EQ(stca_reduction(4, 4), 1u);
  EXPECT_EQ(stca_reduction(24, 4), 4u);
  Rng rng(0);
  EXPECT_THROW(Stca<double>(6, 4, rng), ConfigError);
}

TEST(Stca, ZeroHeadsGiveQuarterScale) {
  Rng rng(6);
  Stca<double> p(8, 2, rng);
  zero_out(p.temporal_head);
  zero_out(p.joint_head);
  auto x = random_input({2, 8, 5, 3}, 7);
  const auto y = p(x).value();
  for (std::size_t i = 0; i < y.numel(); ++i) EXPECT_NEAR(y[i], 0.25 * x.value()[i], 1e-15);
  // Zero maps everywhere: gates are 0.5 whatever the input.
  zero_out(p.reduce);
  auto [gt, gv] = p.gates(random_input({1, 8, 5, 3}, 8, false));
  for (double g : gt.value().values()) EXPECT_DOUBLE_EQ(g, 0.5);
  for (double g : gv.value().values()) EXPECT_DOUBLE_EQ(g, 0.5);
}

TEST(Stca, GateRatioInUnitIntervalAndMatchesOracle) {
  Rng rng(9);
  Stca<double> p(8, 2, rng);
  auto x = random_input({2, 8, 5, 3}, 10);
  const auto y = p(x).value();
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double ratio = y[i] / x.value()[i];
    EXPECT_GT(ratio, 0.0);
    EXPECT_LT(ratio, 1.0);
  }
  EXPECT_LT(max_abs_diff(y, oracle::stca(x.value(), p)), 1e-14);
}

TEST(Stca, GradientCheck) {
  Rng rng(11);
  Stca<double> p(8, 2, rng);
  auto x = random_input({2, 8, 4, 3}, 12, true);
  Collector<double> params;
  p.collect(params, "stca");
  std::vector<verify::NamedInput> inputs{{"x", x}};
  for (auto& prm : params.params) inputs.push_back({prm.name, prm.var});
  auto r = verify::check_gradients([&] { return verify::random_projection(p(x), 1); }, inputs);
  EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
}

TEST(PoolingGradients, OverTenSeeds) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto x = random_input({2, 4, 5, 3}, 100 + seed, true);
    auto r = verify::check_gradients(
        [&] {
          auto y = verify::random_projection(tgp(x), seed);
          y = ops::add(y, verify::random_projection(cgp(x), seed + 1));
          y = ops::add(y, verify::random_projection(grouped_channel_pool(x, 2, true), seed + 2));
          y = ops::add(y, verify::random_projection(tap(x), seed + 3));
          return ops::add(y, verify::random_projection(vap(x), seed + 4));
        },
        {{"x", x}});
    EXPECT_LE(r.max_rel_error, 1e-5) << "seed " << seed << ": " << r.worst;
  }
}
