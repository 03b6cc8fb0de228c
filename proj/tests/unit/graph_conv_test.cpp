#include <gtest/gtest.h>

#include "dstsa/errors.hpp"
#include "dstsa/nn/graph_conv.hpp"
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

// Non-trivial values for the scalars that initialize to 0 / 0.5.
void perturb_scalars(GraphConv<double>& layer, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (layer.options().enable_gcgc) {
    layer.alpha.mutable_value()[0] = u(rng);
    layer.a.mutable_value()[0] = u(rng);
  }
  if (layer.options().enable_gtgc) layer.b.mutable_value()[0] = u(rng);
}

std::size_t count_params(const GraphConv<double>& layer) {
  Collector<double> c;
  layer.collect(c, "gc");
  std::size_t total = 0;
  for (const auto& p : c.params) total += p.var.value().numel();
  return total;
}

}  // namespace

TEST(Aggregation, PermutationGraph) {
  auto x = Var<double>(Tensor<double>(Shape{1, 1, 1, 2}, {1, 2}));
  auto a = Var<double>(Tensor<double>(Shape{1, 1, 2, 2}, {0, 1, 1, 0}));
  const auto y = channel_aggregate(x, a).value();
  EXPECT_EQ(y, Tensor<double>(Shape{1, 1, 1, 2}, {2, 1}));
}

TEST(Transform, IdentityAndZeroWeights) {
  const auto g = data::chain_graph(4);
  Rng rng(1);
  GraphConvOptions opt;
  opt.groups = 1;
  opt.use_stca = false;
  GraphConv<double> layer(3, 3, g, opt, rng);
  auto& w = layer.weight.weight.mutable_value();
  w.fill(0.0);
  for (std::size_t i = 0; i < 3; ++i) w.at({i, i}) = 1.0;
  auto x = random_input({2, 3, 5, 4}, 2);
  EXPECT_EQ(layer.transform(x).value(), x.value());
  w.fill(0.0);
  const auto zero = layer.transform(x);
  for (double v : zero.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(GcgcReduction, MatchesBaselineSpatialConv) {
  const auto g = data::hand22();
  Tensor<double> adj(Shape{22, 22});
  for (std::size_t i = 0; i < 22; ++i) adj.at({i, i}) = 1.0;
  for (auto [c, p] : g.edges) adj.at({c, p}) = adj.at({p, c}) = 1.0;
  const Tensor<double> norm = normalize_adjacency(adj);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    GraphConvOptions opt;
    opt.groups = 1;
    opt.use_stca = false;
    GraphConv<double> layer(4, 6, g, opt, rng);
    layer.bank->mutable_value() = norm.reshaped({1, 22, 22});
    auto x = random_input({2, 4, 5, 22}, 10 + seed);
    const auto gc = layer.forward(x).gc.value();
    const auto ref = baseline_sgcn(x.value(), {norm}, {layer.weight.weight.value()});
    EXPECT_LE(max_abs_diff(gc, ref), 1e-12);
  }
}

TEST(BaselineSgcn, IdentityAndLinearity) {
  auto x = random_input({1, 2, 3, 4}, 3).value();
  Tensor<double> eye_v(Shape{4, 4}), eye_c(Shape{2, 2});
  for (std::size_t i = 0; i < 4; ++i) eye_v.at({i, i}) = 1.0;
  for (std::size_t i = 0; i < 2; ++i) eye_c.at({i, i}) = 1.0;
  EXPECT_EQ(baseline_sgcn(x, {eye_v}, {eye_c}), x);
  Rng rng(4);
  auto p1 = Tensor<double>::uniform({4, 4}, 0.0, 1.0, rng);
  auto p2 = Tensor<double>::uniform({4, 4}, 0.0, 1.0, rng);
  auto w1 = Tensor<double>::uniform({3, 2}, -1.0, 1.0, rng);
  auto w2 = Tensor<double>::uniform({3, 2}, -1.0, 1.0, rng);
  const auto both = baseline_sgcn(x, {p1, p2}, {w1, w2});
  const auto a = baseline_sgcn(x, {p1}, {w1});
  const auto b = baseline_sgcn(x, {p2}, {w2});
  for (std::size_t i = 0; i < both.numel(); ++i) EXPECT_NEAR(both[i], a[i] + b[i], 1e-14);
}

TEST(GraphConv, MatchesLoopOracleAcrossGroupsAndThetas) {
  const auto g = data::chain_graph(5);
  for (std::size_t k : {1, 2, 4, 8}) {
    for (Theta th : {Theta::Tanh, Theta::Relu, Theta::Sigmoid, Theta::Softmax}) {
      Rng rng(k * 10 + static_cast<std::size_t>(th));
      GraphConvOptions opt;
      opt.groups = k;
      opt.theta = th;
      GraphConv<double> layer(8, 16, g, opt, rng);
      perturb_scalars(layer, k);
      auto x = random_input({2, 8, 4, 5}, 50 + k);
      const auto tr = layer.forward(x);
      const auto ref = oracle::graph_conv(x.value(), layer);
      EXPECT_LE(max_abs_diff(tr.a_channel.value(), ref.a_channel), 1e-12);
      EXPECT_LE(max_abs_diff(tr.a_temporal.value(), ref.a_temporal), 1e-12);
      EXPECT_LE(max_abs_diff(tr.out.value(), ref.out), 1e-12) << "K=" << k << " " << theta_name(th);
    }
  }
}

TEST(GraphConv, AblationFlagsMatchOracle) {
  const auto g = data::chain_graph(4);
  for (int variant = 0; variant < 4; ++variant) {
    GraphConvOptions opt;
    opt.groups = 2;
    opt.use_tgp = variant != 0;
    opt.use_cgp = variant != 1;
    opt.enable_gcgc = variant != 2;
    opt.enable_gtgc = variant != 3;
    opt.use_stca = variant % 2 == 0;
    opt.static_init = variant == 1 ? StaticInit::None : StaticInit::Distance;
    Rng rng(variant);
    GraphConv<double> layer(4, 6, g, opt, rng);
    perturb_scalars(layer, variant);
    auto x = random_input({2, 4, 3, 4}, 60 + variant);
    EXPECT_LE(max_abs_diff(layer(x).value(), oracle::graph_conv(x.value(), layer).out), 1e-12)
        << "variant " << variant;
  }
}

TEST(GraphConv, KEqualsTwoIsTwoIndependentHalves) {
  const auto g = data::chain_graph(5);
  Rng rng(7);
  GraphConvOptions opt;
  opt.groups = 2;
  GraphConv<double> layer(8, 8, g, opt, rng);
  perturb_scalars(layer, 7);
  auto x = random_input({1, 8, 4, 5}, 8);
  const auto tr = layer.forward(x);
  // Each half of the channels, aggregated with only its own group's graphs.
  for (std::size_t half = 0; half < 2; ++half) {
    auto xs = ops::slice(tr.x_hat, 1, 4 * half, 4 * half + 4);
    auto ac = ops::slice(tr.a_channel, 1, 4 * half, 4 * half + 4);
    auto at = ops::slice(tr.a_temporal, 1, half, half + 1);
    auto part = ops::add(ops::mul(channel_aggregate(xs, ac), layer.a),
                         ops::mul(temporal_aggregate(xs, at), layer.b));
    EXPECT_LE(max_abs_diff(part.value(), ops::slice(tr.out, 1, 4 * half, 4 * half + 4).value()),
              1e-12);
  }
}

TEST(GraphConv, LinearInTransformedFeatures) {
  const auto g = data::chain_graph(4);
  Rng rng(9);
  GraphConv<double> layer(4, 4, g, GraphConvOptions{.groups = 2}, rng);
  perturb_scalars(layer, 9);
  auto x = random_input({1, 4, 3, 4}, 10);
  const auto tr = layer.forward(x);
  auto doubled = ops::scale(tr.x_hat, 2.0);
  auto gc2 = channel_aggregate(doubled, tr.a_channel).value();
  auto gt2 = temporal_aggregate(doubled, tr.a_temporal).value();
  for (std::size_t i = 0; i < gc2.numel(); ++i) {
    EXPECT_NEAR(gc2[i], 2.0 * tr.gc.value()[i], 1e-14);
    EXPECT_NEAR(gt2[i], 2.0 * tr.gt.value()[i], 1e-14);
  }
}

TEST(GraphConv, DynamicOnlyGcgcIsJointEquivariant) {
  const auto g = data::chain_graph(6);
  GraphConvOptions opt;
  opt.groups = 2;
  opt.static_init = StaticInit::None;
  opt.enable_gtgc = false;
  Rng rng(11);
  GraphConv<double> layer(4, 4, g, opt, rng);
  perturb_scalars(layer, 11);
  auto x = random_input({1, 4, 6, 6}, 12);
  const std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
  const auto y = layer(x).value();
  const auto yp = layer(Var<double>(oracle::permute_joints(x.value(), perm))).value();
  EXPECT_LE(max_abs_diff(yp, oracle::permute_joints(y, perm)), 1e-10);
}

TEST(GraphConv, GtgcIsFrameEquivariant) {
  const auto g = data::chain_graph(6);
  GraphConvOptions opt;
  opt.groups = 2;
  opt.enable_gcgc = false;
  Rng rng(13);
  GraphConv<double> layer(4, 4, g, opt, rng);
  perturb_scalars(layer, 13);
  auto x = random_input({1, 4, 6, 6}, 14);
  const std::vector<std::size_t> perm{3, 5, 1, 0, 2, 4};
  const auto y = layer(x).value();
  const auto yp = layer(Var<double>(oracle::permute_frames(x.value(), perm))).value();
  EXPECT_LE(max_abs_diff(yp, oracle::permute_frames(y, perm)), 1e-10);
}

TEST(GraphConv, ZeroTemporalLiftGivesZeroGt) {
  const auto g = data::chain_graph(4);
  Rng rng(15);
  GraphConv<double> layer(4, 4, g, GraphConvOptions{.groups = 2}, rng);
  layer.phi3.mutable_value()[0] = 0.0;
  auto x = random_input({1, 4, 3, 4}, 16);
  const auto gt = layer.forward(x).gt;
  for (double v : gt.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(GraphConv, FusionScalars) {
  const auto g = data::chain_graph(4);
  Rng rng(17);
  GraphConv<double> layer(4, 4, g, GraphConvOptions{.groups = 2}, rng);
  auto x = random_input({1, 4, 3, 4}, 18);
  auto set = [&](double a, double b) {
    layer.a.mutable_value()[0] = a;
    layer.b.mutable_value()[0] = b;
    return layer.forward(x);
  };
  auto tr = set(1.0, 0.0);
  EXPECT_EQ(tr.out.value(), tr.gc.value());
  tr = set(0.0, 1.0);
  EXPECT_EQ(tr.out.value(), tr.gt.value());
}

TEST(GraphConv, ParameterCountDependsOnKOnlyThroughStaticBank) {
  const auto g = data::hand22();
  Rng rng(19);
  GraphConv<double> k4(16, 32, g, GraphConvOptions{.groups = 4}, rng);
  GraphConv<double> k8(16, 32, g, GraphConvOptions{.groups = 8}, rng);
  EXPECT_EQ(count_params(k8) - count_params(k4), 4u * 22u * 22u);
}

TEST(GraphConv, RejectsIndivisibleChannels) {
  const auto g = data::chain_graph(4);
  Rng rng(20);
  EXPECT_THROW(GraphConv<double>(4, 6, g, GraphConvOptions{.groups = 4}, rng), ConfigError);
  EXPECT_THROW(GraphConv<double>(6, 8, g, GraphConvOptions{.groups = 4}, rng), ConfigError);
}

TEST(GraphConv, GradientCheckAllParameters) {
  const auto g = data::chain_graph(5);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    GraphConv<double> layer(8, 8, g, GraphConvOptions{.groups = 4}, rng);
    perturb_scalars(layer, seed);
    auto x = random_input({2, 8, 4, 5}, 30 + seed, true);
    Collector<double> c;
    layer.collect(c, "gc");
    std::vector<verify::NamedInput> inputs{{"x", x}};
    for (auto& p : c.params) inputs.push_back({p.name, p.var});
    auto r = verify::check_gradients([&] { return verify::random_projection(layer(x), seed); },
                                     inputs);
    EXPECT_LE(r.max_rel_error, 1e-5) << r.worst;
  }
}
