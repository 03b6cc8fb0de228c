#include "dstsa/verify/checks.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "dstsa/data/synthetic.hpp"
#include "dstsa/errors.hpp"
#include "dstsa/nn/checkpoint.hpp"
#include "dstsa/nn/network.hpp"
#include "dstsa/train/optim.hpp"
#include "dstsa/train/trainer.hpp"
#include "dstsa/verify/gradcheck.hpp"
#include "dstsa/verify/oracles.hpp"

namespace dstsa::verify {

namespace {

using nn::GraphConv;
using nn::GraphConvOptions;
using nn::Theta;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Var<double> leaf(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  return Var<double>(Tensor<double>::uniform(std::move(shape), lo, hi, rng), true);
}

Var<double> constant(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  return Var<double>(Tensor<double>::uniform(std::move(shape), -1.0, 1.0, rng));
}

void perturb_scalars(GraphConv<double>& layer, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (layer.options().enable_gcgc) {
    layer.alpha.mutable_value()[0] = u(rng);
    layer.a.mutable_value()[0] = u(rng);
  }
  if (layer.options().enable_gtgc) layer.b.mutable_value()[0] = u(rng);
}

template <typename Layer>
std::vector<NamedInput> with_params(const Layer& layer, std::vector<NamedInput> inputs) {
  nn::Collector<double> c;
  layer.collect(c, "layer");
  for (auto& p : c.params) inputs.push_back({p.name, p.var});
  return inputs;
}

constexpr double kOpTolerance = 1e-5;
constexpr double kModelTolerance = 1e-4;
constexpr std::size_t kModelEntries = 0;  // every entry of every tensor

struct GradCase {
  std::string name;
  std::function<GradCheckResult()> run;
  // Composites of many ops (a whole block) accumulate central-difference
  // roundoff near 1e-5 and are held to the end-to-end bound instead.
  double tolerance = kOpTolerance;
};

GradCheckResult project(const std::function<Var<double>()>& f, std::vector<NamedInput> inputs,
                        std::uint64_t seed, std::size_t max_entries = 0) {
  GradCheckOptions opt;
  opt.max_entries = max_entries;
  opt.seed = seed;
  // Projecting y - y(x0) instead of y keeps the probed loss near zero, so the
  // final summation adds no rounding error proportional to |loss|.
  Var<double> y0;
  {
    NoGradGuard guard;
    y0 = Var<double>(f().value());
  }
  return check_gradients([&] { return random_projection(ops::sub(f(), y0), seed); },
                         std::move(inputs), opt);
}

GradCase unary_case(const std::string& name, ops::Unary kind, double lo, double hi) {
  return {name, [=] {
            auto x = leaf({2, 3, 5}, 11, lo, hi);
            return project([&] { return ops::unary(x, kind); }, {{"x", x}}, 12);
          }};
}

GradCase graph_conv_case() {
  return {"graph_conv", [] {
            Rng rng(21);
            GraphConv<double> layer(8, 8, data::chain_graph(5), GraphConvOptions{.groups = 4},
                                    rng);
            perturb_scalars(layer, 21);
            auto x = leaf({2, 8, 4, 5}, 22);
            return project([&] { return layer(x); }, with_params(layer, {{"x", x}}), 23);
          }};
}

std::vector<GradCase> op_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"add", [] {
                     auto a = leaf({2, 3, 4}, 1), b = leaf({3, 4}, 2);
                     return project([&] { return ops::add(a, b); }, {{"a", a}, {"b", b}}, 3);
                   }});
  cases.push_back({"sub", [] {
                     auto a = leaf({2, 3, 4}, 4), b = leaf({2, 1, 4}, 5);
                     return project([&] { return ops::sub(a, b); }, {{"a", a}, {"b", b}}, 6);
                   }});
  cases.push_back({"mul", [] {
                     auto a = leaf({2, 3, 4}, 7), b = leaf({1, 3, 1}, 8);
                     return project([&] { return ops::mul(a, b); }, {{"a", a}, {"b", b}}, 9);
                   }});
  cases.push_back({"scale", [] {
                     auto x = leaf({3, 4}, 10);
                     return project([&] { return ops::scale(x, -1.7); }, {{"x", x}}, 11);
                   }});
  cases.push_back(unary_case("tanh", ops::Unary::Tanh, -2.0, 2.0));
  cases.push_back(unary_case("sigmoid", ops::Unary::Sigmoid, -3.0, 3.0));
  cases.push_back(unary_case("relu", ops::Unary::Relu, -1.0, 1.0));
  cases.push_back(unary_case("hardswish", ops::Unary::Hardswish, -4.0, 4.0));
  cases.push_back(unary_case("exp", ops::Unary::Exp, -1.0, 1.0));
  cases.push_back({"pairwise_difference", [] {
                     auto u = leaf({2, 3, 5}, 13), w = leaf({2, 3, 5}, 14);
                     return project([&] { return ops::pairwise_difference(u, w); },
                                    {{"u", u}, {"w", w}}, 15);
                   }});
  cases.push_back({"softmax", [] {
                     auto x = leaf({2, 4, 3}, 16, -2.0, 2.0);
                     return project(
                         [&] { return ops::add(ops::softmax(x, 1), ops::softmax(x, -1)); },
                         {{"x", x}}, 17);
                   }});
  cases.push_back({"sum_mean", [] {
                     auto x = leaf({2, 3, 4}, 18);
                     return project(
                         [&] {
                           return ops::add(ops::sum(x, {1}, true),
                                           ops::mean(x, {0, 2}, true));
                         },
                         {{"x", x}}, 19);
                   }});
  cases.push_back({"reshape_permute", [] {
                     auto x = leaf({2, 3, 4}, 20);
                     return project(
                         [&] { return ops::permute(ops::reshape(x, {4, 3, 2}), {2, 0, 1}); },
                         {{"x", x}}, 21);
                   }});
  cases.push_back({"slice_concat", [] {
                     auto a = leaf({2, 4, 3}, 22), b = leaf({2, 2, 3}, 23);
                     return project(
                         [&] { return ops::concat<double>({ops::slice(a, 1, 1, 3), b}, 1); },
                         {{"a", a}, {"b", b}}, 24);
                   }});
  cases.push_back({"matmul", [] {
                     auto a = leaf({2, 3, 4}, 25), b = leaf({4, 5}, 26), v = leaf({4}, 27);
                     return project(
                         [&] {
                           return ops::add(ops::matmul(a, b),
                                           ops::reshape(ops::matmul(a, v), {2, 3, 1}));
                         },
                         {{"a", a}, {"b", b}, {"v", v}}, 28);
                   }});
  cases.push_back({"channel_map", [] {
                     auto x = leaf({2, 3, 4, 5}, 29), w = leaf({6, 3}, 30), b = leaf({6}, 31);
                     return project([&] { return ops::channel_map(x, w, b); },
                                    {{"x", x}, {"w", w}, {"b", b}}, 32);
                   }});
  cases.push_back({"conv_temporal", [] {
                     auto x = leaf({2, 3, 9, 4}, 33), w = leaf({4, 3, 3}, 34),
                          b = leaf({4}, 35);
                     const ops::TemporalConvSpec spec{.stride = 2, .dilation = 2, .padding = 2};
                     return project([&] { return ops::conv_temporal(x, w, b, spec); },
                                    {{"x", x}, {"w", w}, {"b", b}}, 36);
                   }});
  cases.push_back({"max_pool_temporal", [] {
                     auto x = leaf({2, 3, 7, 4}, 37);
                     return project([&] { return ops::max_pool_temporal(x, 3, 2, 1); },
                                    {{"x", x}}, 38);
                   }});
  cases.push_back({"subsample_frames", [] {
                     auto x = leaf({2, 3, 7, 4}, 39);
                     return project([&] { return ops::subsample_frames(x, 2); }, {{"x", x}}, 40);
                   }});
  cases.push_back({"batch_norm", [] {
                     auto x = leaf({3, 4, 5, 2}, 41), g = leaf({4}, 42, 0.5, 1.5),
                          b = leaf({4}, 43);
                     ops::BatchNormState<double> train_state{Tensor<double>(Shape{4}),
                                                             Tensor<double>(Shape{4}, 1.0)};
                     Rng rng(44);
                     ops::BatchNormState<double> eval_state{
                         Tensor<double>::uniform({4}, -0.5, 0.5, rng),
                         Tensor<double>::uniform({4}, 0.5, 2.0, rng)};
                     return project(
                         [&] {
                           return ops::add(ops::batch_norm(x, g, b, train_state, true),
                                           ops::batch_norm(x, g, b, eval_state, false));
                         },
                         {{"x", x}, {"gamma", g}, {"beta", b}}, 45);
                   }});
  cases.push_back({"cross_entropy", [] {
                     auto logits = leaf({4, 5}, 46, -2.0, 2.0);
                     const std::vector<int> labels{0, 3, 1, 4};
                     return project([&] { return ops::cross_entropy(logits, labels); },
                                    {{"logits", logits}}, 47);
                   }});
  cases.push_back({"pooling", [] {
                     auto x = leaf({2, 4, 5, 3}, 48);
                     return project(
                         [&] {
                           auto m = ops::add(nn::tgp(x), nn::tap(x));
                           auto g = nn::grouped_channel_pool(x, 2, true);
                           return ops::concat<double>(
                               {ops::reshape(m, {2, 12}), ops::reshape(nn::cgp(x), {2, 15}),
                                ops::reshape(nn::vap(x), {2, 20}), ops::reshape(g, {2, 30})},
                               1);
                         },
                         {{"x", x}}, 49);
                   }});
  cases.push_back({"stca", [] {
                     Rng rng(50);
                     nn::Stca<double> stca(8, 4, rng);
                     auto x = leaf({2, 8, 4, 5}, 51);
                     return project([&] { return stca(x); }, with_params(stca, {{"x", x}}), 52);
                   }});
  cases.push_back({"theta", [] {
                     auto x = leaf({2, 3, 4, 4}, 53, -2.0, 2.0);
                     return project(
                         [&] {
                           std::vector<Var<double>> parts;
                           for (Theta th : {Theta::Tanh, Theta::Relu, Theta::Sigmoid,
                                            Theta::Softmax}) {
                             parts.push_back(nn::apply_theta(x, th));
                           }
                           return ops::concat(parts, 1);
                         },
                         {{"x", x}}, 54);
                   }});
  cases.push_back({"channel_topology", [] {
                     Rng rng(55);
                     nn::ChannelLinear<double> phi1(4, 6, true, rng), phi2(4, 6, true, rng);
                     auto pooled = leaf({2, 4, 5}, 56);
                     auto alpha = leaf({}, 57);
                     auto bank = leaf({2, 5, 5}, 58);
                     std::vector<NamedInput> in{{"pooled", pooled}, {"alpha", alpha},
                                                {"bank", bank}};
                     in = with_params(phi1, std::move(in));
                     nn::Collector<double> c2;
                     phi2.collect(c2, "phi2");
                     for (auto& p : c2.params) in.push_back({p.name, p.var});
                     return project(
                         [&] {
                           auto a_c = nn::dynamic_channel_topology(pooled, phi1, phi2,
                                                                   Theta::Tanh);
                           return nn::fuse_topology(a_c, alpha,
                                                    std::optional<Var<double>>(bank), 2);
                         },
                         std::move(in), 59);
                   }});
  cases.push_back({"temporal_topology", [] {
                     auto pooled = leaf({2, 2, 3, 5}, 60);
                     auto phi3 = leaf({}, 61);
                     return project(
                         [&] { return nn::dynamic_temporal_topology(pooled, phi3, Theta::Tanh); },
                         {{"pooled", pooled}, {"phi3", phi3}}, 62);
                   }});
  cases.push_back({"aggregation", [] {
                     auto x = leaf({2, 4, 3, 5}, 63), a_c = leaf({2, 4, 5, 5}, 64),
                          a_t = leaf({2, 2, 3, 5, 5}, 65);
                     return project(
                         [&] {
                           return ops::add(nn::channel_aggregate(x, a_c),
                                           nn::temporal_aggregate(x, a_t));
                         },
                         {{"x", x}, {"a_channel", a_c}, {"a_temporal", a_t}}, 66);
                   }});
  cases.push_back(graph_conv_case());
  cases.push_back({"mstcn", [] {
                     Rng rng(67);
                     nn::MsTcnOptions opt;
                     opt.stride = 2;
                     nn::MsTcn<double> tcn(12, 12, opt, rng);
                     auto x = leaf({2, 12, 7, 3}, 68);
                     return project([&] { return tcn(x); }, with_params(tcn, {{"x", x}}), 69);
                   }});
  cases.push_back({"block", [] {
                     nn::ModelConfig cfg;
                     cfg.graph = "chain5";
                     cfg.base_channels = 8;
                     cfg.gc.groups = 4;
                     Rng rng(70);
                     nn::Block<double> block({8, 16, 2}, data::chain_graph(5), cfg, rng);
                     perturb_scalars(block.gc, 70);
                     auto x = leaf({2, 8, 5, 5}, 71);
                     nn::Collector<double> c;
                     block.collect(c, "block");
                     std::vector<NamedInput> in{{"x", x}};
                     for (auto& p : c.params) in.push_back({p.name, p.var});
                     return project([&] { return block.forward(x, true); }, std::move(in), 72);
                   },
                   kModelTolerance});
  return cases;
}

nn::ModelConfig micro_config() {
  nn::ModelConfig cfg;
  cfg.graph = "chain5";
  cfg.num_classes = 3;
  cfg.input_frames = 8;
  cfg.base_channels = 8;
  cfg.stage_depths = {1, 1, 1};
  return cfg;
}

GradCheckResult micro_model_check(std::size_t max_entries) {
  nn::Model<double> model(micro_config(), 7);
  for (auto& b : model.blocks) perturb_scalars(b.gc, 7);
  nn::Collector<double> c;
  model.collect(c);
  auto x = leaf({2, 3, 8, 5}, 8);
  std::vector<NamedInput> in{{"x", x}};
  for (auto& p : c.params) in.push_back({p.name, p.var});
  return project([&] { return model(x, true); }, std::move(in), 9, max_entries);
}

}  // namespace

CheckOutcome gradient_integrity() {
  double worst = 0.0, composite = 0.0;
  std::string worst_name;
  std::size_t probed = 0;
  const auto cases = op_cases();
  for (const auto& c : cases) {
    const auto r = c.run();
    probed += r.probed;
    if (r.max_rel_error > c.tolerance) {
      return {false, "gradient check failed for " + c.name + ": rel " + fmt(r.max_rel_error) +
                         " > " + fmt(c.tolerance) + " at " + r.worst};
    }
    if (c.tolerance != kOpTolerance) {
      composite = std::max(composite, r.max_rel_error);
    } else if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = c.name;
    }
  }
  const auto m = micro_model_check(kModelEntries);
  std::string detail = std::to_string(cases.size()) + " op/layer cases (" +
                       std::to_string(probed) + " entries) max rel " + fmt(worst) + " (" +
                       worst_name + ") <= " + fmt(kOpTolerance) +
                       "; block max rel " + fmt(composite) + " <= " + fmt(kModelTolerance) +
                       "; micro-model max rel " +
                       fmt(m.max_rel_error) + " over " + std::to_string(m.probed) +
                       " entries <= " + fmt(kModelTolerance);
  if (m.max_rel_error > kModelTolerance) {
    return {false, "gradient check failed for micro-model: " + detail + " at " + m.worst};
  }
  return {true, detail};
}

CheckOutcome reduction_oracle() {
  const auto g = data::hand22();
  const std::size_t v = g.joints;
  Tensor<double> adj(Shape{v, v});
  for (std::size_t i = 0; i < v; ++i) adj.at({i, i}) = 1.0;
  for (auto [c, p] : g.edges) adj.at({c, p}) = adj.at({p, c}) = 1.0;
  const Tensor<double> norm = nn::normalize_adjacency(adj);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(seed, 0x5eed));
    std::uniform_int_distribution<std::size_t> width(1, 8), frames(1, 6), batch(1, 3);
    const std::size_t cin = width(rng), cout = width(rng);
    GraphConvOptions opt;
    opt.groups = 1;
    opt.use_stca = false;
    GraphConv<double> layer(cin, cout, g, opt, rng);
    layer.alpha.mutable_value()[0] = 0.0;
    layer.bank->mutable_value() = norm.reshaped({1, v, v});
    auto x = constant({batch(rng), cin, frames(rng), v}, derive_seed(seed, 1));
    const auto gc = layer.forward(x).gc.value();
    const auto ref = nn::baseline_sgcn(x.value(), {norm}, {layer.weight.weight.value()});
    const double d = max_abs_diff(gc, ref);
    if (d > 1e-12) {
      return {false, "instance " + std::to_string(seed) + ": max |diff| " + fmt(d) + " > 1e-12"};
    }
    worst = std::max(worst, d);
  }
  return {true, "20 instances, max |diff| " + fmt(worst) + " <= 1e-12"};
}

CheckOutcome grouping_oracle() {
  const auto g = data::chain_graph(5);
  double worst = 0.0;
  for (std::size_t k : {2, 4, 8}) {
    for (Theta th : {Theta::Tanh, Theta::Relu, Theta::Sigmoid, Theta::Softmax}) {
      Rng rng(derive_seed(k, static_cast<std::uint64_t>(th)));
      GraphConvOptions opt;
      opt.groups = k;
      opt.theta = th;
      GraphConv<double> layer(8, 16, g, opt, rng);
      perturb_scalars(layer, k);
      auto x = constant({2, 8, 4, 5}, 100 + k);
      const auto tr = layer.forward(x);
      const auto ref = oracle::graph_conv(x.value(), layer);
      const std::string where = "K=" + std::to_string(k) + " theta=" + nn::theta_name(th);
      double d = max_abs_diff(tr.out.value(), ref.out);
      // Each group evaluated alone on its channel slice with only its own graphs.
      const std::size_t width = 16 / k;
      for (std::size_t grp = 0; grp < k; ++grp) {
        const std::size_t lo = grp * width, hi = lo + width;
        auto xs = ops::slice(tr.x_hat, 1, lo, hi);
        auto part = ops::add(
            ops::mul(nn::channel_aggregate(xs, ops::slice(tr.a_channel, 1, lo, hi)), layer.a),
            ops::mul(nn::temporal_aggregate(xs, ops::slice(tr.a_temporal, 1, grp, grp + 1)),
                     layer.b));
        d = std::max(d, max_abs_diff(part.value(), ops::slice(tr.out, 1, lo, hi).value()));
      }
      if (d > 1e-12) return {false, where + ": max |diff| " + fmt(d) + " > 1e-12"};
      worst = std::max(worst, d);
    }
  }
  return {true, "K in {2,4,8} x 4 theta, max |diff| " + fmt(worst) + " <= 1e-12"};
}

CheckOutcome permutation_equivariance() {
  const auto g = data::chain_graph(6);
  double worst_joint = 0.0, worst_frame = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(derive_seed(seed, 0xe9));
    std::vector<std::size_t> perm{0, 1, 2, 3, 4, 5};
    std::shuffle(perm.begin(), perm.end(), rng);

    GraphConvOptions joint_opt;
    joint_opt.groups = 2;
    joint_opt.static_init = nn::StaticInit::None;
    joint_opt.enable_gtgc = false;
    GraphConv<double> gcgc(4, 4, g, joint_opt, rng);
    perturb_scalars(gcgc, seed);
    auto x = constant({2, 4, 6, 6}, derive_seed(seed, 1));
    const auto y = gcgc(x).value();
    const auto yp = gcgc(Var<double>(oracle::permute_joints(x.value(), perm))).value();
    worst_joint = std::max(worst_joint, max_abs_diff(yp, oracle::permute_joints(y, perm)));

    GraphConvOptions frame_opt;
    frame_opt.groups = 2;
    frame_opt.enable_gcgc = false;
    GraphConv<double> gtgc(4, 4, g, frame_opt, rng);
    perturb_scalars(gtgc, seed);
    const auto z = gtgc(x).value();
    const auto zp = gtgc(Var<double>(oracle::permute_frames(x.value(), perm))).value();
    worst_frame = std::max(worst_frame, max_abs_diff(zp, oracle::permute_frames(z, perm)));
  }
  const std::string detail = "3 permutations each; joint (GC-GC, dynamic only) max |diff| " +
                             fmt(worst_joint) + ", frame (GT-GC) max |diff| " +
                             fmt(worst_frame) + ", bound 1e-10";
  return {worst_joint <= 1e-10 && worst_frame <= 1e-10, detail};
}

CheckOutcome pooling_normalization() {
  double worst_sum = 0.0;
  double worst_excess = 0.0;  // how far TGP output leaves the frame range
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double spread = seed % 2 ? 50.0 : 1.0;
    Rng rng(derive_seed(seed, 0x9001));
    const Shape shape{2, 6, 5, 4};
    const auto xd = Tensor<double>::uniform(shape, -spread, spread, rng);
    const Var<double> x(xd);
    const Var<float> xf(xd.cast<float>());
    auto sums = [&](const auto& w) {
      const auto& t = w.value();
      const std::size_t rows = t.dim(0), cols = t.dim(1);
      for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) total += static_cast<double>(t.at({r, c}));
        worst_sum = std::max(worst_sum, std::abs(total - 1.0));
      }
    };
    sums(nn::tgp_weights(x));
    sums(nn::cgp_weights(x));
    sums(nn::tgp_weights(xf));
    sums(nn::cgp_weights(xf));
    const auto pooled = nn::tgp(x).value();
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t c = 0; c < 6; ++c)
        for (std::size_t v = 0; v < 4; ++v) {
          double lo = xd.at({n, c, 0, v}), hi = lo;
          for (std::size_t t = 1; t < 5; ++t) {
            lo = std::min(lo, xd.at({n, c, t, v}));
            hi = std::max(hi, xd.at({n, c, t, v}));
          }
          const double p = pooled.at({n, c, v});
          worst_excess = std::max({worst_excess, lo - p, p - hi});
        }
  }
  const std::string detail = "max |sum - 1| " + fmt(worst_sum) +
                             " <= 1e-6 (float and double); TGP max excursion outside frame range " +
                             fmt(worst_excess) + " <= 0";
  return {worst_sum <= 1e-6 && worst_excess <= 0.0, detail};
}

CheckOutcome parameter_group_independence() {
  const auto g = data::hand22();
  const std::size_t v = g.joints;
  auto layer_count = [&](std::size_t k) {
    Rng rng(5);
    GraphConv<double> layer(64, 64, g, GraphConvOptions{.groups = k}, rng);
    nn::Collector<double> c;
    layer.collect(c, "gc");
    std::size_t total = 0;
    for (const auto& p : c.params) total += p.var.value().numel();
    return total;
  };
  auto model_count = [](std::size_t k) {
    nn::ModelConfig cfg;
    cfg.gc.groups = k;
    nn::Model<float> model(cfg, 1);
    return nn::count_params(model);
  };
  const std::size_t layer_diff = layer_count(8) - layer_count(4);
  const std::size_t model_diff = model_count(8) - model_count(4);
  const std::size_t blocks = nn::block_plan(nn::ModelConfig{}).size();
  const bool ok = layer_diff == 4 * v * v && model_diff == blocks * 4 * v * v;
  return {ok, "per layer count(K=8) - count(K=4) = " + std::to_string(layer_diff) +
                  " (4 V^2 = " + std::to_string(4 * v * v) + "); default model " +
                  std::to_string(model_diff) + " over " + std::to_string(blocks) + " layers"};
}

CheckOutcome schedule_steps() {
  const train::ScheduleConfig cfg;
  const double at75 = train::lr_at(75, cfg);
  const double at105 = train::lr_at(105, cfg);
  std::ostringstream os;
  os.precision(17);
  os << "lr_at(75) = " << at75 << ", lr_at(105) = " << at105 << " (exact 0.01 / 0.001)";
  return {at75 == 0.01 && at105 == 0.001, os.str()};
}

CheckOutcome mutation_smoke() {
  const auto previous = fault_injection::active();
  fault_injection::set(fault_injection::Fault::TanhBackwardSignFlip);
  GradCheckResult tanh_r, layer_r;
  try {
    tanh_r = unary_case("tanh", ops::Unary::Tanh, -2.0, 2.0).run();
    layer_r = graph_conv_case().run();
  } catch (...) {
    fault_injection::set(previous);
    throw;
  }
  fault_injection::set(previous);
  const bool caught = tanh_r.max_rel_error > kOpTolerance && layer_r.max_rel_error > kOpTolerance;
  return {caught, "tanh backward sign flip: tanh rel " + fmt(tanh_r.max_rel_error) +
                      ", graph_conv rel " + fmt(layer_r.max_rel_error) +
                      (caught ? " (gradient check fails as required)"
                              : " (gradient check did not catch the fault)")};
}

CheckOutcome cam_logit_identity() {
  nn::Model<double> model(micro_config(), 3);
  auto x = constant({2, 3, 8, 5}, 4);
  const auto out = model.forward(x, false);
  const auto& f = out.features.value();
  const auto& w = model.head.weight.value();
  const auto& bias = model.head.bias->value();
  const std::size_t c = f.dim(1), t = f.dim(2), v = f.dim(3);
  double worst = 0.0;
  for (std::size_t n = 0; n < 2; ++n) {
    Tensor<double> sample(Shape{c, t, v});
    for (std::size_t i = 0; i < sample.numel(); ++i) sample[i] = f[n * sample.numel() + i];
    for (std::size_t cls = 0; cls < w.dim(0); ++cls) {
      const auto map = nn::class_activation_map(sample, w, cls);
      double mean = 0.0;
      for (double m : map.values()) mean += m;
      mean /= static_cast<double>(map.numel());
      worst = std::max(worst, std::abs(mean + bias[cls] - out.logits.value().at({n, cls})));
    }
  }
  return {worst <= 1e-10, "max |mean(CAM) + bias - logit| " + fmt(worst) + " <= 1e-10"};
}

CheckOutcome resume_determinism() {
  nn::ModelConfig model_cfg;
  model_cfg.num_classes = 4;
  model_cfg.input_frames = 12;
  model_cfg.base_channels = 8;
  model_cfg.stage_depths = {1, 1};
  auto data = [](std::uint64_t seed, std::size_t per_class) {
    data::SyntheticSpec spec;
    spec.per_class = per_class;
    spec.frames = 12;
    spec.seed = seed;
    return data::generate_synthetic(spec);
  };
  const auto train_set = data(7, 4);
  const auto val_set = data(8, 2);
  train::TrainConfig cfg;
  cfg.batch_size = 6;
  cfg.schedule.epochs = 3;
  cfg.schedule.warmup_epochs = 2;

  train::Trainer full(model_cfg, cfg, train_set, val_set);
  full.run_epoch();
  full.run_epoch();
  const auto reference = full.run_epoch();

  train::Trainer first(model_cfg, cfg, train_set, val_set);
  first.run_epoch();
  first.run_epoch();
  std::random_device rd;
  const auto path = std::filesystem::temp_directory_path() /
                    ("dstsa_verify_" + std::to_string(rd()) + ".ckp");
  nn::save_checkpoint(path, first.checkpoint(""));
  train::Trainer resumed(model_cfg, cfg, train_set, val_set);
  try {
    resumed.restore(nn::load_checkpoint(path));
  } catch (...) {
    std::filesystem::remove(path);
    throw;
  }
  std::filesystem::remove(path);
  const auto again = resumed.run_epoch();
  std::ostringstream os;
  os.precision(9);
  os << "epoch 2 loss uninterrupted " << reference.train_loss << ", resumed " << again.train_loss;
  return {again.train_loss == reference.train_loss && again.val_acc == reference.val_acc,
          os.str()};
}

std::vector<Check> criterion_checks() {
  return {
      {"gradient integrity", gradient_integrity},
      {"reduction oracle", reduction_oracle},
      {"grouping oracle", grouping_oracle},
      {"permutation equivariance", permutation_equivariance},
      {"pooling normalization", pooling_normalization},
      {"parameter count vs groups", parameter_group_independence},
      {"learning-rate schedule", schedule_steps},
  };
}

std::vector<Check> verify_suite() {
  auto checks = criterion_checks();
  checks.push_back({"mutation smoke", mutation_smoke});
  checks.push_back({"CAM logit identity", cam_logit_identity});
  checks.push_back({"resume determinism", resume_determinism});
  return checks;
}

CheckReport run_check(const Check& check) {
  const auto start = std::chrono::steady_clock::now();
  CheckReport report{check.name, false, "", 0.0};
  try {
    const auto outcome = check.run();
    report.passed = outcome.passed;
    report.detail = outcome.detail;
  } catch (const std::exception& e) {
    report.detail = std::string("exception: ") + e.what();
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace dstsa::verify
