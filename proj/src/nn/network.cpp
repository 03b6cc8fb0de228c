#include "dstsa/nn/network.hpp"

#include <algorithm>

#include "dstsa/errors.hpp"

namespace dstsa::nn {

std::vector<std::size_t> ModelConfig::stage_channels() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < stage_depths.size(); ++s) out.push_back(base_channels << s);
  return out;
}

void ModelConfig::validate() const {
  if (in_channels == 0) throw ConfigError("model.in_channels must be positive");
  if (num_classes < 2) throw ConfigError("model.num_classes must be at least 2");
  if (input_frames == 0) throw ConfigError("model.input_frames must be positive");
  if (stage_depths.empty()) throw ConfigError("model.stage_depths must list at least one stage");
  for (std::size_t d : stage_depths) {
    if (d == 0) throw ConfigError("model.stage_depths entries must be positive");
  }
  if (gc.groups == 0) throw ConfigError("model.groups must be positive");
  for (std::size_t c : stage_channels()) {
    if (c % gc.groups != 0) {
      throw ConfigError("stage width " + std::to_string(c) + " not divisible by K = " +
                        std::to_string(gc.groups));
    }
    if (c < tcn.branches.size()) {
      throw ConfigError("stage width " + std::to_string(c) + " narrower than the " +
                        std::to_string(tcn.branches.size()) + " temporal branches");
    }
  }
  if (!gc.enable_gcgc && !gc.enable_gtgc) {
    throw ConfigError("at least one of GC-GC and GT-GC must be enabled");
  }
  data::graph_by_name(graph);
}

std::vector<BlockPlan> block_plan(const ModelConfig& cfg) {
  const auto widths = cfg.stage_channels();
  std::vector<BlockPlan> plan;
  for (std::size_t s = 0; s < widths.size(); ++s) {
    for (std::size_t i = 0; i < cfg.stage_depths[s]; ++i) plan.push_back({widths[s], widths[s], 1});
    if (s + 1 < widths.size()) plan.push_back({widths[s], widths[s + 1], 2});
  }
  return plan;
}

template <typename T>
Block<T>::Block(const BlockPlan& plan, const data::GraphSpec& graph, const ModelConfig& cfg,
                Rng& rng)
    : gc(plan.in_channels, plan.out_channels, graph, cfg.gc, rng),
      gc_bn(plan.out_channels),
      tcn_bn(plan.out_channels) {
  MsTcnOptions topt = cfg.tcn;
  topt.stride = plan.stride;
  tcn = MsTcn<T>(plan.out_channels, plan.out_channels, topt, rng);
  if (plan.in_channels != plan.out_channels || plan.stride != 1) {
    res_conv.emplace(plan.in_channels, plan.out_channels, 1,
                     ops::TemporalConvSpec{plan.stride, 1, 0}, true, rng);
    res_bn.emplace(plan.out_channels);
  }
}

template <typename T>
Var<T> Block<T>::forward(const Var<T>& x, bool training, typename GraphConv<T>::Trace* trace) {
  Var<T> h;
  if (trace) {
    *trace = gc.forward(x);
    h = trace->out;
  } else {
    h = gc(x);
  }
  h = ops::relu(gc_bn(h, training));
  Var<T> y = ops::relu(tcn_bn(tcn(h), training));
  const Var<T> res = res_conv ? (*res_bn)((*res_conv)(x), training) : x;
  return ops::add(y, res);
}

template <typename T>
void Block<T>::collect(Collector<T>& c, const std::string& prefix) {
  gc.collect(c, prefix + ".gc");
  gc_bn.collect(c, prefix + ".gc_bn");
  tcn.collect(c, prefix + ".tcn");
  tcn_bn.collect(c, prefix + ".tcn_bn");
  if (res_conv) {
    res_conv->collect(c, prefix + ".res");
    res_bn->collect(c, prefix + ".res_bn");
  }
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), graph_(data::graph_by_name(cfg.graph)) {
  cfg_.validate();
  Rng rng(seed);
  data_bn = BatchNorm<T>(cfg.in_channels);
  embed = ChannelLinear<T>(cfg.in_channels, cfg.base_channels, true, rng);
  embed_bn = BatchNorm<T>(cfg.base_channels);
  std::size_t width = cfg.base_channels;
  for (const BlockPlan& p : block_plan(cfg_)) {
    blocks.emplace_back(p, graph_, cfg_, rng);
    width = p.out_channels;
  }
  head = ChannelLinear<T>(width, cfg.num_classes, true, rng);
}

template <typename T>
typename Model<T>::Output Model<T>::forward(const Var<T>& x, bool training,
                                            std::vector<typename GraphConv<T>::Trace>* traces) {
  if (x.rank() != 4 || x.dim(1) != cfg_.in_channels || x.dim(3) != graph_.joints ||
      x.dim(2) == 0) {
    throw DimensionError("model input " + to_string(x.shape()) + " does not match (N, " +
                         std::to_string(cfg_.in_channels) + ", T, " +
                         std::to_string(graph_.joints) + ")");
  }
  Var<T> h = data_bn(x, training);
  h = ops::relu(embed_bn(embed(h), training));
  if (traces) traces->assign(blocks.size(), {});
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h, training, traces ? &(*traces)[i] : nullptr);
  }
  Output out;
  out.features = h;
  out.logits = head(ops::mean(h, {2, 3}));
  return out;
}

template <typename T>
void Model<T>::collect(Collector<T>& c) {
  data_bn.collect(c, "data_bn");
  embed.collect(c, "embed");
  embed_bn.collect(c, "embed_bn");
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(c, "block" + std::to_string(i));
  head.collect(c, "head");
}

template <typename T>
std::vector<std::string> Model<T>::layer_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < blocks.size(); ++i) names.push_back("block" + std::to_string(i));
  return names;
}

template <typename T>
std::size_t count_params(Model<T>& model) {
  Collector<T> c;
  model.collect(c);
  std::size_t total = 0;
  for (const auto& p : c.params) total += p.var.value().numel();
  return total;
}

namespace {

struct CostAccumulator {
  ModelCost cost;
  void linear(std::size_t cin, std::size_t cout, bool bias, std::size_t positions) {
    cost.params += cin * cout + (bias ? cout : 0);
    cost.mult_adds += cin * cout * positions;
  }
  void batch_norm(std::size_t channels) { cost.params += 2 * channels; }
  // Attributes everything accumulated since the previous mark to `name`.
  void mark(std::string name) {
    std::size_t params = cost.params, mult_adds = cost.mult_adds;
    for (const auto& l : cost.layers) {
      params -= l.params;
      mult_adds -= l.mult_adds;
    }
    cost.layers.push_back({std::move(name), params, mult_adds});
  }
};

}  // namespace

ModelCost count_params_flops(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t v = data::graph_by_name(cfg.graph).joints;
  const std::size_t k = cfg.gc.groups;
  CostAccumulator acc;
  std::size_t t = cfg.input_frames;

  acc.batch_norm(cfg.in_channels);
  acc.linear(cfg.in_channels, cfg.base_channels, true, t * v);
  acc.batch_norm(cfg.base_channels);
  acc.mark("stem");

  std::size_t width = cfg.base_channels;
  std::size_t index = 0;
  for (const BlockPlan& p : block_plan(cfg)) {
    const std::size_t cin = p.in_channels, cout = p.out_channels;
    const std::size_t tv = t * v;
    // Graph convolution unit.
    if (cfg.gc.use_stca) {
      const std::size_t hidden = cin / stca_reduction(cin, cfg.gc.stca_reduction);
      acc.cost.mult_adds += 2 * cin * tv;  // vap + tap
      acc.linear(cin, hidden, true, t + v);
      acc.linear(hidden, cin, true, t);
      acc.linear(hidden, cin, true, v);
      acc.cost.mult_adds += 2 * cin * tv;  // two gate products
    }
    acc.linear(cin, cout, false, tv);
    if (cfg.gc.enable_gcgc) {
      acc.cost.mult_adds += (cfg.gc.use_tgp ? 2 : 1) * cin * tv;  // frame scores + weighted sum
      acc.linear(cin, cout, true, v);
      acc.linear(cin, cout, true, v);
      acc.cost.mult_adds += 2 * cout * v * v;  // pairwise differences + alpha fusion
      if (cfg.gc.static_init != StaticInit::None) acc.cost.params += k * v * v;
      acc.cost.params += 2;                    // alpha, a
      acc.cost.mult_adds += cout * t * v * v + cout * tv;
    }
    if (cfg.gc.enable_gtgc) {
      acc.cost.mult_adds += (cfg.gc.use_cgp ? 2 : 1) * cin * tv;  // channel scores + weighted sum
      acc.cost.params += 2;                                        // phi3, b
      acc.cost.mult_adds += k * tv + k * t * v * v;               // lift + pairwise
      acc.cost.mult_adds += cout * t * v * v + cout * tv;
    }
    acc.batch_norm(cout);
    // Multi-scale temporal convolution.
    const std::size_t t_out = (t + p.stride - 1) / p.stride;
    const auto widths = split_channels(cout, cfg.tcn.branches.size());
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const Branch& br = cfg.tcn.branches[i];
      if (br.kind == BranchKind::Plain) {
        acc.linear(cout * cfg.tcn.plain_kernel, cout, true, t_out * v);
        continue;
      }
      acc.linear(cout, widths[i], true, tv);
      if (br.kind == BranchKind::Dilated) {
        acc.linear(widths[i] * cfg.tcn.kernel, widths[i], true, t_out * v);
      }
    }
    acc.batch_norm(cout);
    if (cin != cout || p.stride != 1) {
      acc.linear(cin, cout, true, t_out * v);
      acc.batch_norm(cout);
    }
    t = t_out;
    width = cout;
    acc.mark("block" + std::to_string(index++));
  }
  acc.cost.mult_adds += width * t * v;  // global average pool
  acc.linear(width, cfg.num_classes, true, 1);
  acc.mark("head");
  return acc.cost;
}

Tensor<double> class_activation_map(const Tensor<double>& features, const Tensor<double>& weight,
                                    std::size_t cls) {
  if (features.rank() != 3 || weight.rank() != 2 || weight.dim(1) != features.dim(0) ||
      cls >= weight.dim(0)) {
    throw DimensionError("class_activation_map: features " + to_string(features.shape()) +
                         ", weight " + to_string(weight.shape()) + ", class " +
                         std::to_string(cls));
  }
  const std::size_t c = features.dim(0), t = features.dim(1), v = features.dim(2);
  Tensor<double> map(Shape{t, v});
  for (std::size_t k = 0; k < c; ++k) {
    const double w = weight.at({cls, k});
    for (std::size_t f = 0; f < t; ++f)
      for (std::size_t j = 0; j < v; ++j) map.at({f, j}) += w * features.at({k, f, j});
  }
  return map;
}

Tensor<double> normalize_map(const Tensor<double>& map) {
  Tensor<double> out(map.shape());
  if (map.numel() == 0) return out;
  const auto vals = map.values();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  const double span = *hi - *lo;
  for (std::size_t i = 0; i < map.numel(); ++i) {
    out[i] = span > 0.0 ? (map[i] - *lo) / span : 0.5;
  }
  return out;
}

#define DSTSA_INSTANTIATE(T)  \
  template struct Block<T>; \
  template class Model<T>;  \
  template std::size_t count_params(Model<T>&);

DSTSA_INSTANTIATE(float)
DSTSA_INSTANTIATE(double)
#undef DSTSA_INSTANTIATE

}  // namespace dstsa::nn
