#include "dstsa/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "dstsa/data/batch.hpp"
#include "dstsa/data/shrec.hpp"
#include "dstsa/data/synthetic.hpp"
#include "dstsa/errors.hpp"
#include "dstsa/nn/checkpoint.hpp"
#include "dstsa/tensor/var.hpp"
#include "dstsa/verify/checks.hpp"
#include "json.hpp"

namespace dstsa::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("failed writing " + path.string());
}

std::string checkpoint_name(std::size_t completed_epochs) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoint-%04zu.ckp", completed_epochs);
  return buf;
}

std::string confusion_csv(const std::vector<std::vector<std::size_t>>& confusion) {
  std::string out = "true\\pred";
  for (std::size_t j = 0; j < confusion.size(); ++j) out += "," + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    out += std::to_string(i);
    for (std::size_t n : confusion[i]) out += "," + std::to_string(n);
    out += "\n";
  }
  return out;
}

std::size_t correct_count(const train::EvalResult& r) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.labels.size(); ++i) n += r.labels[i] == r.predictions[i];
  return n;
}

// A checkpoint together with the config it was written under (plus overrides).
struct LoadedModel {
  RunConfig config;
  nn::Checkpoint ckp;
};

LoadedModel load_model_checkpoint(const fs::path& path, const std::vector<std::string>& overrides) {
  if (!fs::exists(path)) throw InputError("checkpoint not found: " + path.string());
  LoadedModel lm{RunConfig{}, nn::load_checkpoint(path)};
  try {
    apply_config_text(lm.config, lm.ckp.config);
  } catch (const ConfigError& e) {
    throw IntegrityError(path.string() + ": stored config is invalid: " + e.what());
  }
  apply_overrides(lm.config, overrides);
  lm.config.model.validate();
  return lm;
}

// Class count and joint count of the data must match the model.
void check_compatible(const RunConfig& cfg, const std::vector<data::SkeletonSequence>& seqs,
                      const std::string& what) {
  const std::size_t joints = data::graph_by_name(cfg.model.graph).joints;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].joints() != joints) {
      throw IntegrityError(what + " expects " + std::to_string(joints) + " joints but sample " +
                           std::to_string(i) + " has " + std::to_string(seqs[i].joints()));
    }
    const int label = seqs[i].label(cfg.train.label_set);
    if (label < 0 || static_cast<std::size_t>(label) >= cfg.model.num_classes) {
      throw IntegrityError(what + " has " + std::to_string(cfg.model.num_classes) +
                           " classes but sample " + std::to_string(i) + " is labelled " +
                           std::to_string(label));
    }
  }
  if (cfg.data.source == "synthetic" && cfg.data.synthetic.classes != cfg.model.num_classes) {
    throw IntegrityError(what + " has " + std::to_string(cfg.model.num_classes) +
                         " classes but the synthetic data has " +
                         std::to_string(cfg.data.synthetic.classes));
  }
}

const std::vector<data::SkeletonSequence>& pick_split(const Datasets& d, const std::string& split) {
  if (split == "val") return d.val;
  if (split == "train") return d.train;
  throw ConfigError("split must be val or train, got '" + split + "'");
}

std::size_t layer_index(const nn::Model<float>& model, const std::string& layer) {
  const auto names = model.layer_names();
  if (layer.empty()) return names.size() - 1;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == layer) return i;
  }
  std::string list;
  for (std::size_t i = 0; i < names.size(); ++i) list += (i ? ", " : "") + names[i];
  throw ConfigError("unknown layer '" + layer + "'; layers: " + list);
}

struct TopologyRow {
  std::string layer;
  std::size_t group;
  long frame;
  std::size_t i, j;
  double value;
};

std::string topology_csv(const std::vector<TopologyRow>& rows) {
  std::string out = "layer,group,frame,i,j,value\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%ld,%zu,%zu,%.9g\n", r.layer.c_str(), r.group, r.frame,
                  r.i, r.j, r.value);
    out += buf;
  }
  return out;
}

std::string topology_json(const std::vector<TopologyRow>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    doc.push_back({{"layer", r.layer},
                   {"group", r.group},
                   {"frame", r.frame},
                   {"i", r.i},
                   {"j", r.j},
                   {"value", r.value}});
  }
  return doc.dump(1) + "\n";
}

}  // namespace

Datasets load_datasets(const RunConfig& cfg) {
  Datasets d;
  if (cfg.data.source == "synthetic") {
    const auto& s = cfg.data.synthetic;
    data::SyntheticSpec spec;
    spec.classes = s.classes;
    spec.per_class = s.per_class;
    spec.joints = s.joints;
    spec.frames = s.frames;
    spec.seed = s.seed;
    spec.noise = s.noise;
    d.train = data::generate_synthetic(spec);
    if (s.val_per_class > 0) {
      spec.per_class = s.val_per_class;
      spec.seed = s.val_seed;
      d.val = data::generate_synthetic(spec);
    }
  } else if (cfg.data.source == "shrec") {
    auto split = data::load_shrec(cfg.data.root);
    d.train = std::move(split.train);
    d.val = std::move(split.test);
  } else if (cfg.data.source == "files") {
    if (!fs::exists(cfg.data.train_file)) throw InputError("cannot read " + cfg.data.train_file);
    d.train = data::load_sequences(cfg.data.train_file);
    if (!cfg.data.val_file.empty()) {
      if (!fs::exists(cfg.data.val_file)) throw InputError("cannot read " + cfg.data.val_file);
      d.val = data::load_sequences(cfg.data.val_file);
    }
  } else {
    throw ConfigError("unknown data.source '" + cfg.data.source + "'");
  }
  return d;
}

int cmd_train(const TrainRequest& req, std::ostream& out) {
  const RunConfig& cfg = req.config;
  cfg.validate();
  Datasets data = load_datasets(cfg);
  check_compatible(cfg, data.train, "model");
  check_compatible(cfg, data.val, "model");

  fs::create_directories(req.out_dir);
  const std::string config_text = dump_config(cfg);
  write_file(req.out_dir / "config.txt", config_text);

  train::Trainer trainer(cfg.model, cfg.train, std::move(data.train), std::move(data.val));
  train::TrainLog log(req.out_dir / "train_log.tsv", req.out_dir / "metrics.json");
  if (req.resume) {
    trainer.restore(nn::load_checkpoint(req.resume_from));
    log.resume(trainer.next_epoch());
    out << "resumed from " << req.resume_from.string() << " at epoch " << trainer.next_epoch()
        << "\n";
  }
  out << "parameters " << nn::count_params(trainer.model()) << "\n";
  out << train::TrainLog::header() << "\n";

  const std::size_t epochs = cfg.train.schedule.epochs;
  std::size_t ran = 0;
  fs::path last_saved;
  auto save = [&](const fs::path& path) {
    nn::save_checkpoint(path, trainer.checkpoint(config_text));
    last_saved = path;
  };
  trainer.run([&](const train::EpochRecord& r) {
    log.append(r);
    out << train::TrainLog::format(r) << "\n" << std::flush;
    ++ran;
    const std::size_t completed = r.epoch + 1;
    const bool stopping = req.stop_after && ran >= req.stop_after && completed < epochs;
    if (completed < epochs &&
        (stopping || (cfg.checkpoint_every && completed % cfg.checkpoint_every == 0))) {
      save(req.out_dir / checkpoint_name(completed));
    }
    return !stopping;
  });
  if (trainer.next_epoch() >= epochs) save(req.out_dir / "final.ckp");
  if (!last_saved.empty()) out << "checkpoint " << last_saved.string() << "\n";
  if (!log.records().empty()) {
    const auto& r = log.records().back();
    out << "epoch " << r.epoch << " train_acc " << fixed(r.train_acc) << " val_acc "
        << fixed(r.val_acc) << "\n";
  }
  return kExitOk;
}

int cmd_eval(const EvalRequest& req, std::ostream& out) {
  if (req.checkpoints.empty()) throw ConfigError("eval needs at least one --checkpoint");
  std::vector<double> weights = req.weights;
  if (weights.empty()) weights.assign(req.checkpoints.size(), 1.0);
  if (weights.size() != req.checkpoints.size()) {
    throw ConfigError("got " + std::to_string(weights.size()) + " weights for " +
                      std::to_string(req.checkpoints.size()) + " checkpoints");
  }

  std::vector<LoadedModel> models;
  for (const auto& path : req.checkpoints) models.push_back(load_model_checkpoint(path, req.overrides));
  const RunConfig& first = models.front().config;
  const Datasets data = load_datasets(first);
  const auto& seqs = pick_split(data, req.split);
  if (seqs.empty()) throw InputError("the " + req.split + " split is empty");

  std::vector<Tensor<double>> scores;
  std::vector<int> labels;
  nlohmann::ordered_json report;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const RunConfig& c = models[m].config;
    const std::string where = req.checkpoints[m].string();
    if (c.model.num_classes != first.model.num_classes ||
        c.train.label_set != first.train.label_set) {
      throw IntegrityError(where + " disagrees with " + req.checkpoints[0].string() +
                           " on the class set");
    }
    check_compatible(c, seqs, where);
    nn::Model<float> model(c.model, 0);
    nn::restore_model(model, models[m].ckp);
    train::EvalOptions opt;
    opt.batch.modality = c.train.modality;
    opt.batch.frames = c.model.input_frames;
    opt.batch.label_set = c.train.label_set;
    opt.batch_size = c.eval_batch_size;
    const auto r = train::evaluate(model, seqs, opt);
    const std::string name = data::modality_name(c.train.modality);
    out << name << " accuracy " << fixed(r.accuracy) << " (" << correct_count(r) << "/"
        << r.labels.size() << ") " << where << "\n";
    report["modalities"].push_back(
        {{"checkpoint", where}, {"modality", name}, {"weight", weights[m]},
         {"accuracy", r.accuracy}});
    if (req.out_dir) write_file(*req.out_dir / ("confusion_" + name + ".csv"), confusion_csv(r.confusion));
    scores.push_back(r.scores);
    labels = r.labels;
  }

  const auto fused = train::fuse_scores(scores, weights);
  const auto summary = train::summarize(fused.scores, labels);
  out << "fused accuracy " << fixed(summary.accuracy) << " (" << correct_count(summary) << "/"
      << summary.labels.size() << ")\n";
  report["fused_accuracy"] = summary.accuracy;
  report["split"] = req.split;
  report["samples"] = summary.labels.size();
  if (req.out_dir) {
    write_file(*req.out_dir / "confusion.csv", confusion_csv(summary.confusion));
    write_file(*req.out_dir / "eval.json", report.dump(1) + "\n");
  }
  return kExitOk;
}

int cmd_verify(bool inject_tanh_fault, std::ostream& out) {
  const auto previous = fault_injection::active();
  if (inject_tanh_fault) {
    fault_injection::set(fault_injection::Fault::TanhBackwardSignFlip);
    out << "fault injected: tanh backward sign flip\n";
  }
  std::optional<verify::CheckReport> first_failure;
  double total = 0.0;
  const auto checks = verify::verify_suite();
  for (const auto& check : checks) {
    const auto r = verify::run_check(check);
    total += r.seconds;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << fixed(r.seconds, 2) << " s): "
        << r.detail << "\n"
        << std::flush;
    if (!r.passed && !first_failure) first_failure = r;
  }
  fault_injection::set(previous);
  if (first_failure) {
    out << "verify failed: " << first_failure->name << ": " << first_failure->detail << "\n";
    return kExitFailure;
  }
  out << "verify passed: " << checks.size() << " checks in " << fixed(total, 2) << " s\n";
  return kExitOk;
}

int cmd_export(const ExportRequest& req, std::ostream& out) {
  if (req.what != "topology" && req.what != "cam") {
    throw ConfigError("export target must be topology or cam, got '" + req.what + "'");
  }
  if (req.format != "csv" && req.format != "json") {
    throw ConfigError("export format must be csv or json, got '" + req.format + "'");
  }
  if (req.what == "topology" && req.kind != "static" && req.kind != "channel" &&
      req.kind != "temporal") {
    throw ConfigError("topology kind must be static, channel or temporal, got '" + req.kind +
                      "'");
  }
  if (req.out.empty()) throw ConfigError("export needs --out");

  LoadedModel lm = load_model_checkpoint(req.checkpoint, req.overrides);
  const RunConfig& cfg = lm.config;
  nn::Model<float> model(cfg.model, 0);
  nn::restore_model(model, lm.ckp);
  const std::size_t layer = layer_index(model, req.layer);
  const std::string layer_name = model.layer_names()[layer];

  std::vector<TopologyRow> rows;
  if (req.what == "topology" && req.kind == "static") {
    const auto& bank = model.blocks[layer].gc.bank;
    if (!bank) throw ConfigError(layer_name + " has no static topology (model.static_init = none)");
    const auto& b = bank->value();
    for (std::size_t k = 0; k < b.dim(0); ++k)
      for (std::size_t i = 0; i < b.dim(1); ++i)
        for (std::size_t j = 0; j < b.dim(2); ++j)
          rows.push_back({layer_name, k, -1, i, j, b.at({k, i, j})});
    write_file(req.out, req.format == "csv" ? topology_csv(rows) : topology_json(rows));
    out << "wrote " << rows.size() << " rows to " << req.out.string() << "\n";
    return kExitOk;
  }

  // Everything else needs one forward pass over the chosen sample.
  const Datasets data = load_datasets(cfg);
  const auto& seqs = pick_split(data, req.split);
  if (req.sample >= seqs.size()) {
    throw InputError("sample " + std::to_string(req.sample) + " out of range; the " + req.split +
                     " split has " + std::to_string(seqs.size()) + " sequences");
  }
  check_compatible(cfg, seqs, req.checkpoint.string());
  data::BatchOptions bo;
  bo.modality = cfg.train.modality;
  bo.frames = cfg.model.input_frames;
  bo.label_set = cfg.train.label_set;
  const std::vector<std::size_t> order{req.sample};
  const auto batch = data::make_batch(seqs, order, model.graph(), bo);
  std::vector<nn::GraphConv<float>::Trace> traces;
  nn::Model<float>::Output result;
  {
    NoGradGuard guard;
    result = model.forward(Var<float>(batch.x), false, &traces);
  }

  if (req.what == "topology") {
    const auto& tr = traces[layer];
    if (req.kind == "channel") {
      if (!model.blocks[layer].gc.options().enable_gcgc) {
        throw ConfigError(layer_name + " has no channel topology (model.gcgc = false)");
      }
      const auto& a = tr.a_channel.value();  // (1, C, V, V)
      for (std::size_t c = 0; c < a.dim(1); ++c)
        for (std::size_t i = 0; i < a.dim(2); ++i)
          for (std::size_t j = 0; j < a.dim(3); ++j)
            rows.push_back({layer_name, c, -1, i, j, a.at({0, c, i, j})});
    } else {
      if (!model.blocks[layer].gc.options().enable_gtgc) {
        throw ConfigError(layer_name + " has no temporal topology (model.gtgc = false)");
      }
      const auto& a = tr.a_temporal.value();  // (1, K, T, V, V)
      for (std::size_t k = 0; k < a.dim(1); ++k)
        for (std::size_t t = 0; t < a.dim(2); ++t)
          for (std::size_t i = 0; i < a.dim(3); ++i)
            for (std::size_t j = 0; j < a.dim(4); ++j)
              rows.push_back(
                  {layer_name, k, static_cast<long>(t), i, j, a.at({0, k, t, i, j})});
    }
    write_file(req.out, req.format == "csv" ? topology_csv(rows) : topology_json(rows));
    out << "wrote " << rows.size() << " rows to " << req.out.string() << "\n";
    return kExitOk;
  }

  // Class activation map of the final features.
  const auto features = result.features.value().cast<double>();
  const std::size_t c = features.dim(1), t = features.dim(2), v = features.dim(3);
  const Tensor<double> sample = features.reshaped({c, t, v});
  const auto logits = result.logits.value().cast<double>();
  const int predicted = train::argmax_rows(logits)[0];
  const std::size_t cls = req.cls.value_or(static_cast<std::size_t>(predicted));
  if (cls >= cfg.model.num_classes) {
    throw InputError("class " + std::to_string(cls) + " out of range for " +
                     std::to_string(cfg.model.num_classes) + " classes");
  }
  const auto map = nn::normalize_map(
      nn::class_activation_map(sample, model.head.weight.value().cast<double>(), cls));
  const int label = batch.labels[0];
  if (req.format == "csv") {
    std::string text = "# cam sample=" + std::to_string(req.sample) +
                       " class=" + std::to_string(cls) + " predicted=" +
                       std::to_string(predicted) + " label=" + std::to_string(label) +
                       " frames=" + std::to_string(t) + " joints=" + std::to_string(v) +
                       "; rows are frames, columns joints; min-max normalized to [0, 1]\n";
    char buf[32];
    for (std::size_t f = 0; f < t; ++f) {
      for (std::size_t j = 0; j < v; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", map.at({f, j}));
        text += (j ? "," : "") + std::string(buf);
      }
      text += "\n";
    }
    write_file(req.out, text);
  } else {
    nlohmann::ordered_json doc{{"sample", req.sample},  {"class", cls},
                       {"predicted", predicted}, {"label", label},
                       {"normalization", "min-max"}, {"map", nlohmann::ordered_json::array()}};
    for (std::size_t f = 0; f < t; ++f) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t j = 0; j < v; ++j) row.push_back(map.at({f, j}));
      doc["map"].push_back(row);
    }
    write_file(req.out, doc.dump(1) + "\n");
  }
  out << "wrote " << t << "x" << v << " CAM for class " << cls << " to " << req.out.string()
      << "\n";
  return kExitOk;
}

int cmd_summary(const RunConfig& cfg, std::ostream& out) {
  cfg.model.validate();
  const auto cost = nn::count_params_flops(cfg.model);
  const auto plan = nn::block_plan(cfg.model);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %5s %5s %6s %12s %16s\n", "layer", "in", "out", "stride",
                "params", "mult_adds");
  out << buf;
  for (std::size_t i = 0; i < cost.layers.size(); ++i) {
    const auto& l = cost.layers[i];
    std::string in = "-", outc = "-", stride = "-";
    if (i >= 1 && i <= plan.size()) {
      in = std::to_string(plan[i - 1].in_channels);
      outc = std::to_string(plan[i - 1].out_channels);
      stride = std::to_string(plan[i - 1].stride);
    }
    std::snprintf(buf, sizeof buf, "%-8s %5s %5s %6s %12zu %16zu\n", l.name.c_str(), in.c_str(),
                  outc.c_str(), stride.c_str(), l.params, l.mult_adds);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%-8s %5s %5s %6s %12zu %16zu\n", "total", "", "", "",
                cost.params, cost.mult_adds);
  out << buf;
  std::snprintf(buf, sizeof buf, "%.3fM parameters, %.3fG mult-adds per sample at T=%zu\n",
                static_cast<double>(cost.params) / 1e6, static_cast<double>(cost.mult_adds) / 1e9,
                cfg.model.input_frames);
  out << buf;
  return kExitOk;
}

}  // namespace dstsa::cli
