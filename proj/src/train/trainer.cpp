#include "dstsa/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "dstsa/errors.hpp"

namespace dstsa::train {

namespace {

constexpr std::uint64_t kModelStream = 0x6d6f64656cULL;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kSamplingStream = 2;

}  // namespace

void TrainConfig::validate() const {
  if (!(schedule.lr0 > 0.0)) throw ConfigError("train.lr must be positive");
  if (schedule.epochs == 0) throw ConfigError("train.epochs must be positive");
  if (!schedule.step_epochs.empty() && schedule.warmup_epochs >= schedule.step_epochs.front()) {
    throw ConfigError("train.warmup_epochs must precede the first step epoch");
  }
  if (!std::is_sorted(schedule.step_epochs.begin(), schedule.step_epochs.end())) {
    throw ConfigError("train.step_epochs must be increasing");
  }
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(sgd.weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (label_set != 14 && label_set != 28) throw ConfigError("data.label_set must be 14 or 28");
}

// ---- log ----

TrainLog::TrainLog(std::filesystem::path tsv, std::filesystem::path json)
    : tsv_(std::move(tsv)), json_(std::move(json)) {}

std::string TrainLog::header() { return "epoch\tlr\ttrain_loss\ttrain_acc\tval_acc\twall_seconds"; }

std::string TrainLog::format(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.6f\t%.6f\t%.6f\t%.3f", r.epoch, r.lr, r.train_loss,
                r.train_acc, r.val_acc, r.wall_seconds);
  return buf;
}

void TrainLog::resume(std::size_t next_epoch) {
  records_.clear();
  std::ifstream in(tsv_);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string tok;
    std::vector<std::string> parts;
    while (std::getline(fields, tok, '\t')) parts.push_back(tok);
    if (parts.size() != 6) continue;
    EpochRecord r;
    r.epoch = std::stoul(parts[0]);
    if (r.epoch >= next_epoch) break;
    r.lr = std::stod(parts[1]);
    r.train_loss = std::stod(parts[2]);
    r.train_acc = std::stod(parts[3]);
    r.val_acc = std::stod(parts[4]);
    r.wall_seconds = std::stod(parts[5]);
    records_.push_back(r);
  }
  rewrite();
}

void TrainLog::append(const EpochRecord& r) {
  records_.push_back(r);
  rewrite();
}

void TrainLog::rewrite() const {
  {
    std::ofstream out(tsv_, std::ios::trunc);
    if (!out) throw InputError("cannot write " + tsv_.string());
    out << header() << '\n';
    for (const auto& r : records_) out << format(r) << '\n';
  }
  nlohmann::json epochs = nlohmann::json::array();
  auto number = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
  for (const auto& r : records_) {
    epochs.push_back({{"epoch", r.epoch},
                      {"lr", r.lr},
                      {"train_loss", number(r.train_loss)},
                      {"train_acc", number(r.train_acc)},
                      {"val_acc", number(r.val_acc)},
                      {"wall_seconds", r.wall_seconds}});
  }
  std::ofstream out(json_, std::ios::trunc);
  if (!out) throw InputError("cannot write " + json_.string());
  out << nlohmann::json{{"epochs", epochs}}.dump(2) << '\n';
}

// ---- trainer ----

Trainer::Trainer(const nn::ModelConfig& model_cfg, const TrainConfig& cfg,
                 std::vector<data::SkeletonSequence> train, std::vector<data::SkeletonSequence> val)
    : cfg_(cfg), train_(std::move(train)), val_(std::move(val)), model_(model_cfg, derive_seed(cfg.seed, kModelStream)) {
  cfg_.validate();
  if (train_.empty()) throw InputError("training set is empty");
  nn::Collector<float> c;
  model_.collect(c);
  sgd_.emplace(std::move(c.params), cfg_.sgd);
}

EpochRecord Trainer::run_epoch() {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t epoch = next_epoch_;
  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = lr_at(epoch, cfg_.schedule);

  std::vector<std::size_t> order(train_.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(cfg_.seed, kShuffleStream, epoch));
  std::shuffle(order.begin(), order.end(), shuffle);

  data::BatchOptions bopt;
  bopt.modality = cfg_.modality;
  bopt.frames = model_.config().input_frames;
  bopt.sampling = data::SamplingMode::Random;
  bopt.seed = derive_seed(cfg_.seed, kSamplingStream, epoch);
  bopt.label_set = cfg_.label_set;

  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), begin + cfg_.batch_size);
    const auto batch = data::make_batch(
        train_, std::span<const std::size_t>(order).subspan(begin, end - begin), model_.graph(), bopt);
    sgd_->zero_grad();
    const Var<float> logits = model_(Var<float>(batch.x), true);
    Var<float> loss = ops::cross_entropy(logits, std::span<const int>(batch.labels));
    loss.backward();
    sgd_->step(rec.lr);
    const double value = loss.value().item();
    if (!std::isfinite(value)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
    loss_sum += value * static_cast<double>(end - begin);
    const std::size_t k = logits.dim(1);
    for (std::size_t i = 0; i < end - begin; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c) {
        if (logits.value().at({i, c}) > logits.value().at({i, best})) best = c;
      }
      correct += static_cast<int>(best) == batch.labels[i];
    }
  }
  rec.train_loss = loss_sum / static_cast<double>(order.size());
  rec.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
  rec.val_acc = val_.empty() ? std::numeric_limits<double>::quiet_NaN() : validate().accuracy;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++next_epoch_;
  return rec;
}

void Trainer::run(const EpochCallback& callback) {
  while (next_epoch_ < cfg_.schedule.epochs) {
    const EpochRecord rec = run_epoch();
    if (callback && !callback(rec)) break;
  }
}

EvalResult Trainer::validate() {
  EvalOptions opt;
  opt.batch.modality = cfg_.modality;
  opt.batch.label_set = cfg_.label_set;
  opt.batch_size = cfg_.batch_size;
  return evaluate(model_, val_, opt);
}

nn::Checkpoint Trainer::checkpoint(const std::string& config_text) {
  nn::Checkpoint ckp;
  ckp.config = config_text;
  nn::store_model(model_, ckp);
  const auto& params = sgd_->params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    ckp.put("optim." + params[k].name + ".velocity", sgd_->velocities()[k]);
  }
  ckp.put("trainer.next_epoch", Tensor<float>::scalar(static_cast<float>(next_epoch_)));
  return ckp;
}

void Trainer::restore(const nn::Checkpoint& ckp) {
  nn::restore_model(model_, ckp);
  const auto& params = sgd_->params();
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::string name = "optim." + params[k].name + ".velocity";
    const Tensor<float>* v = ckp.find(name);
    if (!v) throw IntegrityError("checkpoint lacks optimizer state " + name);
    if (v->shape() != params[k].var.shape()) throw IntegrityError("optimizer state " + name + " has the wrong shape");
    sgd_->velocities()[k] = *v;
  }
  const Tensor<float>* epoch = ckp.find("trainer.next_epoch");
  if (!epoch || epoch->numel() != 1) throw IntegrityError("checkpoint lacks trainer.next_epoch");
  next_epoch_ = static_cast<std::size_t>(epoch->item());
}

}  // namespace dstsa::train
