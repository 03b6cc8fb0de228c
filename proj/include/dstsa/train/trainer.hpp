#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dstsa/nn/checkpoint.hpp"
#include "dstsa/train/metrics.hpp"
#include "dstsa/train/optim.hpp"

namespace dstsa::train {

struct TrainConfig {
  ScheduleConfig schedule;
  SgdOptions sgd;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  data::Modality modality = data::Modality::Joint;
  int label_set = 14;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN without a validation set
  double wall_seconds = 0.0;
};

// Tab-separated per-epoch log plus a JSON dump of every record so far.
class TrainLog {
 public:
  TrainLog(std::filesystem::path tsv, std::filesystem::path json);
  // Keeps records of epochs < next_epoch from an existing log (resume);
  // later lines are dropped.
  void resume(std::size_t next_epoch);
  void append(const EpochRecord& r);
  const std::vector<EpochRecord>& records() const { return records_; }

  static std::string header();
  static std::string format(const EpochRecord& r);

 private:
  void rewrite() const;

  std::filesystem::path tsv_, json_;
  std::vector<EpochRecord> records_;
};

class Trainer {
 public:
  // Returning false from the callback ends training after that epoch.
  using EpochCallback = std::function<bool(const EpochRecord&)>;

  Trainer(const nn::ModelConfig& model_cfg, const TrainConfig& cfg,
          std::vector<data::SkeletonSequence> train, std::vector<data::SkeletonSequence> val);

  EpochRecord run_epoch();
  // Epochs next_epoch() .. epochs - 1.
  void run(const EpochCallback& callback = {});

  nn::Checkpoint checkpoint(const std::string& config_text);
  // IntegrityError when the checkpoint does not match this model.
  void restore(const nn::Checkpoint& ckp);

  std::size_t next_epoch() const { return next_epoch_; }
  nn::Model<float>& model() { return model_; }
  Sgd<float>& optimizer() { return *sgd_; }
  const TrainConfig& config() const { return cfg_; }
  EvalResult validate();

 private:
  TrainConfig cfg_;
  std::vector<data::SkeletonSequence> train_;
  std::vector<data::SkeletonSequence> val_;
  nn::Model<float> model_;
  std::optional<Sgd<float>> sgd_;
  std::size_t next_epoch_ = 0;
};

}  // namespace dstsa::train
