#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dstsa/data/skeleton.hpp"
#include "dstsa/nn/network.hpp"
#include "dstsa/train/trainer.hpp"

namespace dstsa::cli {

struct SyntheticData {
  std::size_t classes = 4;
  std::size_t per_class = 16;
  std::size_t val_per_class = 8;
  std::size_t joints = 22;
  std::size_t frames = 30;
  std::uint64_t seed = 7;
  std::uint64_t val_seed = 8;
  double noise = 0.01;
};

struct DataConfig {
  // synthetic: generated in memory; shrec: SHREC'17 tree under `root`;
  // files: containers written by save_sequences (train_file / val_file).
  std::string source = "synthetic";
  std::string root;
  std::string train_file;
  std::string val_file;
  SyntheticData synthetic;
};

// Everything a run needs. Defaults are the default model with the desk-scale
// synthetic task.
struct RunConfig {
  nn::ModelConfig model;
  train::TrainConfig train;
  DataConfig data;
  std::size_t checkpoint_every = 10;  // epochs; 0 keeps only the final one
  std::size_t eval_batch_size = 64;

  RunConfig();
  // Cross-section consistency on top of the model and training checks.
  // Throws ConfigError.
  void validate() const;
};

// Flat "section.name" keys, in dump order.
std::vector<std::string> config_keys();

// Throws ConfigError naming the key for unknown keys or unparsable values.
void set_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& cfg, const std::string& key);

// "key = value" lines for every key; parse_config of the result rebuilds an
// identical config.
std::string dump_config(const RunConfig& cfg);

// Applies "key = value" lines ('#' starts a comment) on top of `cfg`. Every
// offending line is collected before a single ConfigError lists them all.
void apply_config_text(RunConfig& cfg, const std::string& text);
RunConfig parse_config(const std::string& text);
// InputError when the file cannot be read.
std::string read_text_file(const std::filesystem::path& path);

// "key=value" overrides; offenders are collected as above.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& assignments);

}  // namespace dstsa::cli
