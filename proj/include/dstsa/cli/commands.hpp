#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dstsa/cli/config.hpp"

namespace dstsa::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed check, integrity or runtime error
inline constexpr int kExitUsage = 2;    // bad flags, config keys or values, unreadable inputs

struct Datasets {
  std::vector<data::SkeletonSequence> train;
  std::vector<data::SkeletonSequence> val;  // SHREC: the test split
};

Datasets load_datasets(const RunConfig& cfg);

struct TrainRequest {
  RunConfig config;
  std::filesystem::path out_dir = "run";
  bool resume = false;  // config.* already holds the checkpoint's config when set
  std::filesystem::path resume_from;
  std::size_t stop_after = 0;  // epochs to run in this invocation; 0 runs to the end
};

// Writes <out>/config.txt, train_log.tsv, metrics.json, checkpoint-<epoch>.ckp
// every config.checkpoint_every epochs and final.ckp when the schedule ends.
int cmd_train(const TrainRequest& req, std::ostream& out);

struct EvalRequest {
  std::vector<std::filesystem::path> checkpoints;  // one per modality
  std::vector<double> weights;                     // empty: all 1
  std::vector<std::string> overrides;              // applied on each checkpoint's config
  std::string split = "val";                       // val or train
  std::optional<std::filesystem::path> out_dir;    // confusion CSVs + eval.json
};

// IntegrityError when a checkpoint disagrees with the data or the others.
int cmd_eval(const EvalRequest& req, std::ostream& out);

// Runs the verification suite; `inject_tanh_fault` flips the sign of the
// tanh backward pass for the whole run.
int cmd_verify(bool inject_tanh_fault, std::ostream& out);

struct ExportRequest {
  std::filesystem::path checkpoint;
  std::string what = "topology";  // topology or cam
  std::string kind = "static";    // topology: static, channel or temporal
  std::string layer;              // block name; empty: last block
  std::size_t sample = 0;
  std::optional<std::size_t> cls;  // cam class; default: predicted
  std::string format = "csv";      // csv or json
  std::string split = "val";
  std::vector<std::string> overrides;
  std::filesystem::path out;
};

int cmd_export(const ExportRequest& req, std::ostream& out);

// Parameter / mult-add table for the configured model.
int cmd_summary(const RunConfig& cfg, std::ostream& out);

// Parses argv and dispatches; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dstsa::cli
