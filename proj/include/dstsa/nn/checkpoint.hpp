#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dstsa/nn/network.hpp"

namespace dstsa::nn {

// Binary layout, little-endian:
//   "DSTSACKP" | u32 version (1) | u32 config bytes | config text (key=value lines)
//   | u32 tensor count | per tensor: u32 name bytes | name | u32 rank | u64 dims[rank]
//   | f32 values[numel]
struct Checkpoint {
  std::string config;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(std::string_view name) const;
  void put(std::string name, Tensor<float> value);
};

// Writes to a sibling temporary file, then renames over `file`.
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& ckp);
Checkpoint load_checkpoint(const std::filesystem::path& file);

// Parameters and normalization statistics under their collector names.
void store_model(Model<float>& model, Checkpoint& ckp);
// IntegrityError when a tensor is missing or its shape differs.
void restore_model(Model<float>& model, const Checkpoint& ckp);

}  // namespace dstsa::nn
