#pragma once

#include <span>
#include <vector>

#include "dstsa/data/batch.hpp"
#include "dstsa/nn/network.hpp"

namespace dstsa::train {

// Row-wise softmax of (N, K) logits.
Tensor<double> softmax_rows(const Tensor<double>& logits);

// Index of the largest entry of each row; ties go to the lowest index.
std::vector<int> argmax_rows(const Tensor<double>& scores);

struct FusedScores {
  Tensor<double> scores;  // (N, K)
  std::vector<int> labels;
};

// Weighted sum of per-modality score matrices followed by argmax.
FusedScores fuse_scores(const std::vector<Tensor<double>>& scores, std::span<const double> weights);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  Tensor<double> scores;                            // softmax (N, K)
  std::vector<int> predictions;
  std::vector<int> labels;
};

EvalResult summarize(const Tensor<double>& scores, std::span<const int> labels);

struct EvalOptions {
  data::BatchOptions batch;  // sampling is forced to uniform
  std::size_t batch_size = 64;
};

// Eval-mode scoring of every sequence. InputError on an empty dataset.
EvalResult evaluate(nn::Model<float>& model, const std::vector<data::SkeletonSequence>& seqs,
                    const EvalOptions& options);

}  // namespace dstsa::train
