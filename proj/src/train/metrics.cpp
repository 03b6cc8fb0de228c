#include "dstsa/train/metrics.hpp"

#include <cmath>
#include <numeric>

#include "dstsa/errors.hpp"

namespace dstsa::train {

Tensor<double> softmax_rows(const Tensor<double>& logits) {
  if (logits.rank() != 2) throw DimensionError("softmax_rows expects (N, K), got " + to_string(logits.shape()));
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor<double> out(logits.shape());
  for (std::size_t r = 0; r < n; ++r) {
    double peak = logits.at({r, 0});
    for (std::size_t c = 1; c < k; ++c) peak = std::max(peak, logits.at({r, c}));
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) total += out.at({r, c}) = std::exp(logits.at({r, c}) - peak);
    for (std::size_t c = 0; c < k; ++c) out.at({r, c}) /= total;
  }
  return out;
}

std::vector<int> argmax_rows(const Tensor<double>& scores) {
  if (scores.rank() != 2) throw DimensionError("argmax_rows expects (N, K), got " + to_string(scores.shape()));
  std::vector<int> out(scores.dim(0), 0);
  for (std::size_t r = 0; r < scores.dim(0); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.dim(1); ++c) {
      if (scores.at({r, c}) > scores.at({r, best})) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

FusedScores fuse_scores(const std::vector<Tensor<double>>& scores, std::span<const double> weights) {
  if (scores.empty() || scores.size() != weights.size()) {
    throw ConfigError("fuse_scores: " + std::to_string(scores.size()) + " score sets for " +
                      std::to_string(weights.size()) + " weights");
  }
  bool positive = false;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("fusion weights must be finite and >= 0");
    positive = positive || w > 0.0;
  }
  if (!positive) throw ConfigError("fusion needs at least one positive weight");
  FusedScores out;
  out.scores = Tensor<double>(scores[0].shape());
  for (std::size_t m = 0; m < scores.size(); ++m) {
    if (scores[m].shape() != scores[0].shape() || scores[m].rank() != 2) {
      throw DimensionError("fuse_scores: score shapes " + to_string(scores[0].shape()) + " and " +
                           to_string(scores[m].shape()));
    }
    for (std::size_t i = 0; i < out.scores.numel(); ++i) out.scores[i] += weights[m] * scores[m][i];
  }
  out.labels = argmax_rows(out.scores);
  return out;
}

EvalResult summarize(const Tensor<double>& scores, std::span<const int> labels) {
  if (scores.rank() != 2 || scores.dim(0) != labels.size()) {
    throw DimensionError("summarize: scores " + to_string(scores.shape()) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw InputError("cannot evaluate an empty dataset");
  const std::size_t k = scores.dim(1);
  EvalResult r;
  r.scores = scores;
  r.labels.assign(labels.begin(), labels.end());
  r.predictions = argmax_rows(scores);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError("label " + std::to_string(labels[i]) + " outside [0, " + std::to_string(k) + ")");
    }
    ++r.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(r.predictions[i])];
    correct += labels[i] == r.predictions[i];
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  return r;
}

EvalResult evaluate(nn::Model<float>& model, const std::vector<data::SkeletonSequence>& seqs,
                    const EvalOptions& options) {
  if (seqs.empty()) throw InputError("cannot evaluate an empty dataset");
  if (options.batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  data::BatchOptions bopt = options.batch;
  bopt.sampling = data::SamplingMode::Uniform;
  bopt.frames = model.config().input_frames;
  const std::size_t k = model.config().num_classes;
  Tensor<double> logits(Shape{seqs.size(), k});
  std::vector<int> labels;
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  NoGradGuard guard;
  for (std::size_t start = 0; start < seqs.size(); start += options.batch_size) {
    const std::size_t end = std::min(seqs.size(), start + options.batch_size);
    const auto batch = data::make_batch(
        seqs, std::span<const std::size_t>(order).subspan(start, end - start), model.graph(), bopt);
    const auto y = model(Var<float>(batch.x), false);
    for (std::size_t i = 0; i < end - start; ++i)
      for (std::size_t c = 0; c < k; ++c) logits.at({start + i, c}) = y.value().at({i, c});
    labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());
  }
  return summarize(softmax_rows(logits), labels);
}

}  // namespace dstsa::train
