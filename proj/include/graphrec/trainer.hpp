#pragma once

#include <filesystem>
#include <limits>
#include <vector>

#include <json.hpp>

#include "graphrec/models.hpp"

namespace graphrec {

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 2048;
  double learning_rate = 1e-3;
  std::uint64_t seed = 2022;
  std::size_t patience = 5;     // validation checks without improvement
  std::size_t eval_every = 5;   // epochs
  unsigned threads = 1;         // validation scoring only

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

struct AdamState {
  std::vector<Matrix> first;
  std::vector<Matrix> second;
  std::size_t step = 0;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of every parameter in place.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, AdamState& state,
               const AdamOptions& options);

struct CurvePoint {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_recall = std::numeric_limits<double>::quiet_NaN();  // NaN on epochs without a check
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  std::size_t best_epoch = 0;
  double best_val_recall = std::numeric_limits<double>::quiet_NaN();
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

/// Minibatch BPR training with Adam. Every eval_every epochs validation
/// Recall@20 is computed (train items masked); the best parameters are kept
/// and restored at the end. Without a validation set every epoch runs and
/// the final parameters are kept. A non-finite loss throws NumericalError.
TrainResult train(gcf::TrainableModel& model, const Split& split, const TrainConfig& config);

/// Checkpoint directory: meta.json, one f32 array per parameter, the final
/// user/item representations and curve.tsv.
void save_checkpoint(const std::filesystem::path& dir, gcf::TrainableModel& model, const TrainResult& result,
                     const TrainConfig& config);
EmbeddingScorer load_checkpoint(const std::filesystem::path& dir);
void write_curve_tsv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

}  // namespace graphrec
