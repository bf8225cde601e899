// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sea/corpus.hpp"
#include "sea/metrics.hpp"
#include "sea/sea_model.hpp"

namespace sea {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  bool class_weighting = false;
  double clip_norm = 5.0;    // global gradient norm cap, <= 0 disables
  double target_loss = 0.0;  // stop once an epoch's mean loss drops below; 0 disables
  std::size_t fold_workers = 1;

  void validate() const;
};

struct TrainResult {
  SeaParams params;
  std::vector<double> loss_history;  // mean training loss per epoch
};

// Mini-batch Adam on cross-entropy over `indices` (all samples when empty).
// Deterministic for a given seed.
TrainResult train(const LabeledDataset& dataset, const Matrix& embedding, const SeaConfig& model_cfg,
                  const TrainConfig& train_cfg, std::span<const std::size_t> indices = {});

// Row i holds the class probabilities of dataset sample indices[i].
Matrix predict_probs(const SeaParams& params, const SeaConfig& cfg, const Matrix& embedding,
                     const LabeledDataset& dataset, std::span<const std::size_t> indices);

struct EvalReport {
  Metrics pooled;
  std::vector<Metrics> per_fold;
};

EvalReport evaluate(const SeaParams& params, const SeaConfig& cfg, const Matrix& embedding,
                    const LabeledDataset& dataset);

struct KFoldResult {
  EvalReport report;
  FoldSplit split;
  Matrix held_out_probs;  // row i predicted by the model that did not see sample i
  std::vector<SeaParams> fold_params;
  std::vector<std::vector<double>> fold_loss_histories;
};

// Fold f trains with seed + f; folds run on up to fold_workers threads and
// the result does not depend on the worker count.
KFoldResult kfold_validate(const LabeledDataset& dataset, const Matrix& embedding,
                           const SeaConfig& model_cfg, const TrainConfig& train_cfg);

// JSON text and CSV tables (one row per fold plus a pooled row).
std::string report_json(const EvalReport& report, std::span<const std::string> class_names);
void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       std::span<const std::string> class_names);
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion);
void write_loss_csv(const std::filesystem::path& path,
                    std::span<const std::vector<double>> histories);

}  // namespace sea
