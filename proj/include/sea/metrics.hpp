// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sea/matrix.hpp"

namespace sea {

// confusion[true][predicted]
using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

// Predicted class is the first argmax of each probability row.
std::vector<int> argmax_rows(const Matrix& probs);
ConfusionMatrix confusion_matrix(const Matrix& probs, std::span<const int> labels);
double accuracy(const ConfusionMatrix& confusion);

struct F1Scores {
  double macro = 0.0;
  double weighted = 0.0;
  std::vector<double> per_class;
};

// Per-class F1 = 2PR/(P+R), 0/0 taken as 0. The macro mean runs over classes
// that occur in truth or prediction; the weighted mean uses true support.
F1Scores f1_scores(const ConfusionMatrix& confusion);

std::vector<double> per_class_recall(const ConfusionMatrix& confusion);

// Kaggle multi-class log loss; same definition as cross_entropy.
double log_loss(const Matrix& probs, std::span<const int> labels);

struct AucResult {
  double macro = 0.0;
  std::vector<double> per_class;  // NaN where the class was skipped
  std::vector<int> skipped;
};

// One-vs-rest AUC via the Mann-Whitney statistic with midranks for ties.
// Classes without both positives and negatives are skipped; if every class
// is skipped, throws UndefinedMetricError.
AucResult roc_auc_ovr_detailed(const Matrix& probs, std::span<const int> labels);
// Same, with a warning on stderr per skipped class.
double roc_auc_ovr(const Matrix& probs, std::span<const int> labels);

struct Metrics {
  std::size_t samples = 0;
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double log_loss = 0.0;
  double roc_auc_ovr_macro = 0.0;  // NaN when undefined
  ConfusionMatrix confusion;
  std::vector<double> f1_per_class;
  std::vector<double> recall_per_class;
};

// Every metric from one probability table. Throws NumericError if a result
// falls outside its valid range.
Metrics compute_metrics(const Matrix& probs, std::span<const int> labels);

}  // namespace sea
