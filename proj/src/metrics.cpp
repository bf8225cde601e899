// SPDX-License-Identifier: Apache-2.0
#include "sea/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "sea/errors.hpp"

namespace sea {

namespace {

void check_labels(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() != labels.size()) {
    throw ShapeError(std::to_string(labels.size()) + " labels for probability table " +
                     probs.shape_string());
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
      throw IndexError("label " + std::to_string(y) + " out of range [0, " +
                       std::to_string(probs.cols()) + ")");
    }
  }
}

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(probs.rows());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    auto row = probs.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

ConfusionMatrix confusion_matrix(const Matrix& probs, std::span<const int> labels) {
  check_labels(probs, labels);
  ConfusionMatrix cm(probs.cols(), std::vector<std::int64_t>(probs.cols(), 0));
  const auto pred = argmax_rows(probs);
  for (std::size_t i = 0; i < labels.size(); ++i) ++cm[labels[i]][pred[i]];
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  std::int64_t total = 0, trace = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    trace += cm[i][i];
    total += std::accumulate(cm[i].begin(), cm[i].end(), std::int64_t{0});
  }
  return safe_div(static_cast<double>(trace), static_cast<double>(total));
}

F1Scores f1_scores(const ConfusionMatrix& cm) {
  const std::size_t k = cm.size();
  for (const auto& row : cm) {
    if (row.size() != k) throw ShapeError("f1_scores: confusion matrix is not square");
  }
  F1Scores out;
  out.per_class.assign(k, 0.0);
  double macro_sum = 0.0, weighted_sum = 0.0, support_total = 0.0;
  std::size_t macro_n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double tp = static_cast<double>(cm[c][c]);
    double support = 0.0, predicted = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      support += static_cast<double>(cm[c][j]);
      predicted += static_cast<double>(cm[j][c]);
    }
    const double precision = safe_div(tp, predicted);
    const double recall = safe_div(tp, support);
    out.per_class[c] = safe_div(2.0 * precision * recall, precision + recall);
    if (support > 0.0 || predicted > 0.0) {
      macro_sum += out.per_class[c];
      ++macro_n;
    }
    weighted_sum += support * out.per_class[c];
    support_total += support;
  }
  out.macro = macro_n ? macro_sum / static_cast<double>(macro_n) : 0.0;
  out.weighted = safe_div(weighted_sum, support_total);
  return out;
}

std::vector<double> per_class_recall(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.size(), 0.0);
  for (std::size_t c = 0; c < cm.size(); ++c) {
    const auto support = std::accumulate(cm[c].begin(), cm[c].end(), std::int64_t{0});
    out[c] = safe_div(static_cast<double>(cm[c][c]), static_cast<double>(support));
  }
  return out;
}

double log_loss(const Matrix& probs, std::span<const int> labels) {
  return cross_entropy(probs, labels);
}

AucResult roc_auc_ovr_detailed(const Matrix& probs, std::span<const int> labels) {
  check_labels(probs, labels);
  const std::size_t n = labels.size();
  AucResult out;
  out.per_class.assign(probs.cols(), std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> order(n);
  std::vector<double> ranks(n);
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < probs.cols(); ++c) {
    std::size_t pos = 0;
    for (int y : labels) pos += static_cast<std::size_t>(y) == c;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
      out.skipped.push_back(static_cast<int>(c));
      continue;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return probs(a, c) < probs(b, c); });
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && probs(order[j + 1], c) == probs(order[i], c)) ++j;
      const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = midrank;
      i = j + 1;
    }
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (static_cast<std::size_t>(labels[i]) == c) rank_sum += ranks[i];
    }
    const double p = static_cast<double>(pos), q = static_cast<double>(neg);
    out.per_class[c] = (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
    sum += out.per_class[c];
    ++valid;
  }
  if (valid == 0) throw UndefinedMetricError("roc_auc_ovr: no class has both positives and negatives");
  out.macro = sum / static_cast<double>(valid);
  return out;
}

double roc_auc_ovr(const Matrix& probs, std::span<const int> labels) {
  AucResult r = roc_auc_ovr_detailed(probs, labels);
  for (int c : r.skipped) {
    std::cerr << "warning: roc_auc_ovr skips class " << c + 1
              << " (needs at least one positive and one negative)\n";
  }
  return r.macro;
}

Metrics compute_metrics(const Matrix& probs, std::span<const int> labels) {
  Metrics m;
  m.samples = labels.size();
  m.confusion = confusion_matrix(probs, labels);
  m.accuracy = accuracy(m.confusion);
  const F1Scores f1 = f1_scores(m.confusion);
  m.f1_macro = f1.macro;
  m.f1_weighted = f1.weighted;
  m.f1_per_class = f1.per_class;
  m.recall_per_class = per_class_recall(m.confusion);
  m.log_loss = log_loss(probs, labels);
  try {
    m.roc_auc_ovr_macro = roc_auc_ovr_detailed(probs, labels).macro;
  } catch (const UndefinedMetricError&) {
    m.roc_auc_ovr_macro = std::numeric_limits<double>::quiet_NaN();
  }

  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(m.accuracy) || !in_unit(m.f1_macro) || !in_unit(m.f1_weighted) ||
      !(m.log_loss >= 0.0) ||
      !(std::isnan(m.roc_auc_ovr_macro) || in_unit(m.roc_auc_ovr_macro))) {
    throw NumericError("compute_metrics: metric outside its valid range");
  }
  return m;
}

}  // namespace sea
