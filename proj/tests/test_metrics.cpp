// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sea/errors.hpp"
#include "sea/metrics.hpp"

using sea::Matrix;

namespace {

std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(0, classes - 1);
  std::vector<int> y(n);
  for (int& v : y) v = c(rng);
  return y;
}

Matrix one_hot(const std::vector<int>& labels, std::size_t classes) {
  Matrix p(labels.size(), classes);
  for (std::size_t r = 0; r < labels.size(); ++r) p(r, labels[r]) = 1.0;
  return p;
}

}  // namespace

TEST(Metrics, RandomTablesMatchBruteForceOracles) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> rows(1, 30), classes(2, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rows(rng), k = classes(rng);
    const Matrix probs = oracle::random_probs(n, k, rng);
    const auto labels = random_labels(n, static_cast<int>(k), rng);

    const auto m = sea::compute_metrics(probs, labels);
    EXPECT_EQ(m.samples, n);
    EXPECT_EQ(m.confusion, oracle::confusion(probs, labels));
    EXPECT_NEAR(m.accuracy, oracle::accuracy(probs, labels), 1e-9);
    EXPECT_NEAR(m.log_loss, oracle::log_loss(probs, labels), 1e-9);

    std::vector<int> pred;
    for (std::size_t r = 0; r < n; ++r) pred.push_back(oracle::argmax(probs, r));
    const auto f1 = oracle::f1_from_labels(labels, pred, k);
    EXPECT_NEAR(m.f1_macro, f1.macro, 1e-9);
    EXPECT_NEAR(m.f1_weighted, f1.weighted, 1e-9);
    for (std::size_t c = 0; c < k; ++c) EXPECT_NEAR(m.f1_per_class[c], f1.per_class[c], 1e-9);

    const double auc = oracle::auc_ovr(probs, labels);
    if (std::isnan(auc)) {
      EXPECT_TRUE(std::isnan(m.roc_auc_ovr_macro));
    } else {
      EXPECT_NEAR(m.roc_auc_ovr_macro, auc, 1e-9);
    }
  }
}

TEST(Metrics, PerfectPredictor) {
  std::mt19937_64 rng(1);
  const auto labels = random_labels(40, 5, rng);
  const auto m = sea::compute_metrics(one_hot(labels, 5), labels);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.f1_macro, 1.0);
  EXPECT_EQ(m.f1_weighted, 1.0);
  EXPECT_LE(m.log_loss, 1.12e-15);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t p = 0; p < 5; ++p)
      if (t != p) EXPECT_EQ(m.confusion[t][p], 0);
}

TEST(Metrics, UniformNineClassLogLoss) {
  std::mt19937_64 rng(2);
  const auto labels = random_labels(100, 9, rng);
  EXPECT_NEAR(sea::log_loss(Matrix(100, 9, 1.0 / 9.0), labels), std::log(9.0), 1e-9);
}

TEST(Metrics, ShapeAndLabelErrors) {
  const Matrix p(3, 2, 0.5);
  EXPECT_THROW((void)sea::compute_metrics(p, std::vector<int>{0, 1}), sea::ShapeError);
  EXPECT_THROW((void)sea::compute_metrics(p, std::vector<int>{0, 1, 2}), sea::IndexError);
  EXPECT_THROW((void)sea::confusion_matrix(p, std::vector<int>{0, -1, 1}), sea::IndexError);
}

TEST(F1, ThreeClassFixture) {
  const sea::ConfusionMatrix cm = {{5, 1, 0}, {1, 3, 1}, {0, 2, 4}};
  const auto f1 = sea::f1_scores(cm);
  // P = (5/6, 3/6, 4/5), R = (5/6, 3/5, 4/6).
  EXPECT_NEAR(f1.per_class[0], 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(f1.per_class[1], 6.0 / 11.0, 1e-12);
  EXPECT_NEAR(f1.per_class[2], 8.0 / 11.0, 1e-12);
  EXPECT_NEAR(f1.macro, 139.0 / 198.0, 1e-12);
  EXPECT_NEAR(f1.weighted, 133.0 / 187.0, 1e-12);
  const auto ref = oracle::f1_from_confusion(cm);
  EXPECT_NEAR(f1.macro, ref.macro, 1e-12);
  EXPECT_NEAR(f1.weighted, ref.weighted, 1e-12);
}

TEST(F1, DiagonalAndAbsentClass) {
  const sea::ConfusionMatrix diag = {{3, 0, 0}, {0, 2, 0}, {0, 0, 7}};
  const auto f = sea::f1_scores(diag);
  EXPECT_EQ(f.per_class, (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(f.macro, 1.0);
  // Class 2 is neither present nor predicted.
  const sea::ConfusionMatrix absent = {{3, 1, 0}, {0, 2, 0}, {0, 0, 0}};
  const auto g = sea::f1_scores(absent);
  EXPECT_EQ(g.per_class[2], 0.0);
  EXPECT_NEAR(g.macro, (g.per_class[0] + g.per_class[1]) / 2.0, 1e-15);
  EXPECT_NEAR(g.weighted, (4 * g.per_class[0] + 2 * g.per_class[1]) / 6.0, 1e-15);
  EXPECT_THROW((void)sea::f1_scores({{1, 0}, {0}}), sea::ShapeError);
}

TEST(Recall, PerClass) {
  const sea::ConfusionMatrix cm = {{5, 1, 0}, {1, 3, 1}, {0, 0, 0}};
  EXPECT_EQ(sea::per_class_recall(cm), (std::vector<double>{5.0 / 6.0, 3.0 / 5.0, 0.0}));
}

TEST(Auc, PerfectSeparationAndTies) {
  const std::vector<int> labels = {0, 1, 0, 1, 1};
  Matrix sep(5, 2);
  for (std::size_t r = 0; r < 5; ++r) {
    sep(r, 1) = labels[r] == 1 ? 0.9 - 0.01 * r : 0.1 + 0.01 * r;
    sep(r, 0) = 1.0 - sep(r, 1);
  }
  EXPECT_EQ(sea::roc_auc_ovr(sep, labels), 1.0);
  EXPECT_EQ(sea::roc_auc_ovr(Matrix(5, 2, 0.5), labels), 0.5);
}

TEST(Auc, RandomTwentySampleCaseMatchesPairCounting) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix probs = oracle::random_probs(20, 4, rng);
    const auto labels = random_labels(20, 4, rng);
    const auto detailed = sea::roc_auc_ovr_detailed(probs, labels);
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<double> s;
      std::vector<bool> pos;
      std::size_t npos = 0;
      for (std::size_t r = 0; r < 20; ++r) {
        s.push_back(probs(r, c));
        pos.push_back(labels[r] == static_cast<int>(c));
        npos += pos.back();
      }
      if (npos == 0 || npos == 20) {
        EXPECT_TRUE(std::isnan(detailed.per_class[c]));
        continue;
      }
      EXPECT_NEAR(detailed.per_class[c], oracle::auc_pairs(s, pos), 1e-12);
    }
    EXPECT_NEAR(detailed.macro, oracle::auc_ovr(probs, labels), 1e-12);
  }
}

TEST(Auc, SkipsDegenerateClassesAndFailsWhenAllSkipped) {
  const std::vector<int> labels = {0, 1, 0, 1};
  Matrix p(4, 3, 1.0 / 3.0);
  const auto d = sea::roc_auc_ovr_detailed(p, labels);
  EXPECT_EQ(d.skipped, std::vector<int>{2});
  EXPECT_TRUE(std::isnan(d.per_class[2]));
  EXPECT_THROW((void)sea::roc_auc_ovr_detailed(Matrix(3, 2, 0.5), std::vector<int>{1, 1, 1}),
               sea::UndefinedMetricError);
  const auto m = sea::compute_metrics(Matrix(3, 2, 0.5), std::vector<int>{1, 1, 1});
  EXPECT_TRUE(std::isnan(m.roc_auc_ovr_macro));
}

TEST(Metrics, RangeInvariantsOnRandomTables) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix probs = oracle::random_probs(25, 6, rng);
    const auto labels = random_labels(25, 6, rng);
    const auto m = sea::compute_metrics(probs, labels);
    for (double v : {m.accuracy, m.f1_macro, m.f1_weighted}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(m.log_loss, 0.0);
    std::int64_t total = 0;
    for (const auto& row : m.confusion)
      for (auto v : row) total += v;
    EXPECT_EQ(total, 25);
  }
}
