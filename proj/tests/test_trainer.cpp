// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "sea/embedding.hpp"
#include "sea/errors.hpp"
#include "sea/trainer.hpp"

namespace fs = std::filesystem;
using sea::Matrix;

namespace {

struct Fixture {
  sea::SyntheticCorpus corpus;
  Matrix embedding;
  sea::SeaConfig model;
  sea::TrainConfig train;
};

Fixture small_setup(std::vector<std::size_t> counts, std::uint64_t seed = 7) {
  Fixture f;
  sea::SyntheticSpec spec;
  spec.class_counts = std::move(counts);
  spec.vocab_size = 24;
  spec.seq_len = 40;
  spec.motif_fraction = 0.1;
  spec.seed = seed;
  f.corpus = sea::generate_synthetic_corpus(spec);
  sea::WindowConfig wc;
  wc.d = 8;
  wc.epochs = 20;
  wc.lr = 1e-2;
  wc.batch_size = 64;
  f.embedding =
      sea::train_embeddings(f.corpus.dataset, f.corpus.vocab.size(), wc, seed).embedding.vectors;
  f.model.d = 8;
  f.model.h = 8;
  f.model.a = 8;
  f.model.classes = f.corpus.dataset.num_classes();
  f.model.max_len = 40;
  f.train.epochs = 3;
  f.train.folds = 3;
  f.train.lr = 1e-2;
  f.train.batch_size = 8;
  f.train.seed = seed;
  return f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(TrainConfig, Validation) {
  sea::TrainConfig c;
  c.validate();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), sea::DomainError);
  c = {};
  c.folds = 1;
  EXPECT_THROW(c.validate(), sea::DomainError);
  c = {};
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), sea::DomainError);
}

TEST(Train, FirstEpochLossNearUniform) {
  auto f = small_setup({12, 12, 12, 12});
  f.train.epochs = 1;
  f.train.lr = 1e-4;
  const auto r = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  ASSERT_EQ(r.loss_history.size(), 1u);
  EXPECT_NEAR(r.loss_history[0], std::log(4.0), 0.1);
}

TEST(Train, DeterministicForSeed) {
  auto f = small_setup({6, 6, 6});
  const auto a = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  const auto b = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  EXPECT_EQ(a.loss_history, b.loss_history);
  const auto pa = a.params.tensors(), pb = b.params.tensors();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(*pa[i], *pb[i]);
  f.train.seed += 1;
  EXPECT_NE(sea::train(f.corpus.dataset, f.embedding, f.model, f.train).loss_history, a.loss_history);
}

TEST(Train, FitsSyntheticMotifs) {
  auto f = small_setup({10, 10, 10});
  f.train.epochs = 50;
  f.train.target_loss = 0.1;
  const auto r = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  EXPECT_LE(r.loss_history.size(), 50u);
  EXPECT_LT(r.loss_history.back(), 0.1);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
}

TEST(Train, RejectsSingleClassAndBadInputs) {
  auto f = small_setup({6, 6});
  std::vector<std::size_t> first_class;
  for (std::size_t i = 0; i < f.corpus.dataset.size(); ++i)
    if (f.corpus.dataset.samples[i].label == 0) first_class.push_back(i);
  EXPECT_THROW((void)sea::train(f.corpus.dataset, f.embedding, f.model, f.train, first_class),
               sea::DomainError);
  EXPECT_THROW((void)sea::train(f.corpus.dataset, Matrix(f.embedding.rows(), 5), f.model, f.train),
               sea::CompatibilityError);
  sea::LabeledDataset empty;
  empty.class_names = f.corpus.dataset.class_names;
  EXPECT_THROW((void)sea::train(empty, f.embedding, f.model, f.train), sea::EmptyCorpusError);
}

TEST(Train, ClassWeightingChangesLossNotMetrics) {
  auto f = small_setup({12, 4, 6});
  const auto plain = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  f.train.class_weighting = true;
  const auto weighted = sea::train(f.corpus.dataset, f.embedding, f.model, f.train);
  EXPECT_NE(plain.loss_history, weighted.loss_history);

  // Evaluation sees only probabilities, whatever the training weights were.
  const auto report = sea::evaluate(weighted.params, f.model, f.embedding, f.corpus.dataset);
  std::vector<std::size_t> all(f.corpus.dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Matrix probs = sea::predict_probs(weighted.params, f.model, f.embedding, f.corpus.dataset, all);
  const auto direct = sea::compute_metrics(probs, f.corpus.dataset.labels());
  EXPECT_EQ(report.pooled.accuracy, direct.accuracy);
  EXPECT_EQ(report.pooled.log_loss, direct.log_loss);
  EXPECT_EQ(report.pooled.confusion, direct.confusion);
  EXPECT_TRUE(report.per_fold.empty());
}

TEST(KFold, EverySamplePredictedOnceAndPooledIsConsistent) {
  auto f = small_setup({10, 10, 5, 5, 5});
  f.train.folds = 5;
  f.train.epochs = 2;
  const auto r = sea::kfold_validate(f.corpus.dataset, f.embedding, f.model, f.train);
  ASSERT_EQ(r.report.per_fold.size(), 5u);
  ASSERT_EQ(r.fold_params.size(), 5u);
  ASSERT_EQ(r.fold_loss_histories.size(), 5u);

  std::vector<int> seen(f.corpus.dataset.size(), 0);
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t i : r.split.test_indices(k)) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);

  const auto& pooled = r.report.pooled;
  std::int64_t trace = 0, total = 0;
  sea::ConfusionMatrix summed(5, std::vector<std::int64_t>(5, 0));
  for (const auto& m : r.report.per_fold)
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t p = 0; p < 5; ++p) summed[t][p] += m.confusion[t][p];
  EXPECT_EQ(summed, pooled.confusion);
  for (std::size_t t = 0; t < 5; ++t) {
    trace += pooled.confusion[t][t];
    const auto row = std::accumulate(pooled.confusion[t].begin(), pooled.confusion[t].end(),
                                     std::int64_t{0});
    total += row;
    const auto labels = f.corpus.dataset.labels();
    EXPECT_EQ(row, std::count(labels.begin(), labels.end(), static_cast<int>(t)));
  }
  EXPECT_EQ(pooled.accuracy, static_cast<double>(trace) / static_cast<double>(total));
  EXPECT_EQ(pooled.samples, f.corpus.dataset.size());

  // Held-out rows come from the fold model that never saw them.
  for (std::size_t k = 0; k < 5; ++k) {
    const auto idx = r.split.test_indices(k);
    const Matrix probs = sea::predict_probs(r.fold_params[k], f.model, f.embedding, f.corpus.dataset, idx);
    for (std::size_t j = 0; j < idx.size(); ++j)
      for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(probs(j, c), r.held_out_probs(idx[j], c));
  }
}

TEST(KFold, ParallelMatchesSerial) {
  auto f = small_setup({8, 8, 8});
  const auto serial = sea::kfold_validate(f.corpus.dataset, f.embedding, f.model, f.train);
  f.train.fold_workers = 3;
  const auto parallel = sea::kfold_validate(f.corpus.dataset, f.embedding, f.model, f.train);
  EXPECT_EQ(serial.held_out_probs, parallel.held_out_probs);
  EXPECT_EQ(serial.fold_loss_histories, parallel.fold_loss_histories);
  EXPECT_EQ(sea::report_json(serial.report, f.corpus.dataset.class_names),
            sea::report_json(parallel.report, f.corpus.dataset.class_names));
}

TEST(Reports, WritersProduceParseableTables) {
  auto f = small_setup({6, 6, 6});
  f.train.epochs = 1;
  const auto r = sea::kfold_validate(f.corpus.dataset, f.embedding, f.model, f.train);
  const fs::path dir = fs::temp_directory_path() / "sea_report_test";
  fs::create_directories(dir);

  sea::write_report_json(dir / "r.json", r.report, f.corpus.dataset.class_names);
  const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
  EXPECT_EQ(j["per_fold"].size(), 3u);
  EXPECT_EQ(j["f1_headline"], "macro");
  EXPECT_EQ(j["confusion_scope"], "pooled over folds");
  EXPECT_DOUBLE_EQ(j["pooled"]["accuracy"].get<double>(), r.report.pooled.accuracy);

  sea::write_report_csv(dir / "r.csv", r.report);
  std::istringstream csv(slurp(dir / "r.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "fold,samples,accuracy,f1_macro,f1_weighted,log_loss,roc_auc_ovr_macro");
  EXPECT_EQ(lines[4].rfind("pooled,18,", 0), 0u);

  sea::write_confusion_csv(dir / "c.csv", {{1, 2}, {3, 4}});
  EXPECT_EQ(slurp(dir / "c.csv"), "true\\predicted,1,2\n1,1,2\n2,3,4\n");
  const std::vector<std::vector<double>> hist = {{0.5, 0.25}, {1.0}};
  sea::write_loss_csv(dir / "l.csv", hist);
  EXPECT_EQ(slurp(dir / "l.csv"), "run,epoch,loss\n1,1,0.5\n1,2,0.25\n2,1,1\n");
  fs::remove_all(dir);
}
