// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sea/embedding.hpp"
#include "sea/errors.hpp"
#include "sea/gradcheck.hpp"

namespace fs = std::filesystem;
using sea::Matrix;

namespace {

sea::LabeledDataset dataset_of(std::vector<std::vector<int>> seqs) {
  sea::LabeledDataset ds;
  ds.class_names = {"only"};
  for (std::size_t i = 0; i < seqs.size(); ++i) ds.samples.push_back({"s" + std::to_string(i), seqs[i], 0});
  return ds;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(SlideWindows, SingleWindow) {
  const std::vector<int> t = {10, 11, 12, 13, 14};
  const auto w = sea::slide_windows(t, 5);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].context, (std::vector<int>{10, 11, 13, 14}));
  EXPECT_EQ(w[0].center, 12);
}

TEST(SlideWindows, CountsAndShortSequences) {
  const std::vector<int> seven = {1, 2, 3, 4, 5, 6, 7};
  const auto w = sea::slide_windows(seven, 5);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2].center, 5);
  const std::vector<int> four = {1, 2, 3, 4};
  EXPECT_TRUE(sea::slide_windows(four, 5).empty());
}

TEST(SlideWindows, CountMatchesFormulaExhaustively) {
  for (std::size_t n : {3u, 5u, 7u}) {
    for (std::size_t len = 0; len <= 50; ++len) {
      std::vector<int> t(len);
      std::iota(t.begin(), t.end(), 0);
      const std::size_t expected = len >= n ? len - n + 1 : 0;
      EXPECT_EQ(sea::slide_windows(t, n).size(), expected);
      EXPECT_EQ(sea::window_count(len, n), expected);
    }
  }
}

TEST(WindowConfig, Invariants) {
  sea::WindowConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.n, 5u);
  EXPECT_EQ(cfg.d, 100u);
  cfg.n = 4;
  EXPECT_THROW(cfg.validate(), sea::DomainError);
  cfg.n = 1;
  EXPECT_THROW(cfg.validate(), sea::DomainError);
  cfg = {};
  cfg.d = 1;
  EXPECT_THROW(cfg.validate(), sea::DomainError);
}

TEST(CbowLoss, GradientCheck) {
  std::mt19937_64 rng(6);
  const std::vector<int> tokens = {0, 3, 5, 1, 1, 2, 4, 5, 0, 3};
  const auto windows = sea::slide_windows(tokens, 5);
  const std::vector<Matrix> params = {oracle::random_matrix(6, 4, rng), oracle::random_matrix(6, 4, rng)};
  auto fn = [&windows](sea::ad::Tape&, std::span<const sea::ad::Var> p) {
    return sea::cbow_loss(p[0], p[1], windows);
  };
  EXPECT_LE(sea::gradient_check(fn, params, 1e-5), 1e-6);
}

TEST(CbowLoss, ValueMatchesHandComputation) {
  std::mt19937_64 rng(8);
  const Matrix in = oracle::random_matrix(6, 3, rng), out = oracle::random_matrix(6, 3, rng);
  const std::vector<int> tokens = {1, 2, 3, 4, 5, 0};
  const auto windows = sea::slide_windows(tokens, 5);
  sea::ad::Tape tape;
  const auto loss = sea::cbow_loss(tape.parameter(in), tape.parameter(out), windows);
  double expected = 0.0;
  for (const auto& w : windows) {
    std::vector<double> h(3, 0.0);
    for (int c : w.context)
      for (std::size_t k = 0; k < 3; ++k) h[k] += in(c, k) / 4.0;
    std::vector<double> logit(6, 0.0);
    double z = 0.0;
    for (std::size_t v = 0; v < 6; ++v) {
      for (std::size_t k = 0; k < 3; ++k) logit[v] += h[k] * out(v, k);
      z += std::exp(logit[v]);
    }
    expected += -(logit[w.center] - std::log(z));
  }
  EXPECT_NEAR(loss.value()(0, 0), expected / windows.size(), 1e-12);
}

TEST(TrainEmbeddings, BeatsUniformBaselineAndIsDeterministic) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> tok(1, 7);
  std::vector<std::vector<int>> seqs(6);
  // Strongly patterned: every token is followed by its successor most of the time.
  for (auto& s : seqs) {
    int t = tok(rng);
    for (int i = 0; i < 60; ++i) {
      s.push_back(t);
      t = (i % 5 == 4) ? tok(rng) : t % 7 + 1;
    }
  }
  sea::WindowConfig cfg;
  cfg.d = 6;
  cfg.epochs = 30;
  cfg.lr = 0.02;
  cfg.batch_size = 32;
  const auto a = sea::train_embeddings(dataset_of(seqs), 8, cfg, 17);
  EXPECT_LT(a.loss_history.back(), std::log(8.0));
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
  const auto b = sea::train_embeddings(dataset_of(seqs), 8, cfg, 17);
  EXPECT_EQ(a.embedding.vectors, b.embedding.vectors);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(TrainEmbeddings, IdenticalContextsGiveSimilarVectors) {
  // Tokens 7 and 8 are interchangeable: wherever one appears the other could.
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> bg(1, 6);
  std::bernoulli_distribution pick(0.5), plant(0.2);
  std::vector<std::vector<int>> seqs(10);
  for (auto& s : seqs) {
    for (int i = 0; i < 200; ++i) {
      if (i > 0 && plant(rng)) {
        s.push_back(pick(rng) ? 7 : 8);
        s.push_back((s[s.size() - 2] % 6) + 1);  // context determined by the left neighbor
      } else {
        s.push_back(bg(rng));
      }
    }
  }
  sea::WindowConfig cfg;
  cfg.d = 8;
  cfg.epochs = 100;
  cfg.lr = 0.01;
  cfg.batch_size = 128;
  const auto r = sea::train_embeddings(dataset_of(seqs), 9, cfg, 5);
  const double cos = cosine(r.embedding.vectors.row(7), r.embedding.vectors.row(8));
  EXPECT_GE(cos, 0.8) << "cosine " << cos;
}

TEST(TrainEmbeddings, EmptyCorpusIsRejected) {
  sea::WindowConfig cfg;
  EXPECT_THROW((void)sea::train_embeddings(dataset_of({}), 5, cfg, 1), sea::EmptyCorpusError);
  EXPECT_THROW((void)sea::train_embeddings(dataset_of({{1, 2}}), 5, cfg, 1), sea::EmptyCorpusError);
}

TEST(EmbedSequence, RowsAndTruncation) {
  std::mt19937_64 rng(4);
  sea::EmbeddingMatrix emb{oracle::random_matrix(5, 3, rng), {}};
  const std::vector<int> one = {3};
  const Matrix m = sea::embed_sequence(one, emb, 10);
  ASSERT_EQ(m.rows(), 1u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(m(0, k), emb.vectors(3, k));
  const std::vector<int> long_seq(2000, 2);
  EXPECT_EQ(sea::embed_sequence(long_seq, emb, 1000).rows(), 1000u);
  const std::vector<int> unk(4, 0);
  const Matrix u = sea::embed_sequence(unk, emb, 10);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(u(t, k), emb.vectors(0, k));
  EXPECT_THROW((void)sea::embed_sequence(std::vector<int>{}, emb, 10), sea::EmptySequenceError);
}

TEST(DocumentEmbedding, MeanOfRows) {
  std::mt19937_64 rng(4);
  sea::EmbeddingMatrix emb{oracle::random_matrix(6, 4, rng), {}};
  const std::vector<int> one = {2};
  const auto single = sea::document_embedding(one, emb);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(single[k], emb.vectors(2, k));

  for (std::size_t k = 0; k < 4; ++k) emb.vectors(5, k) = -emb.vectors(4, k);
  const std::vector<int> opposite = {4, 5};
  for (double v : sea::document_embedding(opposite, emb)) EXPECT_NEAR(v, 0.0, 1e-15);

  std::uniform_int_distribution<int> id(0, 5);
  std::vector<int> doc(10);
  for (int& t : doc) t = id(rng);
  const auto mean = sea::document_embedding(doc, emb);
  for (std::size_t k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int t : doc) s += emb.vectors(t, k);
    EXPECT_NEAR(mean[k], s / 10.0, 1e-12);
  }
  std::vector<int> shuffled = doc;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto again = sea::document_embedding(shuffled, emb);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(again[k], mean[k], 1e-12);
  EXPECT_THROW((void)sea::document_embedding(std::vector<int>{}, emb), sea::EmptySequenceError);
}

TEST(EmbeddingFile, RoundTripIsExact) {
  std::mt19937_64 rng(2);
  sea::EmbeddingMatrix emb{oracle::random_matrix(3, 5, rng, -1e3, 1e3), {}};
  emb.vectors(1, 1) = 1e-300;
  const std::vector<std::string> tokens = {"<unk>", "push", "mov"};
  const fs::path p = fs::temp_directory_path() / "sea_embedding_test.sea";
  sea::save_embedding(p, emb, tokens);
  const auto back = sea::load_embedding(p);
  EXPECT_EQ(back.embedding.vectors, emb.vectors);
  EXPECT_EQ(back.tokens, tokens);
  EXPECT_THROW(sea::save_embedding(p, emb, std::vector<std::string>{"x"}), sea::CompatibilityError);
  fs::remove(p);
}

TEST(TrainEmbeddings, SmoothedLossIsNonIncreasingOnSyntheticCorpus) {
  sea::SyntheticSpec spec;
  spec.class_counts = {6, 6, 6, 3, 2, 3, 2, 4, 4};
  spec.seq_len = 200;
  const auto corpus = sea::generate_synthetic_corpus(spec);
  sea::WindowConfig cfg;
  cfg.d = 8;
  cfg.epochs = 20;
  cfg.lr = 0.01;
  cfg.batch_size = 256;
  const auto r = sea::train_embeddings(corpus.dataset, corpus.vocab.size(), cfg, 42);
  std::vector<double> means;
  for (std::size_t e = 0; e + 5 <= r.loss_history.size(); e += 5) {
    means.push_back(std::accumulate(r.loss_history.begin() + e, r.loss_history.begin() + e + 5, 0.0) / 5);
  }
  for (std::size_t i = 1; i < means.size(); ++i) EXPECT_LE(means[i], means[i - 1]) << "block " << i;
  EXPECT_LT(r.loss_history.back(), std::log(static_cast<double>(corpus.vocab.size())));
}
