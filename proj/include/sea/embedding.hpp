// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sea/corpus.hpp"
#include "sea/matrix.hpp"
#include "sea/tape.hpp"

namespace sea {

struct WindowConfig {
  std::size_t n = 5;  // window width, odd
  std::size_t d = 100;
  std::size_t epochs = 100;
  double lr = 5e-3;
  std::size_t batch_size = 256;

  void validate() const;
};

struct EmbeddingMatrix {
  Matrix vectors;         // V x d, input side
  Matrix output_weights;  // V x d, softmax side; only needed while training

  std::size_t vocab_size() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
};

struct Window {
  std::vector<int> context;
  int center = 0;
};

// Stride-1 windows; empty when the sequence is shorter than n.
std::vector<Window> slide_windows(std::span<const int> tokens, std::size_t n);
std::size_t window_count(std::size_t length, std::size_t n) noexcept;

// Mean of the context rows of `input`, full softmax over `output` rows,
// cross-entropy against the centers.
ad::Var cbow_loss(ad::Var input, ad::Var output, std::span<const Window> batch);

struct EmbeddingTrainResult {
  EmbeddingMatrix embedding;
  std::vector<double> loss_history;  // mean loss per epoch
};

// CBOW center-word prediction over every window of every sample, Adam
// updates, windows shuffled per epoch from the seed.
EmbeddingTrainResult train_embeddings(const LabeledDataset& corpus, std::size_t vocab_size,
                                      const WindowConfig& cfg, std::uint64_t seed);

// Row t is the vector of token t; only the first max_len tokens are used.
Matrix embed_sequence(std::span<const int> tokens, const EmbeddingMatrix& emb, std::size_t max_len);
std::vector<double> document_embedding(std::span<const int> tokens, const EmbeddingMatrix& emb);

// Header "SEA-EMB 1 <V> <d>", then one "token v1 ... vd" line per id.
void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                    std::span<const std::string> tokens);

struct LoadedEmbedding {
  EmbeddingMatrix embedding;
  std::vector<std::string> tokens;
};
LoadedEmbedding load_embedding(const std::filesystem::path& path);

}  // namespace sea
