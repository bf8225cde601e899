// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sea/embedding.hpp"
#include "sea/matrix.hpp"
#include "sea/tape.hpp"

namespace sea {

struct SeaConfig {
  std::size_t d = 100;  // input embedding dimension
  std::size_t h = 128;  // hidden size of both recurrent cells
  std::size_t a = 64;   // attention dimension
  std::size_t classes = 9;
  std::size_t max_len = 1000;
  bool fine_tune_embeddings = false;

  void validate() const;
};

// Gate weights act on the concatenation [x; h], so each is h x (d + h).
// Biases are 1 x h rows.
struct LstmParams {
  Matrix W_i, W_f, W_o, W_c;
  Matrix b_i, b_f, b_o, b_c;
};

struct GruParams {
  Matrix W_z, W_r, W_h;
  Matrix b_z, b_r, b_h;
};

struct AttentionParams {
  Matrix W_a;  // a x h
  Matrix b_a;  // 1 x a
  Matrix v;    // 1 x a
};

struct SeaParams {
  Matrix embedding;  // V x d, only present when embeddings are fine-tuned
  LstmParams lstm;
  GruParams gru;
  AttentionParams attention;
  Matrix W_y;  // classes x h
  Matrix b_y;  // 1 x classes

  bool has_embedding() const noexcept { return !embedding.empty(); }
  // Canonical order: embedding (if present), lstm, gru, attention, head.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::size_t parameter_count() const;
};

std::vector<std::string> tensor_names(bool with_embedding);

// Glorot-uniform weights, zero biases except the LSTM forget bias (1.0).
// With fine-tuning enabled the embedding tensor starts as a copy of `initial_embedding`.
SeaParams init_params(const SeaConfig& cfg, std::uint64_t seed,
                      const Matrix* initial_embedding = nullptr);

// Recovers d, h, a and classes from tensor shapes; max_len keeps its default.
SeaConfig infer_config(const SeaParams& params);

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;
};

LstmState lstm_step(std::span<const double> x, const LstmState& state, const LstmParams& p);
std::vector<double> gru_step(std::span<const double> x, std::span<const double> h,
                             const GruParams& p);
// Element-wise (hl + hg) / 2.
Matrix fuse_mean(const Matrix& hl, const Matrix& hg);

struct AttentionPool {
  std::vector<double> context;
  std::vector<double> weights;
};
// score_t = v . tanh(W_a s_t + b_a), weights = softmax(scores), context = sum_t w_t s_t.
AttentionPool attention_pool(const Matrix& states, const AttentionParams& p);

struct ForwardResult {
  std::vector<double> probs;
  std::vector<double> attention;
};

// Embeds the first max_len tokens, runs the LSTM and GRU chains side by side
// from zero states, fuses per timestep, pools with attention and applies the
// softmax head. `embedding` is ignored when params carry their own.
ForwardResult forward(std::span<const int> tokens, const SeaParams& params, const SeaConfig& cfg,
                      const Matrix& embedding);

std::size_t count_trainable_parameters(const SeaConfig& cfg, std::size_t vocab_size = 0);

// Tape-side view of SeaParams for batched training.
struct SeaVars {
  ad::Var embedding;
  ad::Var W_i, W_f, W_o, W_c, b_i, b_f, b_o, b_c;
  ad::Var W_z, W_r, W_h, b_z, b_r, b_h;
  ad::Var W_a, b_a, v;
  ad::Var W_y, b_y;
};

// Binds tensors in canonical order. Without an embedding tensor the frozen
// embedding is used.
SeaVars bind_sea_vars(std::span<const ad::Var> tensors, std::optional<ad::Var> frozen_embedding);

struct BatchGraph {
  ad::Var logits;     // B x classes
  ad::Var attention;  // B x T, padded positions carry zero weight
};

// Sequences are truncated to max_len and right-padded; padding never reaches
// valid timesteps because the cells are unidirectional and padded scores are masked.
BatchGraph sea_batch_graph(const SeaVars& vars, std::span<const std::span<const int>> batch,
                           std::size_t max_len);

ad::Var sea_batch_loss(const SeaVars& vars, std::span<const std::span<const int>> batch,
                       std::vector<int> labels, std::vector<double> weights, std::size_t max_len);

// "SEA-CKPT 1" followed by "name rows cols" blocks in canonical order.
void save_checkpoint(const std::filesystem::path& path, const SeaParams& params);
SeaParams load_checkpoint(const std::filesystem::path& path);

}  // namespace sea
