// SPDX-License-Identifier: Apache-2.0
#include "sea/embedding.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "sea/errors.hpp"
#include "sea/optim.hpp"
#include "sea/textio.hpp"

namespace sea {

void WindowConfig::validate() const {
  if (n < 3 || n % 2 == 0) throw DomainError("window width must be odd and >= 3");
  if (d < 2) throw DomainError("embedding dimension must be >= 2");
  if (epochs < 1) throw DomainError("embedding epochs must be >= 1");
  if (batch_size < 1) throw DomainError("embedding batch size must be >= 1");
  if (!(lr > 0.0)) throw DomainError("embedding learning rate must be positive");
}

std::size_t window_count(std::size_t length, std::size_t n) noexcept {
  return length >= n ? length - n + 1 : 0;
}

std::vector<Window> slide_windows(std::span<const int> tokens, std::size_t n) {
  std::vector<Window> out;
  if (n == 0 || tokens.size() < n) return out;
  const std::size_t half = n / 2;
  out.reserve(window_count(tokens.size(), n));
  for (std::size_t k = 0; k + n <= tokens.size(); ++k) {
    Window w;
    w.center = tokens[k + half];
    for (std::size_t j = 0; j < n; ++j) {
      if (j != half) w.context.push_back(tokens[k + j]);
    }
    out.push_back(std::move(w));
  }
  return out;
}

ad::Var cbow_loss(ad::Var input, ad::Var output, std::span<const Window> batch) {
  if (batch.empty()) throw EmptySequenceError("cbow_loss: empty batch");
  const std::size_t width = batch.front().context.size();
  std::vector<ad::Var> parts;
  std::vector<int> centers;
  for (std::size_t j = 0; j < width; ++j) {
    std::vector<int> ids;
    ids.reserve(batch.size());
    for (const Window& w : batch) ids.push_back(w.context.at(j));
    parts.push_back(ad::gather_rows(input, std::move(ids)));
  }
  for (const Window& w : batch) centers.push_back(w.center);
  const ad::Var hidden = ad::scale(ad::sum(parts), 1.0 / static_cast<double>(width));
  return ad::softmax_cross_entropy(ad::matmul_nt(hidden, output), std::move(centers));
}

EmbeddingTrainResult train_embeddings(const LabeledDataset& corpus, std::size_t vocab_size,
                                      const WindowConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (corpus.samples.empty()) throw EmptyCorpusError("train_embeddings: empty corpus");
  if (vocab_size < 1) throw DomainError("train_embeddings: empty vocabulary");

  // (sample, start) pairs; windows are materialized per batch.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> starts;
  for (std::size_t s = 0; s < corpus.samples.size(); ++s) {
    const auto& toks = corpus.samples[s].tokens;
    for (int id : toks) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw IndexError("train_embeddings: token id " + std::to_string(id) +
                         " outside vocabulary of " + std::to_string(vocab_size));
      }
    }
    for (std::size_t k = 0; k < window_count(toks.size(), cfg.n); ++k) {
      starts.emplace_back(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(k));
    }
  }
  if (starts.empty()) throw EmptyCorpusError("train_embeddings: no sequence fills a window");

  std::mt19937_64 rng(seed);
  EmbeddingTrainResult result;
  EmbeddingMatrix& emb = result.embedding;
  emb.vectors = Matrix(vocab_size, cfg.d);
  emb.output_weights = Matrix(vocab_size, cfg.d);
  std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(cfg.d),
                                              0.5 / static_cast<double>(cfg.d));
  for (double& v : emb.vectors.values()) v = init(rng);

  AdamState adam;
  adam.lr = cfg.lr;
  Matrix* params[] = {&emb.vectors, &emb.output_weights};
  const std::size_t half = cfg.n / 2;
  std::vector<Window> batch;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(starts.begin(), starts.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < starts.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(starts.size(), b + cfg.batch_size);
      batch.clear();
      for (std::size_t i = b; i < end; ++i) {
        const auto& toks = corpus.samples[starts[i].first].tokens;
        const std::size_t k = starts[i].second;
        Window w;
        w.center = toks[k + half];
        for (std::size_t j = 0; j < cfg.n; ++j) {
          if (j != half) w.context.push_back(toks[k + j]);
        }
        batch.push_back(std::move(w));
      }
      ad::Tape tape;
      const ad::Var in = tape.parameter(emb.vectors);
      const ad::Var out = tape.parameter(emb.output_weights);
      const ad::Var loss = cbow_loss(in, out, batch);
      total += loss.value()[0] * static_cast<double>(batch.size());
      tape.backward(loss, true);
      const Matrix grads[] = {in.grad(), out.grad()};
      adam_step(params, grads, adam);
    }
    result.loss_history.push_back(total / static_cast<double>(starts.size()));
  }
  if (!emb.vectors.all_finite()) throw NumericError("train_embeddings: diverged");
  return result;
}

Matrix embed_sequence(std::span<const int> tokens, const EmbeddingMatrix& emb, std::size_t max_len) {
  if (max_len < 1) throw DomainError("embed_sequence: max_len must be >= 1");
  if (tokens.empty()) throw EmptySequenceError("embed_sequence: empty token sequence");
  const std::size_t t_len = std::min(tokens.size(), max_len);
  Matrix out(t_len, emb.dim());
  for (std::size_t t = 0; t < t_len; ++t) {
    const int id = tokens[t];
    if (id < 0 || static_cast<std::size_t>(id) >= emb.vocab_size()) {
      throw IndexError("embed_sequence: token id " + std::to_string(id) + " out of range");
    }
    auto src = emb.vectors.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(t).begin());
  }
  return out;
}

std::vector<double> document_embedding(std::span<const int> tokens, const EmbeddingMatrix& emb) {
  if (tokens.empty()) throw EmptySequenceError("document_embedding: empty token sequence");
  std::vector<double> mean(emb.dim(), 0.0);
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= emb.vocab_size()) {
      throw IndexError("document_embedding: token id " + std::to_string(id) + " out of range");
    }
    auto row = emb.vectors.row(static_cast<std::size_t>(id));
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += row[c];
  }
  for (double& v : mean) v /= static_cast<double>(tokens.size());
  return mean;
}

void save_embedding(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                    std::span<const std::string> tokens) {
  if (tokens.size() != emb.vocab_size()) {
    throw CompatibilityError("save_embedding: " + std::to_string(tokens.size()) +
                             " tokens for " + std::to_string(emb.vocab_size()) + " vectors");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  out << "SEA-EMB 1 " << emb.vocab_size() << ' ' << emb.dim() << '\n';
  for (std::size_t i = 0; i < emb.vocab_size(); ++i) {
    out << tokens[i];
    for (double v : emb.vectors.row(i)) out << ' ' << textio::format_double(v);
    out << '\n';
  }
}

LoadedEmbedding load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open embedding " + path.string(), 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty embedding file", 1);
  const auto head = textio::split_whitespace(line);
  if (head.size() != 4 || head[0] != "SEA-EMB" || head[1] != "1") {
    throw ParseError("embedding header must be 'SEA-EMB 1 <V> <d>'", 1);
  }
  const auto vocab = static_cast<std::size_t>(textio::parse_int(head[2], 1));
  const auto dim = static_cast<std::size_t>(textio::parse_int(head[3], 1));
  LoadedEmbedding loaded;
  loaded.embedding.vectors = Matrix(vocab, dim);
  for (std::size_t i = 0; i < vocab; ++i) {
    const std::size_t lineno = i + 2;
    if (!std::getline(in, line)) throw ParseError("embedding file truncated", lineno);
    const auto parts = textio::split_whitespace(line);
    if (parts.size() != dim + 1) throw ParseError("embedding row has wrong width", lineno);
    loaded.tokens.emplace_back(parts[0]);
    auto row = loaded.embedding.vectors.row(i);
    for (std::size_t c = 0; c < dim; ++c) row[c] = textio::parse_double(parts[c + 1], lineno);
  }
  return loaded;
}

}  // namespace sea
