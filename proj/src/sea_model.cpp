// SPDX-License-Identifier: Apache-2.0
#include "sea/sea_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "sea/errors.hpp"
#include "sea/textio.hpp"

namespace sea {

namespace {

constexpr double kMaskedScore = -1e30;

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + " is " + m.shape_string() + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

// out = b + W . [x; h]
std::vector<double> affine(const Matrix& W, const Matrix& b, std::span<const double> xh) {
  std::vector<double> out(W.rows());
  for (std::size_t r = 0; r < W.rows(); ++r) {
    auto w = W.row(r);
    double s = b[r];
    for (std::size_t k = 0; k < xh.size(); ++k) s += w[k] * xh[k];
    out[r] = s;
  }
  return out;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void check_cell(const Matrix& W, const Matrix& b, std::size_t x_dim, std::size_t h_dim,
                const char* what) {
  require_shape(W, h_dim, x_dim + h_dim, what);
  require_shape(b, 1, h_dim, what);
}

Matrix glorot(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out,
              std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace

void SeaConfig::validate() const {
  if (d < 1) throw DomainError("model: d must be >= 1");
  if (h < 1) throw DomainError("model: hidden size must be >= 1");
  if (a < 1) throw DomainError("model: attention size must be >= 1");
  if (classes < 2) throw DomainError("model: classes must be >= 2");
  if (max_len < 1) throw DomainError("model: max_len must be >= 1");
}

std::vector<Matrix*> SeaParams::tensors() {
  std::vector<Matrix*> out;
  if (has_embedding()) out.push_back(&embedding);
  for (Matrix* m : {&lstm.W_i, &lstm.W_f, &lstm.W_o, &lstm.W_c, &lstm.b_i, &lstm.b_f, &lstm.b_o,
                    &lstm.b_c, &gru.W_z, &gru.W_r, &gru.W_h, &gru.b_z, &gru.b_r, &gru.b_h,
                    &attention.W_a, &attention.b_a, &attention.v, &W_y, &b_y}) {
    out.push_back(m);
  }
  return out;
}

std::vector<const Matrix*> SeaParams::tensors() const {
  auto mut = const_cast<SeaParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::size_t SeaParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : tensors()) n += m->size();
  return n;
}

std::vector<std::string> tensor_names(bool with_embedding) {
  std::vector<std::string> names;
  if (with_embedding) names.emplace_back("embedding");
  for (const char* n : {"lstm.W_i", "lstm.W_f", "lstm.W_o", "lstm.W_c", "lstm.b_i", "lstm.b_f",
                        "lstm.b_o", "lstm.b_c", "gru.W_z", "gru.W_r", "gru.W_h", "gru.b_z",
                        "gru.b_r", "gru.b_h", "attention.W_a", "attention.b_a", "attention.v",
                        "head.W_y", "head.b_y"}) {
    names.emplace_back(n);
  }
  return names;
}

SeaParams init_params(const SeaConfig& cfg, std::uint64_t seed, const Matrix* initial_embedding) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  SeaParams p;
  const std::size_t in = cfg.d + cfg.h;
  if (cfg.fine_tune_embeddings) {
    if (initial_embedding == nullptr) {
      throw DomainError("init_params: fine-tuning requires an initial embedding");
    }
    if (initial_embedding->cols() != cfg.d) {
      throw CompatibilityError("init_params: embedding dim " +
                               std::to_string(initial_embedding->cols()) + " but model d " +
                               std::to_string(cfg.d));
    }
    p.embedding = *initial_embedding;
  }
  for (Matrix* w : {&p.lstm.W_i, &p.lstm.W_f, &p.lstm.W_o, &p.lstm.W_c}) {
    *w = glorot(cfg.h, in, in, cfg.h, rng);
  }
  p.lstm.b_i = Matrix(1, cfg.h);
  p.lstm.b_f = Matrix(1, cfg.h, 1.0);
  p.lstm.b_o = Matrix(1, cfg.h);
  p.lstm.b_c = Matrix(1, cfg.h);
  for (Matrix* w : {&p.gru.W_z, &p.gru.W_r, &p.gru.W_h}) *w = glorot(cfg.h, in, in, cfg.h, rng);
  p.gru.b_z = Matrix(1, cfg.h);
  p.gru.b_r = Matrix(1, cfg.h);
  p.gru.b_h = Matrix(1, cfg.h);
  p.attention.W_a = glorot(cfg.a, cfg.h, cfg.h, cfg.a, rng);
  p.attention.b_a = Matrix(1, cfg.a);
  p.attention.v = glorot(1, cfg.a, cfg.a, 1, rng);
  p.W_y = glorot(cfg.classes, cfg.h, cfg.h, cfg.classes, rng);
  p.b_y = Matrix(1, cfg.classes);
  return p;
}

SeaConfig infer_config(const SeaParams& p) {
  SeaConfig cfg;
  cfg.h = p.lstm.W_i.rows();
  if (cfg.h == 0 || p.lstm.W_i.cols() <= cfg.h) {
    throw CompatibilityError("checkpoint LSTM weights have shape " + p.lstm.W_i.shape_string());
  }
  cfg.d = p.lstm.W_i.cols() - cfg.h;
  cfg.a = p.attention.W_a.rows();
  cfg.classes = p.W_y.rows();
  cfg.fine_tune_embeddings = p.has_embedding();

  const std::size_t in = cfg.d + cfg.h;
  for (const Matrix* w : {&p.lstm.W_i, &p.lstm.W_f, &p.lstm.W_o, &p.lstm.W_c, &p.gru.W_z,
                          &p.gru.W_r, &p.gru.W_h}) {
    if (w->rows() != cfg.h || w->cols() != in) {
      throw CompatibilityError("inconsistent recurrent weight shape " + w->shape_string());
    }
  }
  for (const Matrix* b : {&p.lstm.b_i, &p.lstm.b_f, &p.lstm.b_o, &p.lstm.b_c, &p.gru.b_z,
                          &p.gru.b_r, &p.gru.b_h}) {
    if (b->rows() != 1 || b->cols() != cfg.h) {
      throw CompatibilityError("inconsistent recurrent bias shape " + b->shape_string());
    }
  }
  if (p.attention.W_a.cols() != cfg.h || p.attention.b_a.rows() != 1 ||
      p.attention.b_a.cols() != cfg.a || p.attention.v.rows() != 1 || p.attention.v.cols() != cfg.a) {
    throw CompatibilityError("inconsistent attention tensor shapes");
  }
  if (p.W_y.cols() != cfg.h || p.b_y.rows() != 1 || p.b_y.cols() != cfg.classes) {
    throw CompatibilityError("inconsistent head tensor shapes");
  }
  if (p.has_embedding() && p.embedding.cols() != cfg.d) {
    throw CompatibilityError("embedding tensor width differs from model input size");
  }
  cfg.validate();
  return cfg;
}

LstmState lstm_step(std::span<const double> x, const LstmState& state, const LstmParams& p) {
  const std::size_t hd = state.h.size();
  if (state.c.size() != hd) throw ShapeError("lstm_step: h and c sizes differ");
  for (auto [W, b] : {std::pair{&p.W_i, &p.b_i}, std::pair{&p.W_f, &p.b_f},
                      std::pair{&p.W_o, &p.b_o}, std::pair{&p.W_c, &p.b_c}}) {
    check_cell(*W, *b, x.size(), hd, "lstm_step weights");
  }
  const auto xh = concat(x, state.h);
  const auto zi = affine(p.W_i, p.b_i, xh);
  const auto zf = affine(p.W_f, p.b_f, xh);
  const auto zo = affine(p.W_o, p.b_o, xh);
  const auto zc = affine(p.W_c, p.b_c, xh);
  LstmState next{std::vector<double>(hd), std::vector<double>(hd)};
  for (std::size_t k = 0; k < hd; ++k) {
    const double i = sigmoid(zi[k]);
    const double f = sigmoid(zf[k]);
    const double o = sigmoid(zo[k]);
    const double g = std::tanh(zc[k]);
    next.c[k] = f * state.c[k] + i * g;
    next.h[k] = o * std::tanh(next.c[k]);
  }
  return next;
}

std::vector<double> gru_step(std::span<const double> x, std::span<const double> h,
                             const GruParams& p) {
  const std::size_t hd = h.size();
  for (auto [W, b] : {std::pair{&p.W_z, &p.b_z}, std::pair{&p.W_r, &p.b_r},
                      std::pair{&p.W_h, &p.b_h}}) {
    check_cell(*W, *b, x.size(), hd, "gru_step weights");
  }
  const auto xh = concat(x, h);
  const auto zz = affine(p.W_z, p.b_z, xh);
  const auto zr = affine(p.W_r, p.b_r, xh);
  std::vector<double> z(hd), rh(hd);
  for (std::size_t k = 0; k < hd; ++k) {
    z[k] = sigmoid(zz[k]);
    rh[k] = sigmoid(zr[k]) * h[k];
  }
  const auto zh = affine(p.W_h, p.b_h, concat(x, rh));
  std::vector<double> next(hd);
  for (std::size_t k = 0; k < hd; ++k) next[k] = (1.0 - z[k]) * h[k] + z[k] * std::tanh(zh[k]);
  return next;
}

Matrix fuse_mean(const Matrix& hl, const Matrix& hg) {
  if (!hl.same_shape(hg)) {
    throw ShapeError("fuse_mean shape mismatch: " + hl.shape_string() + " vs " + hg.shape_string());
  }
  Matrix out(hl.rows(), hl.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (hl[i] + hg[i]) / 2.0;
  return out;
}

AttentionPool attention_pool(const Matrix& states, const AttentionParams& p) {
  const std::size_t steps = states.rows();
  if (steps == 0) throw EmptySequenceError("attention_pool: no timesteps");
  const std::size_t hd = states.cols();
  require_shape(p.W_a, p.W_a.rows(), hd, "attention W_a");
  require_shape(p.b_a, 1, p.W_a.rows(), "attention b_a");
  require_shape(p.v, 1, p.W_a.rows(), "attention v");

  Matrix scores(1, steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto proj = affine(p.W_a, p.b_a, states.row(t));
    double s = 0.0;
    for (std::size_t k = 0; k < proj.size(); ++k) s += p.v[k] * std::tanh(proj[k]);
    scores[t] = s;
  }
  const Matrix w = softmax_rows(scores);
  AttentionPool out;
  out.weights.assign(w.values().begin(), w.values().end());
  out.context.assign(hd, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    auto s = states.row(t);
    for (std::size_t k = 0; k < hd; ++k) out.context[k] += out.weights[t] * s[k];
  }
  return out;
}

ForwardResult forward(std::span<const int> tokens, const SeaParams& params, const SeaConfig& cfg,
                      const Matrix& embedding) {
  if (tokens.empty()) throw EmptySequenceError("forward: empty token sequence");
  const Matrix& table = params.has_embedding() ? params.embedding : embedding;
  if (table.cols() != cfg.d) {
    throw CompatibilityError("forward: embedding dim " + std::to_string(table.cols()) +
                             " but model d " + std::to_string(cfg.d));
  }
  EmbeddingMatrix view{table, {}};
  const Matrix x = embed_sequence(tokens, view, cfg.max_len);
  const std::size_t steps = x.rows();

  Matrix hl(steps, cfg.h), hg(steps, cfg.h);
  LstmState ls{std::vector<double>(cfg.h, 0.0), std::vector<double>(cfg.h, 0.0)};
  std::vector<double> gs(cfg.h, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    ls = lstm_step(x.row(t), ls, params.lstm);
    gs = gru_step(x.row(t), gs, params.gru);
    std::copy(ls.h.begin(), ls.h.end(), hl.row(t).begin());
    std::copy(gs.begin(), gs.end(), hg.row(t).begin());
  }
  const Matrix fused = fuse_mean(hl, hg);
  AttentionPool pooled = attention_pool(fused, params.attention);

  require_shape(params.W_y, cfg.classes, cfg.h, "head W_y");
  const auto logits = affine(params.W_y, params.b_y, pooled.context);
  const Matrix probs = softmax_rows(Matrix::row_vector(logits));
  return {std::vector<double>(probs.values().begin(), probs.values().end()),
          std::move(pooled.weights)};
}

std::size_t count_trainable_parameters(const SeaConfig& cfg, std::size_t vocab_size) {
  cfg.validate();
  const std::size_t cell = cfg.h * (cfg.d + cfg.h) + cfg.h;
  std::size_t n = 4 * cell + 3 * cell;
  n += cfg.a * cfg.h + cfg.a + cfg.a;
  n += cfg.classes * cfg.h + cfg.classes;
  if (cfg.fine_tune_embeddings) n += vocab_size * cfg.d;
  return n;
}

SeaVars bind_sea_vars(std::span<const ad::Var> tensors, std::optional<ad::Var> frozen_embedding) {
  std::size_t i = 0;
  SeaVars v;
  if (tensors.size() == 20) {
    v.embedding = tensors[i++];
  } else if (tensors.size() == 19 && frozen_embedding) {
    v.embedding = *frozen_embedding;
  } else {
    throw ShapeError("bind_sea_vars: expected 19 tensors plus an embedding, got " +
                     std::to_string(tensors.size()));
  }
  for (ad::Var* slot : {&v.W_i, &v.W_f, &v.W_o, &v.W_c, &v.b_i, &v.b_f, &v.b_o, &v.b_c, &v.W_z,
                        &v.W_r, &v.W_h, &v.b_z, &v.b_r, &v.b_h, &v.W_a, &v.b_a, &v.v, &v.W_y,
                        &v.b_y}) {
    *slot = tensors[i++];
  }
  return v;
}

BatchGraph sea_batch_graph(const SeaVars& v, std::span<const std::span<const int>> batch,
                           std::size_t max_len) {
  if (batch.empty()) throw EmptySequenceError("sea_batch_graph: empty batch");
  ad::Tape& tape = *v.W_i.tape;
  const std::size_t rows = batch.size();
  const std::size_t hd = v.W_i.rows();
  std::vector<std::size_t> lengths;
  std::size_t steps = 0;
  for (auto seq : batch) {
    if (seq.empty()) throw EmptySequenceError("sea_batch_graph: empty sequence in batch");
    lengths.push_back(std::min(seq.size(), max_len));
    steps = std::max(steps, lengths.back());
  }

  ad::Var lh = tape.constant(Matrix(rows, hd));
  ad::Var lc = tape.constant(Matrix(rows, hd));
  ad::Var gh = tape.constant(Matrix(rows, hd));
  std::vector<ad::Var> fused, scores;
  fused.reserve(steps);
  scores.reserve(steps);
  auto gate = [](ad::Var in, ad::Var W, ad::Var b) { return ad::add_row(ad::matmul_nt(in, W), b); };

  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<int> ids(rows, kUnknownId);
    for (std::size_t r = 0; r < rows; ++r) {
      if (t < lengths[r]) ids[r] = batch[r][t];
    }
    const ad::Var x = ad::gather_rows(v.embedding, std::move(ids));

    const ad::Var lxh = ad::concat_cols(x, lh);
    const ad::Var i = ad::sigmoid(gate(lxh, v.W_i, v.b_i));
    const ad::Var f = ad::sigmoid(gate(lxh, v.W_f, v.b_f));
    const ad::Var o = ad::sigmoid(gate(lxh, v.W_o, v.b_o));
    const ad::Var g = ad::tanh(gate(lxh, v.W_c, v.b_c));
    lc = ad::add(ad::mul(f, lc), ad::mul(i, g));
    lh = ad::mul(o, ad::tanh(lc));

    const ad::Var gxh = ad::concat_cols(x, gh);
    const ad::Var z = ad::sigmoid(gate(gxh, v.W_z, v.b_z));
    const ad::Var r = ad::sigmoid(gate(gxh, v.W_r, v.b_r));
    const ad::Var cand = ad::tanh(gate(ad::concat_cols(x, ad::mul(r, gh)), v.W_h, v.b_h));
    gh = ad::add(gh, ad::mul(z, ad::sub(cand, gh)));

    const ad::Var s = ad::scale(ad::add(lh, gh), 0.5);
    fused.push_back(s);
    scores.push_back(ad::matmul_nt(ad::tanh(gate(s, v.W_a, v.b_a)), v.v));
  }

  Matrix mask(rows, steps);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = lengths[r]; t < steps; ++t) mask(r, t) = kMaskedScore;
  const ad::Var weights =
      ad::softmax_rows(ad::add(ad::concat_cols(scores), tape.constant(std::move(mask))));

  std::vector<ad::Var> terms;
  terms.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    terms.push_back(ad::mul_col(fused[t], ad::slice_col(weights, t)));
  }
  const ad::Var context = ad::sum(terms);
  return {gate(context, v.W_y, v.b_y), weights};
}

ad::Var sea_batch_loss(const SeaVars& vars, std::span<const std::span<const int>> batch,
                       std::vector<int> labels, std::vector<double> weights, std::size_t max_len) {
  const BatchGraph graph = sea_batch_graph(vars, batch, max_len);
  return ad::softmax_cross_entropy(graph.logits, std::move(labels), std::move(weights));
}

void save_checkpoint(const std::filesystem::path& path, const SeaParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  out << "SEA-CKPT 1\n";
  const auto names = tensor_names(params.has_embedding());
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Matrix& m = *tensors[i];
    out << names[i] << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << textio::format_double(row[c]);
      }
      out << '\n';
    }
  }
  if (!out) throw ReadError("write failure in " + path.string(), 0);
}

SeaParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open checkpoint " + path.string(), 0);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || textio::trim(line) != "SEA-CKPT 1") {
    throw ParseError("checkpoint header must be 'SEA-CKPT 1'", 1);
  }
  std::vector<std::pair<std::string, Matrix>> read;
  while (std::getline(in, line)) {
    ++lineno;
    if (textio::trim(line).empty()) continue;
    const auto head = textio::split_whitespace(line);
    if (head.size() != 3) throw ParseError("expected 'name rows cols'", lineno);
    std::string name(head[0]);
    const auto rows = static_cast<std::size_t>(textio::parse_int(head[1], lineno));
    const auto cols = static_cast<std::size_t>(textio::parse_int(head[2], lineno));
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      ++lineno;
      if (!std::getline(in, line)) throw ParseError("checkpoint truncated", lineno);
      const auto parts = textio::split_whitespace(line);
      if (parts.size() != cols) throw ParseError("checkpoint row has wrong width", lineno);
      auto row = m.row(r);
      for (std::size_t c = 0; c < cols; ++c) row[c] = textio::parse_double(parts[c], lineno);
    }
    read.emplace_back(std::move(name), std::move(m));
  }
  const bool with_embedding = !read.empty() && read.front().first == "embedding";
  const auto names = tensor_names(with_embedding);
  if (read.size() != names.size()) {
    throw ParseError("checkpoint holds " + std::to_string(read.size()) + " tensors, expected " +
                     std::to_string(names.size()), 0);
  }
  SeaParams params;
  if (with_embedding) params.embedding = Matrix(1, 1);  // placeholder so tensors() includes it
  auto slots = params.tensors();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (read[i].first != names[i]) {
      throw ParseError("checkpoint tensor " + std::to_string(i) + " is '" + read[i].first +
                       "', expected '" + names[i] + "'", 0);
    }
    *slots[i] = std::move(read[i].second);
  }
  infer_config(params);
  return params;
}

}  // namespace sea
