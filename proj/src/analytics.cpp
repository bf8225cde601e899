// SPDX-License-Identifier: Apache-2.0
#include "sea/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "sea/embedding.hpp"
#include "sea/errors.hpp"
#include "sea/textio.hpp"

namespace sea {

namespace {

constexpr double kPowerTolerance = 1e-10;
constexpr int kPowerMaxIterations = 10000;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0.0)
    for (double& x : v) x /= n;
}

void orthogonalize(std::vector<double>& v, std::span<const double> against) {
  const double p = dot(v, against);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * against[i];
}

std::vector<double> multiply(const Matrix& m, std::span<const double> v) {
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v);
  return out;
}

// Leading eigenpair of a symmetric PSD matrix, kept orthogonal to `previous`.
std::pair<std::vector<double>, double> leading_eigen(const Matrix& cov,
                                                     std::span<const std::vector<double>> previous) {
  const std::size_t d = cov.rows();
  std::mt19937_64 rng(0x5eaULL);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::vector<double> v(d);
  for (double& x : v) x = jitter(rng);
  for (const auto& p : previous) orthogonalize(v, p);
  normalize(v);
  for (int it = 0; it < kPowerMaxIterations; ++it) {
    std::vector<double> next = multiply(cov, v);
    for (const auto& p : previous) orthogonalize(next, p);
    if (std::sqrt(dot(next, next)) == 0.0) break;
    normalize(next);
    double change = 0.0;
    for (std::size_t i = 0; i < d; ++i) change = std::max(change, std::abs(next[i] - v[i]));
    v = std::move(next);
    if (change < kPowerTolerance) break;
  }
  const double lambda = dot(v, multiply(cov, v));
  return {v, std::max(0.0, lambda)};
}

}  // namespace

std::vector<OpcodeCountTable> count_opcodes(const LabeledDataset& dataset, std::size_t vocab_size) {
  std::vector<OpcodeCountTable> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    OpcodeCountTable t{s.sample_id, s.label, std::vector<std::int64_t>(vocab_size, 0)};
    for (int id : s.tokens) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw IndexError("count_opcodes: token id " + std::to_string(id) + " out of range");
      }
      ++t.counts[static_cast<std::size_t>(id)];
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::size_t> class_histogram(const LabeledDataset& dataset) {
  std::vector<std::size_t> counts(dataset.num_classes(), 0);
  for (const auto& s : dataset.samples) ++counts.at(static_cast<std::size_t>(s.label));
  return counts;
}

std::vector<ScatterPoint> scatter_pairs(const LabeledDataset& dataset, const Vocabulary& vocab,
                                        std::string_view op_a, std::string_view op_b) {
  for (std::string_view op : {op_a, op_b}) {
    if (!vocab.contains(op) || op == kUnknownToken) {
      throw DomainError("scatter_pairs: opcode '" + std::string(op) + "' is not in the vocabulary");
    }
  }
  const int a = vocab.id_of(op_a);
  const int b = vocab.id_of(op_b);
  std::vector<ScatterPoint> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    ScatterPoint p;
    p.label = s.label;
    for (int id : s.tokens) {
      p.count_a += id == a;
      p.count_b += id == b;
    }
    out.push_back(p);
  }
  return out;
}

CorrelationMatrix pearson_matrix(std::span<const OpcodeCountTable> tables, std::size_t top_k) {
  if (tables.size() < 2) throw DomainError("pearson_matrix: needs at least 2 samples");
  if (top_k < 2) throw DomainError("pearson_matrix: top_k must be >= 2");
  const std::size_t vocab = tables.front().counts.size();
  std::vector<std::int64_t> totals(vocab, 0);
  for (const auto& t : tables) {
    if (t.counts.size() != vocab) throw ShapeError("pearson_matrix: ragged count tables");
    for (std::size_t i = 0; i < vocab; ++i) totals[i] += t.counts[i];
  }
  std::vector<int> ids(vocab);
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int x, int y) { return totals[x] > totals[y]; });
  ids.resize(std::min(top_k, vocab));
  const std::size_t k = ids.size();

  const auto n = static_cast<double>(tables.size());
  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (const auto& t : tables) mean[j] += static_cast<double>(t.counts[ids[j]]);
    mean[j] /= n;
    for (const auto& t : tables) {
      const double dlt = static_cast<double>(t.counts[ids[j]]) - mean[j];
      sd[j] += dlt * dlt;
    }
    sd[j] = std::sqrt(sd[j]);
  }

  CorrelationMatrix out{ids, Matrix(k, k)};
  for (std::size_t x = 0; x < k; ++x) {
    out.r(x, x) = 1.0;
    for (std::size_t y = x + 1; y < k; ++y) {
      double r = 0.0;
      if (sd[x] > 0.0 && sd[y] > 0.0) {
        double cov = 0.0;
        for (const auto& t : tables) {
          cov += (static_cast<double>(t.counts[ids[x]]) - mean[x]) *
                 (static_cast<double>(t.counts[ids[y]]) - mean[y]);
        }
        r = std::clamp(cov / (sd[x] * sd[y]), -1.0, 1.0);
      }
      out.r(x, y) = r;
      out.r(y, x) = r;
    }
  }
  return out;
}

Pca2d pca_2d(const Matrix& points) {
  const std::size_t n = points.rows(), d = points.cols();
  if (n < 3) throw DomainError("pca_2d: needs at least 3 points");
  if (d < 2) throw DegenerateRankError("pca_2d: data has fewer than 2 dimensions");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) mean[c] += points(i, c);
  for (double& m : mean) m /= static_cast<double>(n);
  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < d; ++c) centered(i, c) = points(i, c) - mean[c];

  Matrix cov(d, d);
  kernel::gemm_tn(centered, centered, cov);
  for (double& v : cov.values()) v /= static_cast<double>(n - 1);

  double trace = 0.0;
  for (std::size_t c = 0; c < d; ++c) trace += cov(c, c);
  if (!(trace > 0.0)) throw DegenerateRankError("pca_2d: all points coincide");

  Pca2d out;
  out.components = Matrix(2, d);
  std::vector<std::vector<double>> found;
  for (int k = 0; k < 2; ++k) {
    auto [vec, lambda] = leading_eigen(cov, found);
    for (const auto& p : found) orthogonalize(vec, p);
    normalize(vec);
    std::size_t big = 0;
    for (std::size_t c = 1; c < d; ++c)
      if (std::abs(vec[c]) > std::abs(vec[big])) big = c;
    if (vec[big] < 0.0)
      for (double& x : vec) x = -x;
    std::copy(vec.begin(), vec.end(), out.components.row(static_cast<std::size_t>(k)).begin());
    out.explained_variance[k] = lambda;
    found.push_back(std::move(vec));
  }
  // Power iteration may land on a slightly smaller eigenvalue first when two are nearly equal.
  if (out.explained_variance[1] > out.explained_variance[0]) {
    std::swap(out.explained_variance[0], out.explained_variance[1]);
    auto r0 = out.components.row(0), r1 = out.components.row(1);
    std::swap_ranges(r0.begin(), r0.end(), r1.begin());
  }
  out.projected = matmul_nt(centered, out.components);
  return out;
}

Matrix document_embeddings(const LabeledDataset& dataset, const Matrix& embedding_vectors) {
  EmbeddingMatrix view{embedding_vectors, {}};
  Matrix out(dataset.size(), embedding_vectors.cols());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto doc = document_embedding(dataset.samples[i].tokens, view);
    std::copy(doc.begin(), doc.end(), out.row(i).begin());
  }
  return out;
}

void write_histogram_csv(const std::filesystem::path& path, std::span<const std::size_t> counts,
                         std::span<const std::string> class_names) {
  auto out = open_out(path);
  out << "class,name,samples\n";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out << c + 1 << ',' << (c < class_names.size() ? class_names[c] : "") << ',' << counts[c] << '\n';
  }
}

void write_scatter_csv(const std::filesystem::path& path, const LabeledDataset& dataset,
                       std::span<const ScatterPoint> points, std::string_view op_a,
                       std::string_view op_b) {
  auto out = open_out(path);
  out << "sample_id," << op_a << ',' << op_b << ",class\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << dataset.samples[i].sample_id << ',' << points[i].count_a << ',' << points[i].count_b
        << ',' << points[i].label + 1 << '\n';
  }
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& corr,
                           const Vocabulary& vocab) {
  auto out = open_out(path);
  out << "opcode";
  for (int id : corr.opcode_ids) out << ',' << vocab.token_of(id);
  out << '\n';
  for (std::size_t x = 0; x < corr.opcode_ids.size(); ++x) {
    out << vocab.token_of(corr.opcode_ids[x]);
    for (std::size_t y = 0; y < corr.opcode_ids.size(); ++y) {
      out << ',' << textio::format_double(corr.r(x, y));
    }
    out << '\n';
  }
}

void write_pca_csv(const std::filesystem::path& path, const LabeledDataset& dataset,
                   const Pca2d& pca) {
  auto out = open_out(path);
  out << "# explained_variance " << textio::format_double(pca.explained_variance[0]) << ' '
      << textio::format_double(pca.explained_variance[1]) << '\n';
  out << "sample_id,pc1,pc2,class\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.samples[i].sample_id << ',' << textio::format_double(pca.projected(i, 0)) << ','
        << textio::format_double(pca.projected(i, 1)) << ',' << dataset.samples[i].label + 1 << '\n';
  }
}

}  // namespace sea
