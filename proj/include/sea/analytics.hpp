// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sea/corpus.hpp"
#include "sea/matrix.hpp"

namespace sea {

// Per-sample opcode frequencies, indexed by vocabulary id.
struct OpcodeCountTable {
  std::string sample_id;
  int label = 0;
  std::vector<std::int64_t> counts;
};

std::vector<OpcodeCountTable> count_opcodes(const LabeledDataset& dataset, std::size_t vocab_size);

std::vector<std::size_t> class_histogram(const LabeledDataset& dataset);

struct ScatterPoint {
  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
  int label = 0;
};

// One point per sample; throws DomainError naming an opcode missing from the vocabulary.
std::vector<ScatterPoint> scatter_pairs(const LabeledDataset& dataset, const Vocabulary& vocab,
                                        std::string_view op_a, std::string_view op_b);

struct CorrelationMatrix {
  std::vector<int> opcode_ids;  // the top_k opcodes by total count
  Matrix r;                     // k x k
};

// Pearson correlation of per-sample counts. A zero-variance column correlates
// 0 with everything else and 1 with itself.
CorrelationMatrix pearson_matrix(std::span<const OpcodeCountTable> tables, std::size_t top_k);

struct Pca2d {
  Matrix components;  // 2 x d, unit rows
  Matrix projected;   // N x 2
  double explained_variance[2] = {0.0, 0.0};
};

// Power iteration with deflation on the sample covariance. Deterministic; each
// component's largest-magnitude coordinate is made positive.
Pca2d pca_2d(const Matrix& points);

Matrix document_embeddings(const LabeledDataset& dataset, const Matrix& embedding_vectors);

void write_histogram_csv(const std::filesystem::path& path, std::span<const std::size_t> counts,
                         std::span<const std::string> class_names);
void write_scatter_csv(const std::filesystem::path& path, const LabeledDataset& dataset,
                       std::span<const ScatterPoint> points, std::string_view op_a,
                       std::string_view op_b);
void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& corr,
                           const Vocabulary& vocab);
void write_pca_csv(const std::filesystem::path& path, const LabeledDataset& dataset,
                   const Pca2d& pca);

}  // namespace sea
