// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sea/asm_parser.hpp"

namespace sea {

inline constexpr int kUnknownId = 0;
inline constexpr std::string_view kUnknownToken = "<unk>";
inline constexpr int kDefaultClasses = 9;

// Id 0 is reserved for <unk>; real tokens take ids 1..V ordered by descending
// corpus frequency, ties broken lexicographically.
class Vocabulary {
 public:
  Vocabulary();

  static Vocabulary build(std::span<const OpcodeSequence> sequences, std::int64_t min_count = 1);

  // Number of ids including <unk>.
  std::size_t size() const noexcept { return tokens_.size(); }
  int id_of(std::string_view token) const;  // kUnknownId when absent
  bool contains(std::string_view token) const;
  const std::string& token_of(int id) const;
  std::int64_t count_of(int id) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  // Line i+1 holds "token<TAB>count" for id i; line 1 is "<unk>\t0".
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  void add(std::string token, std::int64_t count);

  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> ids_;
};

Vocabulary build_vocabulary(std::span<const OpcodeSequence> sequences, std::int64_t min_count = 1);

struct Sample {
  std::string sample_id;
  std::vector<int> tokens;
  int label = 0;  // 0-based class index
};

// Labels are 0-based internally; files and reports use 1-based classes.
struct LabeledDataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::size_t size() const noexcept { return samples.size(); }
  std::vector<int> labels() const;
  // Throws DomainError on out-of-range labels or duplicate sample ids.
  void validate() const;
};

// Microsoft BIG 2015 family names in class order 1..9.
std::vector<std::string> default_class_names();

// Pairs sequences with their 1-based labels, encodes them and drops unlabeled
// or empty sequences. Labels must lie in 1..num_classes.
LabeledDataset make_dataset(std::span<const OpcodeSequence> sequences, const Vocabulary& vocab,
                            std::size_t num_classes = kDefaultClasses);

// CSV with header Id,Class (fields optionally double-quoted). Classes 1..9.
std::map<std::string, int> load_label_manifest(const std::filesystem::path& path);
std::map<std::string, int> parse_label_manifest(std::string_view text);
void write_label_manifest(const std::filesystem::path& path,
                          std::span<const OpcodeSequence> sequences);

struct FoldSplit {
  std::size_t k = 0;
  std::vector<int> assignments;  // fold index per sample

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Per class: shuffle with the seed, then deal round-robin into folds. Classes
// with fewer than k samples are spread as evenly as possible with a warning.
FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct SyntheticSpec {
  std::vector<std::size_t> class_counts = {300, 250, 290, 50, 5, 75, 40, 120, 100};
  std::size_t vocab_size = 96;  // background plus motif tokens
  std::size_t seq_len = 1000;
  std::size_t motif_len = 4;
  double motif_fraction = 0.02;
  std::uint64_t seed = 42;
};

// [begin, begin + length) in token positions.
struct MotifSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
};

struct SyntheticCorpus {
  std::vector<OpcodeSequence> sequences;
  Vocabulary vocab;
  LabeledDataset dataset;
  std::vector<std::vector<MotifSpan>> motif_spans;  // per sample
  std::vector<std::vector<std::string>> class_motifs;  // per class
};

// Background tokens follow a shared Zipf-like distribution; every class owns
// a distinct motif that is planted at random non-overlapping positions until
// about motif_fraction of each sequence is covered.
SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

}  // namespace sea
