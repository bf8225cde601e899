// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "sea/corpus.hpp"
#include "sea/errors.hpp"

namespace fs = std::filesystem;
using sea::OpcodeSequence;

namespace {

std::vector<OpcodeSequence> seqs(std::initializer_list<std::vector<std::string>> lists) {
  std::vector<OpcodeSequence> out;
  int i = 0;
  for (const auto& l : lists) out.push_back({"s" + std::to_string(i++), l, std::nullopt});
  return out;
}

// Brute-force count of samples per (class, fold).
std::map<std::pair<int, int>, int> fold_counts(const std::vector<int>& labels,
                                                const sea::FoldSplit& split) {
  std::map<std::pair<int, int>, int> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) ++counts[{labels[i], split.assignments[i]}];
  return counts;
}

}  // namespace

TEST(Vocabulary, IdsByDescendingCount) {
  const auto v = sea::build_vocabulary(seqs({{"push", "mov", "push"}}));
  EXPECT_EQ(v.id_of("<unk>"), 0);
  EXPECT_EQ(v.id_of("push"), 1);
  EXPECT_EQ(v.id_of("mov"), 2);
  EXPECT_EQ(v.count_of(1), 2);
  EXPECT_EQ(v.count_of(2), 1);
  EXPECT_EQ(v.size(), 3u);
}

TEST(Vocabulary, TiesBreakLexicographically) {
  const auto v = sea::build_vocabulary(seqs({{"mov", "add", "mov", "add", "nop"}}));
  EXPECT_LT(v.id_of("add"), v.id_of("mov"));
  EXPECT_EQ(v.id_of("nop"), 3);
}

TEST(Vocabulary, MinCountMapsRareTokensToUnknown) {
  const auto data = seqs({{"push", "mov", "push"}});
  const auto v = sea::build_vocabulary(data, 3);
  const std::vector<std::string> toks = {"push", "mov"};
  EXPECT_EQ(v.encode(toks), (std::vector<int>{0, 0}));
  EXPECT_THROW((void)sea::build_vocabulary(data, 0), sea::DomainError);
}

TEST(Vocabulary, EmptyCorpusIsRejected) {
  EXPECT_THROW((void)sea::build_vocabulary(std::vector<OpcodeSequence>{}), sea::EmptyCorpusError);
  EXPECT_THROW((void)sea::build_vocabulary(seqs({{}})), sea::EmptyCorpusError);
}

TEST(Vocabulary, EncodeDecodeRoundTripAndBijection) {
  const auto v = sea::build_vocabulary(seqs({{"a", "b", "c", "b", "d", "a", "a"}, {"e", "c"}}));
  for (int id = 0; id < static_cast<int>(v.size()); ++id) EXPECT_EQ(v.id_of(v.token_of(id)), id);
  const std::vector<std::string> toks = {"c", "a", "e", "d", "b"};
  EXPECT_EQ(v.decode(v.encode(toks)), toks);
  const std::vector<std::string> unseen = {"zzz"};
  EXPECT_EQ(v.encode(unseen), (std::vector<int>{sea::kUnknownId}));
}

TEST(Vocabulary, FileFormatAndRoundTrip) {
  const auto v = sea::build_vocabulary(seqs({{"push", "mov", "push"}}));
  const fs::path p = fs::temp_directory_path() / "sea_vocab_test.tsv";
  v.save(p);
  std::ifstream in(p);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), "<unk>\t0\npush\t2\nmov\t1\n");
  const auto back = sea::Vocabulary::load(p);
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.count_of(1), 2);
  fs::remove(p);
}

TEST(Manifest, ParsesKaggleShape) {
  const auto m = sea::parse_label_manifest("\"Id\",\"Class\"\n\"01kcPWA9K2BOxQeS5Rju\",5\n");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at("01kcPWA9K2BOxQeS5Rju"), 5);
  EXPECT_EQ(sea::parse_label_manifest("Id,Class\nabcdefghijklmnopqrst,1\r\n").at("abcdefghijklmnopqrst"), 1);
}

TEST(Manifest, EmptyBodyGivesEmptyMap) {
  EXPECT_TRUE(sea::parse_label_manifest("Id,Class\n").empty());
}

TEST(Manifest, ClassOutsideRangeIsDomainError) {
  EXPECT_THROW((void)sea::parse_label_manifest("Id,Class\nx,10\n"), sea::DomainError);
  EXPECT_THROW((void)sea::parse_label_manifest("Id,Class\nx,0\n"), sea::DomainError);
}

TEST(Manifest, MalformedRowReportsLine) {
  try {
    (void)sea::parse_label_manifest("Id,Class\na,1\nb;2\n");
    FAIL() << "expected ParseError";
  } catch (const sea::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW((void)sea::parse_label_manifest("Id,Class\na,one\n"), sea::ParseError);
}

TEST(Manifest, WriteThenLoad) {
  std::vector<OpcodeSequence> s = {{"aaa", {"push"}, 3}, {"bbb", {"pop"}, 9}, {"ccc", {"nop"}, {}}};
  const fs::path p = fs::temp_directory_path() / "sea_manifest_test.csv";
  sea::write_label_manifest(p, s);
  const auto m = sea::load_label_manifest(p);
  EXPECT_EQ(m, (std::map<std::string, int>{{"aaa", 3}, {"bbb", 9}}));
  fs::remove(p);
}

TEST(MakeDataset, DropsUnlabeledAndEmptyAndShiftsLabels) {
  std::vector<OpcodeSequence> s = {{"a", {"push"}, 2}, {"b", {}, 1}, {"c", {"mov"}, {}}};
  const auto v = sea::build_vocabulary(s);
  const auto ds = sea::make_dataset(s, v);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.samples[0].label, 1);
  EXPECT_EQ(ds.num_classes(), 9u);
}

TEST(StratifiedKFold, OneSamplePerClassPerFold) {
  std::vector<int> labels;
  for (int i = 0; i < 5; ++i) labels.push_back(0);
  for (int i = 0; i < 5; ++i) labels.push_back(1);
  const auto split = sea::stratified_kfold(labels, 5, 1);
  for (const auto& [key, n] : fold_counts(labels, split)) EXPECT_EQ(n, 1);
  EXPECT_EQ(fold_counts(labels, split).size(), 10u);
}

TEST(StratifiedKFold, DeterministicAndSeedDependent) {
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) labels.push_back(i % 3);
  EXPECT_EQ(sea::stratified_kfold(labels, 4, 9).assignments,
            sea::stratified_kfold(labels, 4, 9).assignments);
  EXPECT_NE(sea::stratified_kfold(labels, 4, 9).assignments,
            sea::stratified_kfold(labels, 4, 10).assignments);
}

TEST(StratifiedKFold, RejectsSingleFold) {
  const std::vector<int> labels = {0, 1};
  EXPECT_THROW((void)sea::stratified_kfold(labels, 1, 0), sea::DomainError);
}

TEST(StratifiedKFold, SyntheticCorpusIsStratifiedAndPartitioned) {
  const auto corpus = sea::generate_synthetic_corpus({});
  const auto labels = corpus.dataset.labels();
  const auto split = sea::stratified_kfold(labels, 5, 42);
  const auto counts = fold_counts(labels, split);
  for (int c = 0; c < 9; ++c) {
    int lo = 1 << 30, hi = 0;
    for (int f = 0; f < 5; ++f) {
      const auto it = counts.find({c, f});
      const int n = it == counts.end() ? 0 : it->second;
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1) << "class " << c + 1;
  }
  std::multiset<std::size_t> seen;
  for (int f = 0; f < 5; ++f) {
    const auto test = split.test_indices(f);
    const auto train = split.train_indices(f);
    EXPECT_EQ(test.size() + train.size(), labels.size());
    std::set<std::size_t> t(test.begin(), test.end());
    for (std::size_t i : train) EXPECT_FALSE(t.count(i));
    seen.insert(test.begin(), test.end());
  }
  EXPECT_EQ(seen.size(), labels.size());
  EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), labels.size());
}

TEST(Synthetic, HistogramMatchesRequest) {
  sea::SyntheticSpec spec;
  spec.class_counts = {100, 50, 30, 40, 10, 60, 5, 80, 90};
  spec.seq_len = 200;
  const auto corpus = sea::generate_synthetic_corpus(spec);
  std::vector<std::size_t> hist(9, 0);
  for (const auto& s : corpus.dataset.samples) ++hist[static_cast<std::size_t>(s.label)];
  EXPECT_EQ(hist, spec.class_counts);
}

TEST(Synthetic, MotifCoverageAndPlacement) {
  const auto corpus = sea::generate_synthetic_corpus({});
  ASSERT_EQ(corpus.motif_spans.size(), corpus.sequences.size());
  for (std::size_t i = 0; i < corpus.sequences.size(); ++i) {
    const auto& seq = corpus.sequences[i];
    const auto& motif = corpus.class_motifs[static_cast<std::size_t>(*seq.label - 1)];
    std::size_t covered = 0, prev_end = 0;
    for (const auto& span : corpus.motif_spans[i]) {
      EXPECT_GE(span.begin, prev_end);  // non-overlapping, in order
      prev_end = span.begin + span.length;
      for (std::size_t j = 0; j < span.length; ++j) EXPECT_EQ(seq.tokens[span.begin + j], motif[j]);
      covered += span.length;
    }
    EXPECT_EQ(covered, 20u);  // 0.02 * 1000
    EXPECT_EQ(seq.sample_id.size(), 20u);
  }
}

TEST(Synthetic, ClassMotifsDifferAndOnlyAppearInTheirClass) {
  sea::SyntheticSpec spec;
  spec.class_counts = {10, 10, 10};
  spec.seq_len = 100;
  const auto corpus = sea::generate_synthetic_corpus(spec);
  EXPECT_NE(corpus.class_motifs[0], corpus.class_motifs[1]);
  for (const auto& seq : corpus.sequences) {
    for (const auto& tok : seq.tokens) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto& m = corpus.class_motifs[c];
        if (std::find(m.begin(), m.end(), tok) != m.end()) EXPECT_EQ(*seq.label, static_cast<int>(c + 1));
      }
    }
  }
}

TEST(Synthetic, DeterministicGivenSeed) {
  sea::SyntheticSpec spec;
  spec.class_counts = {5, 5};
  spec.seq_len = 50;
  const auto a = sea::generate_synthetic_corpus(spec);
  const auto b = sea::generate_synthetic_corpus(spec);
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    EXPECT_EQ(a.sequences[i].tokens, b.sequences[i].tokens);
    EXPECT_EQ(a.sequences[i].sample_id, b.sequences[i].sample_id);
  }
  spec.seed = 43;
  EXPECT_NE(sea::generate_synthetic_corpus(spec).sequences[0].tokens, a.sequences[0].tokens);
}

TEST(Synthetic, InvalidSpecsAreDomainErrors) {
  sea::SyntheticSpec spec;
  spec.motif_len = 2000;
  EXPECT_THROW((void)sea::generate_synthetic_corpus(spec), sea::DomainError);
  spec = {};
  spec.motif_fraction = 1.0;
  EXPECT_THROW((void)sea::generate_synthetic_corpus(spec), sea::DomainError);
  spec = {};
  spec.motif_len = 0;
  EXPECT_THROW((void)sea::generate_synthetic_corpus(spec), sea::DomainError);
}
