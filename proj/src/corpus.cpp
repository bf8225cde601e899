// SPDX-License-Identifier: Apache-2.0
#include "sea/corpus.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "sea/errors.hpp"

namespace sea {

Vocabulary::Vocabulary() { add(std::string(kUnknownToken), 0); }

void Vocabulary::add(std::string token, std::int64_t count) {
  ids_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  counts_.push_back(count);
}

Vocabulary Vocabulary::build(std::span<const OpcodeSequence> sequences, std::int64_t min_count) {
  if (min_count < 1) throw DomainError("build_vocabulary: min_count must be >= 1");
  std::unordered_map<std::string, std::int64_t> freq;
  std::size_t total = 0;
  for (const auto& seq : sequences) {
    for (const auto& t : seq.tokens) ++freq[t];
    total += seq.tokens.size();
  }
  if (total == 0) throw EmptyCorpusError("build_vocabulary: corpus contains no tokens");

  std::vector<std::pair<std::string, std::int64_t>> entries(freq.begin(), freq.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (auto& [token, count] : entries) {
    if (count < min_count) continue;
    if (token == kUnknownToken) continue;
    vocab.add(std::move(token), count);
  }
  return vocab;
}

Vocabulary build_vocabulary(std::span<const OpcodeSequence> sequences, std::int64_t min_count) {
  return Vocabulary::build(sequences, min_count);
}

int Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnknownId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.find(std::string(token)) != ids_.end();
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::int64_t Vocabulary::count_of(int id) const {
  token_of(id);
  return counts_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id_of(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token_of(id));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open vocabulary " + path.string(), 0);
  Vocabulary vocab;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("vocabulary line lacks a tab", lineno);
    std::string token = line.substr(0, tab);
    std::int64_t count = 0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, count);
    if (ec != std::errc() || ptr != last) throw ParseError("bad vocabulary count", lineno);
    if (lineno == 1) {
      if (token != kUnknownToken) throw ParseError("vocabulary must start with <unk>", lineno);
      continue;
    }
    if (vocab.contains(token)) throw ParseError("duplicate vocabulary token " + token, lineno);
    vocab.add(std::move(token), count);
  }
  if (lineno == 0) throw ParseError("empty vocabulary file " + path.string(), 0);
  return vocab;
}

std::vector<int> LabeledDataset::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

void LabeledDataset::validate() const {
  std::set<std::string_view> seen;
  for (const auto& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= num_classes()) {
      throw DomainError("sample " + s.sample_id + " has class " + std::to_string(s.label + 1) +
                        " outside 1.." + std::to_string(num_classes()));
    }
    if (!seen.insert(s.sample_id).second) {
      throw DomainError("duplicate sample id " + s.sample_id);
    }
  }
}

std::vector<std::string> default_class_names() {
  return {"Ramnit", "Lollipop", "Kelihos_ver3", "Vundo",   "Simda",
          "Tracur", "Kelihos_ver1", "Obfuscator.ACY", "Gatak"};
}

LabeledDataset make_dataset(std::span<const OpcodeSequence> sequences, const Vocabulary& vocab,
                            std::size_t num_classes) {
  LabeledDataset ds;
  if (num_classes == kDefaultClasses) {
    ds.class_names = default_class_names();
  } else {
    for (std::size_t c = 1; c <= num_classes; ++c) ds.class_names.push_back(std::to_string(c));
  }
  for (const auto& seq : sequences) {
    if (!seq.label || seq.tokens.empty()) continue;
    if (*seq.label < 1 || static_cast<std::size_t>(*seq.label) > num_classes) {
      throw DomainError("sample " + seq.sample_id + " has class " + std::to_string(*seq.label) +
                        " outside 1.." + std::to_string(num_classes));
    }
    ds.samples.push_back({seq.sample_id, vocab.encode(seq.tokens), *seq.label - 1});
  }
  ds.validate();
  return ds;
}

namespace {

std::string_view trim_field(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::map<std::string, int> parse_label_manifest(std::string_view text) {
  std::map<std::string, int> out;
  std::size_t lineno = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (trim_field(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
      throw ParseError("manifest row must have exactly two fields", lineno);
    }
    const std::string_view id = trim_field(line.substr(0, comma));
    const std::string_view cls = trim_field(line.substr(comma + 1));
    if (!header_seen) {
      if (id != "Id" || cls != "Class") throw ParseError("manifest header must be Id,Class", lineno);
      header_seen = true;
      continue;
    }
    if (id.empty()) throw ParseError("empty sample id", lineno);
    int value = 0;
    auto [ptr, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), value);
    if (ec != std::errc() || ptr != cls.data() + cls.size()) {
      throw ParseError("class is not an integer: '" + std::string(cls) + "'", lineno);
    }
    if (value < 1 || value > kDefaultClasses) {
      throw DomainError("class " + std::to_string(value) + " outside 1..9 (line " +
                        std::to_string(lineno) + ")");
    }
    if (!out.emplace(std::string(id), value).second) {
      throw ParseError("duplicate sample id " + std::string(id), lineno);
    }
    if (end == text.size()) break;
  }
  if (!header_seen) throw ParseError("manifest is missing its Id,Class header", 0);
  return out;
}

std::map<std::string, int> load_label_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("cannot open manifest " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_label_manifest(buf.str());
}

void write_label_manifest(const std::filesystem::path& path,
                          std::span<const OpcodeSequence> sequences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  out << "\"Id\",\"Class\"\n";
  for (const auto& s : sequences) {
    if (s.label) out << '"' << s.sample_id << "\"," << *s.label << '\n';
  }
}

std::vector<std::size_t> FoldSplit::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (static_cast<std::size_t>(assignments[i]) == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldSplit::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (static_cast<std::size_t>(assignments[i]) != fold) out.push_back(i);
  return out;
}

FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k <= 1) throw DomainError("stratified_kfold: k must be >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldSplit split;
  split.k = k;
  split.assignments.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;  // rotates so overall fold sizes stay balanced
  for (auto& [label, idx] : by_class) {
    if (idx.size() < k) {
      std::cerr << "warning: class " << label + 1 << " has " << idx.size()
                << " samples, fewer than " << k << " folds\n";
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      split.assignments[idx[j]] = static_cast<int>((offset + j) % k);
    }
    offset = (offset + idx.size()) % k;
  }
  return split;
}

namespace {

// Common x86 mnemonics used to name background tokens.
constexpr std::array<std::string_view, 48> kBackgroundNames = {
    "mov",  "push",  "call",  "pop",   "cmp",   "jz",    "lea",   "test",  "jmp",  "add",
    "jnz",  "retn",  "xor",   "and",   "sub",   "inc",   "dec",   "or",    "shl",  "shr",
    "movzx", "jb",   "ja",    "jl",    "jg",    "jbe",   "jnb",   "leave", "imul", "sar",
    "nop",  "not",   "neg",   "sbb",   "adc",   "xchg",  "stosd", "movsd", "cdq",  "idiv",
    "div",  "setz",  "setnz", "fld",   "fstp",  "fild",  "rol",   "ror"};

std::string random_sample_id(std::mt19937_64& rng) {
  static constexpr std::string_view alphabet =
      "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string id(20, '0');
  for (char& c : id) c = alphabet[pick(rng)];
  return id;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  const std::size_t classes = spec.class_counts.size();
  if (classes < 2) throw DomainError("synthetic corpus needs at least 2 classes");
  if (spec.motif_len < 1) throw DomainError("motif_len must be >= 1");
  if (spec.motif_len > spec.seq_len) throw DomainError("motif_len exceeds seq_len");
  if (!(spec.motif_fraction > 0.0 && spec.motif_fraction < 1.0)) {
    throw DomainError("motif_fraction must lie in (0, 1)");
  }
  const std::size_t motif_tokens = classes * spec.motif_len;
  if (spec.vocab_size < motif_tokens + 2) {
    throw DomainError("vocab_size " + std::to_string(spec.vocab_size) +
                      " leaves fewer than 2 background tokens after " +
                      std::to_string(motif_tokens) + " motif tokens");
  }
  const std::size_t background = spec.vocab_size - motif_tokens;

  std::vector<std::string> bg_names;
  for (std::size_t i = 0; i < background; ++i) {
    bg_names.push_back(i < kBackgroundNames.size() ? std::string(kBackgroundNames[i])
                                                   : "op" + std::to_string(i));
  }
  std::vector<double> bg_weights;
  for (std::size_t i = 0; i < background; ++i) bg_weights.push_back(1.0 / static_cast<double>(i + 1));

  SyntheticCorpus corpus;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<std::string> motif;
    for (std::size_t j = 0; j < spec.motif_len; ++j) {
      motif.push_back("mot" + std::to_string(c + 1) + "_" + std::to_string(j));
    }
    corpus.class_motifs.push_back(std::move(motif));
  }

  const double wanted = spec.motif_fraction * static_cast<double>(spec.seq_len) /
                        static_cast<double>(spec.motif_len);
  std::size_t occurrences = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(wanted)));
  occurrences = std::min(occurrences, spec.seq_len / spec.motif_len);
  const std::size_t free_slots = spec.seq_len - occurrences * spec.motif_len;

  std::mt19937_64 rng(spec.seed);
  std::discrete_distribution<std::size_t> draw_bg(bg_weights.begin(), bg_weights.end());
  std::uniform_int_distribution<std::size_t> draw_slot(0, free_slots);
  std::set<std::string> used_ids;

  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t n = 0; n < spec.class_counts[c]; ++n) {
      OpcodeSequence seq;
      do {
        seq.sample_id = random_sample_id(rng);
      } while (!used_ids.insert(seq.sample_id).second);
      seq.label = static_cast<int>(c + 1);
      seq.tokens.reserve(spec.seq_len);
      for (std::size_t t = 0; t < spec.seq_len; ++t) seq.tokens.push_back(bg_names[draw_bg(rng)]);

      std::vector<std::size_t> slots(occurrences);
      for (auto& s : slots) s = draw_slot(rng);
      std::sort(slots.begin(), slots.end());
      std::vector<MotifSpan> spans;
      for (std::size_t o = 0; o < occurrences; ++o) {
        const std::size_t begin = slots[o] + o * spec.motif_len;
        for (std::size_t j = 0; j < spec.motif_len; ++j) {
          seq.tokens[begin + j] = corpus.class_motifs[c][j];
        }
        spans.push_back({begin, spec.motif_len});
      }
      corpus.sequences.push_back(std::move(seq));
      corpus.motif_spans.push_back(std::move(spans));
    }
  }

  corpus.vocab = Vocabulary::build(corpus.sequences, 1);
  corpus.dataset = make_dataset(corpus.sequences, corpus.vocab, classes);
  return corpus;
}

}  // namespace sea
