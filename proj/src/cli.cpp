// SPDX-License-Identifier: Apache-2.0
#include "sea/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <ostream>
#include <sstream>
#include <thread>

#include "sea/analytics.hpp"
#include "sea/asm_parser.hpp"
#include "sea/textio.hpp"

namespace sea::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t to_unsigned(std::string_view v, std::size_t line) {
  long long n = 0;
  try {
    n = textio::parse_int(v, line);
  } catch (const ParseError&) {
    throw ConfigError("expected an integer, got '" + std::string(v) + "'", line);
  }
  if (n < 0) throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'", line);
  return static_cast<std::uint64_t>(n);
}

double to_double(std::string_view v, std::size_t line) {
  try {
    return textio::parse_double(v, line);
  } catch (const ParseError&) {
    throw ConfigError("expected a number, got '" + std::string(v) + "'", line);
  }
}

bool to_bool(std::string_view v, std::size_t line) {
  const std::string s = lower(v);
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError("expected true or false, got '" + std::string(v) + "'", line);
}

std::vector<std::size_t> to_size_list(std::string_view v, std::size_t line) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t comma = std::min(v.find(',', start), v.size());
    const auto item = textio::trim(v.substr(start, comma - start));
    if (item.empty()) throw ConfigError("empty list element", line);
    out.push_back(to_unsigned(item, line));
    start = comma + 1;
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, std::size_t, const fs::path&)>;

fs::path resolve(std::string_view v, const fs::path& base) {
  fs::path p{std::string(v)};
  return p.is_relative() && !base.empty() ? base / p : p;
}

template <typename T>
Setter unsigned_key(T RunConfig::*section, std::size_t T::*field) {
  return [=](RunConfig& c, std::string_view v, std::size_t line, const fs::path&) {
    (c.*section).*field = static_cast<std::size_t>(to_unsigned(v, line));
  };
}

template <typename T>
Setter double_key(T RunConfig::*section, double T::*field) {
  return [=](RunConfig& c, std::string_view v, std::size_t line, const fs::path&) {
    (c.*section).*field = to_double(v, line);
  };
}

template <typename T>
Setter bool_key(T RunConfig::*section, bool T::*field) {
  return [=](RunConfig& c, std::string_view v, std::size_t line, const fs::path&) {
    (c.*section).*field = to_bool(v, line);
  };
}

Setter path_key(fs::path PathConfig::*field) {
  return [=](RunConfig& c, std::string_view v, std::size_t, const fs::path& base) {
    c.paths.*field = resolve(v, base);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", [](RunConfig& c, std::string_view v, std::size_t line,
                  const fs::path&) { c.seed = to_unsigned(v, line); }},
      {"out_dir", [](RunConfig& c, std::string_view v, std::size_t,
                     const fs::path& base) { c.out_dir = resolve(v, base); }},

      {"paths.asm_dir", path_key(&PathConfig::asm_dir)},
      {"paths.opcodes_dir", path_key(&PathConfig::opcodes_dir)},
      {"paths.manifest", path_key(&PathConfig::manifest)},
      {"paths.vocab", path_key(&PathConfig::vocab)},
      {"paths.embedding", path_key(&PathConfig::embedding)},
      {"paths.checkpoint", path_key(&PathConfig::checkpoint)},
      {"paths.predict_input", path_key(&PathConfig::predict_input)},
      {"paths.directives", path_key(&PathConfig::directives)},

      {"parser.workers", unsigned_key(&RunConfig::parser, &ParserConfig::workers)},
      {"parser.min_count",
       [](RunConfig& c, std::string_view v, std::size_t line, const fs::path&) {
         c.parser.min_count = static_cast<std::int64_t>(to_unsigned(v, line));
       }},

      {"synth.class_counts",
       [](RunConfig& c, std::string_view v, std::size_t line, const fs::path&) {
         c.synth.class_counts = to_size_list(v, line);
       }},
      {"synth.vocab_size", unsigned_key(&RunConfig::synth, &SyntheticSpec::vocab_size)},
      {"synth.seq_len", unsigned_key(&RunConfig::synth, &SyntheticSpec::seq_len)},
      {"synth.motif_len", unsigned_key(&RunConfig::synth, &SyntheticSpec::motif_len)},
      {"synth.motif_fraction", double_key(&RunConfig::synth, &SyntheticSpec::motif_fraction)},

      {"embedding.window", unsigned_key(&RunConfig::embedding, &WindowConfig::n)},
      {"embedding.dim", unsigned_key(&RunConfig::embedding, &WindowConfig::d)},
      {"embedding.epochs", unsigned_key(&RunConfig::embedding, &WindowConfig::epochs)},
      {"embedding.lr", double_key(&RunConfig::embedding, &WindowConfig::lr)},
      {"embedding.batch_size", unsigned_key(&RunConfig::embedding, &WindowConfig::batch_size)},

      {"model.hidden", unsigned_key(&RunConfig::model, &SeaConfig::h)},
      {"model.attention", unsigned_key(&RunConfig::model, &SeaConfig::a)},
      {"model.classes", unsigned_key(&RunConfig::model, &SeaConfig::classes)},
      {"model.max_len", unsigned_key(&RunConfig::model, &SeaConfig::max_len)},
      {"model.fine_tune_embeddings",
       bool_key(&RunConfig::model, &SeaConfig::fine_tune_embeddings)},

      {"train.epochs", unsigned_key(&RunConfig::train, &TrainConfig::epochs)},
      {"train.folds", unsigned_key(&RunConfig::train, &TrainConfig::folds)},
      {"train.lr", double_key(&RunConfig::train, &TrainConfig::lr)},
      {"train.batch_size", unsigned_key(&RunConfig::train, &TrainConfig::batch_size)},
      {"train.class_weighting", bool_key(&RunConfig::train, &TrainConfig::class_weighting)},
      {"train.clip_norm", double_key(&RunConfig::train, &TrainConfig::clip_norm)},
      {"train.target_loss", double_key(&RunConfig::train, &TrainConfig::target_loss)},
      {"train.fold_workers", unsigned_key(&RunConfig::train, &TrainConfig::fold_workers)},

      {"analytics.top_k", unsigned_key(&RunConfig::analytics, &AnalyticsConfig::top_k)},
      {"analytics.scatter_a",
       [](RunConfig& c, std::string_view v, std::size_t, const fs::path&) {
         c.analytics.scatter_a = std::string(v);
       }},
      {"analytics.scatter_b",
       [](RunConfig& c, std::string_view v, std::size_t, const fs::path&) {
         c.analytics.scatter_b = std::string(v);
       }},
  };
  return table;
}

const std::vector<std::string> kSections = {"paths",     "parser", "synth",    "embedding",
                                            "model",     "train",  "analytics"};

void require_dir(const fs::path& dir, std::string_view what) {
  if (dir.empty()) throw ConfigError(std::string(what) + " is not configured", 0);
  if (!fs::is_directory(dir)) throw ReadError(std::string(what) + " " + dir.string() + " is not a directory", 0);
}

void ensure_out_dir(const RunConfig& cfg) { fs::create_directories(cfg.out_dir); }

// Opcode files joined with manifest labels, in file-name order.
std::vector<OpcodeSequence> load_labeled(const RunConfig& cfg, std::ostream& log) {
  require_dir(cfg.paths.opcodes_dir, "opcodes_dir");
  auto seqs = load_opcode_dir(cfg.paths.opcodes_dir);
  if (!fs::exists(cfg.paths.manifest)) {
    throw ReadError("label manifest " + cfg.paths.manifest.string() + " not found", 0);
  }
  const auto labels = load_label_manifest(cfg.paths.manifest);
  std::size_t missing = 0;
  for (auto& s : seqs) {
    const auto it = labels.find(s.sample_id);
    if (it == labels.end()) {
      ++missing;
    } else {
      s.label = it->second;
    }
  }
  if (missing) log << "warning: " << missing << " samples have no manifest entry and are skipped\n";
  return seqs;
}

LabeledDataset to_dataset(std::span<const OpcodeSequence> seqs, const Vocabulary& vocab,
                          std::size_t classes) {
  LabeledDataset ds = make_dataset(seqs, vocab, classes);
  if (ds.samples.empty()) throw EmptyCorpusError("no labeled, non-empty samples");
  return ds;
}

// Label-free view for embedding training.
LabeledDataset unlabeled_dataset(std::span<const OpcodeSequence> seqs, const Vocabulary& vocab) {
  LabeledDataset ds;
  ds.class_names = {"unlabeled"};
  for (const auto& s : seqs) {
    if (!s.tokens.empty()) ds.samples.push_back({s.sample_id, vocab.encode(s.tokens), 0});
  }
  if (ds.samples.empty()) throw EmptyCorpusError("no non-empty opcode sequences");
  return ds;
}

void check_vocab_matches(const LoadedEmbedding& emb, const Vocabulary& vocab) {
  if (emb.tokens != vocab.tokens()) {
    throw CompatibilityError("embedding rows (" + std::to_string(emb.tokens.size()) +
                             " tokens) do not match the vocabulary (" +
                             std::to_string(vocab.size()) + " tokens)");
  }
}

struct LoadedModel {
  SeaParams params;
  SeaConfig cfg;
  LoadedEmbedding embedding;
  Vocabulary vocab;
};

LoadedModel load_model(const RunConfig& cfg) {
  LoadedModel m;
  m.params = load_checkpoint(cfg.paths.checkpoint);
  m.cfg = infer_config(m.params);
  m.cfg.max_len = cfg.model.max_len;
  m.embedding = load_embedding(cfg.paths.embedding);
  m.vocab = Vocabulary::load(cfg.paths.vocab);
  check_vocab_matches(m.embedding, m.vocab);
  const Matrix& vectors = m.embedding.embedding.vectors;
  if (vectors.cols() != m.cfg.d) {
    throw CompatibilityError("checkpoint expects d=" + std::to_string(m.cfg.d) +
                             " but the embedding has d=" + std::to_string(vectors.cols()));
  }
  if (m.params.has_embedding() && m.params.embedding.rows() != vectors.rows()) {
    throw CompatibilityError("checkpoint embedding has " + std::to_string(m.params.embedding.rows()) +
                             " rows but the vocabulary has " + std::to_string(vectors.rows()));
  }
  return m;
}

void write_timing_csv(const fs::path& path, double embed_s, double train_s, double infer_s,
                      std::size_t samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  out << "stage,seconds\n";
  out << "embedding_train," << textio::format_double(embed_s) << '\n';
  out << "classifier_train," << textio::format_double(train_s) << '\n';
  out << "inference_per_sample,"
      << textio::format_double(samples ? infer_s / static_cast<double>(samples) : 0.0) << '\n';
}

}  // namespace

void RunConfig::finalize() {
  auto fill = [this](fs::path& p, const char* name) {
    if (p.empty()) p = out_dir / name;
  };
  fill(paths.opcodes_dir, "opcodes");
  fill(paths.manifest, "labels.csv");
  fill(paths.vocab, "vocab.tsv");
  fill(paths.embedding, "embedding.sea");
  fill(paths.checkpoint, "model.ckpt");
  if (paths.predict_input.empty()) paths.predict_input = paths.opcodes_dir;
  model.d = embedding.d;
  model.classes = model.classes ? model.classes : kDefaultClasses;
  train.seed = seed;
  synth.seed = seed;
}

RunConfig parse_run_config(std::string_view text, const fs::path& base_dir) {
  RunConfig cfg;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = textio::trim(text.substr(start, end - start));
    start = end + 1;
    ++lineno;
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    for (std::size_t i = 1; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = textio::trim(line.substr(0, i));
        break;
      }
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
      section = std::string(textio::trim(line.substr(1, line.size() - 2)));
      if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
        throw ConfigError("unknown section [" + section + "]", lineno);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key = value", lineno);
    const auto key = textio::trim(line.substr(0, eq));
    const auto value = textio::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", lineno);
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    const auto it = setters().find(full);
    if (it == setters().end()) throw ConfigError("unknown key '" + full + "'", lineno);
    if (!seen.insert(full).second) throw ConfigError("duplicate key '" + full + "'", lineno);
    it->second(cfg, value, lineno, base_dir);
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

std::vector<OpcodeSequence> load_opcode_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".opcodes") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<OpcodeSequence> seqs;
  seqs.reserve(files.size());
  for (const auto& f : files) seqs.push_back(read_opcodes_file(f));
  if (seqs.empty()) throw EmptyCorpusError("no .opcodes files in " + dir.string());
  return seqs;
}

int cmd_extract(const RunConfig& cfg, std::ostream& log) {
  if (cfg.paths.asm_dir.empty()) throw ConfigError("[paths] asm_dir is required for extract", 0);
  if (!fs::is_directory(cfg.paths.asm_dir)) {
    throw ConfigError("asm_dir " + cfg.paths.asm_dir.string() + " is not a directory", 0);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(cfg.paths.asm_dir)) {
    if (entry.path().extension() == ".asm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    log << "error: no .asm files in " << cfg.paths.asm_dir.string() << '\n';
    return kExitUsage;
  }
  const DirectiveSet directives =
      cfg.paths.directives.empty() ? DirectiveSet() : DirectiveSet::load(cfg.paths.directives);
  fs::create_directories(cfg.paths.opcodes_dir);

  std::size_t workers = cfg.parser.workers ? cfg.parser.workers
                                           : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, files.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> written{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      std::string problem;
      try {
        const OpcodeSequence seq = extract_opcodes_file(files[i], directives);
        if (seq.tokens.empty()) {
          problem = "no opcodes found";
        } else {
          write_opcodes_file(cfg.paths.opcodes_dir / (seq.sample_id + ".opcodes"), seq);
          ++written;
        }
      } catch (const std::exception& e) {
        problem = e.what();
      }
      if (!problem.empty()) {
        std::lock_guard lock(log_mutex);
        log << "warning: skipping " << files[i].string() << ": " << problem << '\n';
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  log << "extracted " << written.load() << " of " << files.size() << " files\n";
  return written.load() > 0 ? kExitOk : kExitData;
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const SyntheticCorpus corpus = generate_synthetic_corpus(cfg.synth);
  fs::create_directories(cfg.paths.opcodes_dir);
  for (const auto& seq : corpus.sequences) {
    write_opcodes_file(cfg.paths.opcodes_dir / (seq.sample_id + ".opcodes"), seq);
  }
  if (!cfg.paths.manifest.parent_path().empty()) fs::create_directories(cfg.paths.manifest.parent_path());
  write_label_manifest(cfg.paths.manifest, corpus.sequences);
  log << "wrote " << corpus.sequences.size() << " synthetic samples to "
      << cfg.paths.opcodes_dir.string() << '\n';
  return kExitOk;
}

int cmd_build_vocab(const RunConfig& cfg, std::ostream& log) {
  require_dir(cfg.paths.opcodes_dir, "opcodes_dir");
  const auto seqs = load_opcode_dir(cfg.paths.opcodes_dir);
  const Vocabulary vocab = build_vocabulary(seqs, cfg.parser.min_count);
  if (!cfg.paths.vocab.parent_path().empty()) fs::create_directories(cfg.paths.vocab.parent_path());
  vocab.save(cfg.paths.vocab);
  log << "vocabulary of " << vocab.size() << " tokens written to " << cfg.paths.vocab.string() << '\n';
  return kExitOk;
}

int cmd_train_embeddings(const RunConfig& cfg, std::ostream& log) {
  require_dir(cfg.paths.opcodes_dir, "opcodes_dir");
  const auto seqs = load_opcode_dir(cfg.paths.opcodes_dir);
  const Vocabulary vocab = fs::exists(cfg.paths.vocab) ? Vocabulary::load(cfg.paths.vocab)
                                                       : build_vocabulary(seqs, cfg.parser.min_count);
  ensure_out_dir(cfg);
  const auto trained =
      train_embeddings(unlabeled_dataset(seqs, vocab), vocab.size(), cfg.embedding, cfg.seed);
  save_embedding(cfg.paths.embedding, trained.embedding, vocab.tokens());
  if (!fs::exists(cfg.paths.vocab)) vocab.save(cfg.paths.vocab);
  const std::vector<std::vector<double>> hist = {trained.loss_history};
  write_loss_csv(cfg.out_dir / "embedding_loss.csv", hist);
  log << "embedding " << vocab.size() << "x" << cfg.embedding.d << " written to "
      << cfg.paths.embedding.string() << '\n';
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto seqs = load_labeled(cfg, log);
  const Vocabulary vocab = build_vocabulary(seqs, cfg.parser.min_count);
  const LabeledDataset dataset = to_dataset(seqs, vocab, cfg.model.classes);
  ensure_out_dir(cfg);

  auto t0 = Clock::now();
  const auto emb = train_embeddings(unlabeled_dataset(seqs, vocab), vocab.size(), cfg.embedding, cfg.seed);
  const double embed_s = seconds_since(t0);
  log << "embeddings trained in " << embed_s << " s\n";

  t0 = Clock::now();
  const KFoldResult kfold = kfold_validate(dataset, emb.embedding.vectors, cfg.model, cfg.train);
  TrainConfig final_cfg = cfg.train;
  final_cfg.seed = cfg.seed + cfg.train.folds;
  const TrainResult final_fit = train(dataset, emb.embedding.vectors, cfg.model, final_cfg);
  const double train_s = seconds_since(t0);
  log << "classifier trained in " << train_s << " s (" << cfg.train.folds << " folds + final fit)\n";

  t0 = Clock::now();
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  (void)predict_probs(final_fit.params, cfg.model, emb.embedding.vectors, dataset, all);
  const double infer_s = seconds_since(t0);

  save_checkpoint(cfg.paths.checkpoint, final_fit.params);
  save_embedding(cfg.paths.embedding, emb.embedding, vocab.tokens());
  vocab.save(cfg.paths.vocab);
  write_report_json(cfg.out_dir / "report.json", kfold.report, dataset.class_names);
  write_report_csv(cfg.out_dir / "report.csv", kfold.report);
  write_confusion_csv(cfg.out_dir / "confusion.csv", kfold.report.pooled.confusion);
  write_loss_csv(cfg.out_dir / "loss_folds.csv", kfold.fold_loss_histories);
  const std::vector<std::vector<double>> final_hist = {final_fit.loss_history};
  write_loss_csv(cfg.out_dir / "loss_final.csv", final_hist);
  const std::vector<std::vector<double>> emb_hist = {emb.loss_history};
  write_loss_csv(cfg.out_dir / "embedding_loss.csv", emb_hist);
  write_timing_csv(cfg.out_dir / "timing.csv", embed_s, train_s, infer_s, dataset.size());

  const Metrics& m = kfold.report.pooled;
  log << "pooled accuracy " << m.accuracy << ", log loss " << m.log_loss << ", macro F1 "
      << m.f1_macro << '\n';
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const LoadedModel model = load_model(cfg);
  const auto seqs = load_labeled(cfg, log);
  const LabeledDataset dataset = to_dataset(seqs, model.vocab, model.cfg.classes);
  ensure_out_dir(cfg);
  const EvalReport report = evaluate(model.params, model.cfg, model.embedding.embedding.vectors, dataset);
  write_report_json(cfg.out_dir / "eval_report.json", report, dataset.class_names);
  write_report_csv(cfg.out_dir / "eval_report.csv", report);
  write_confusion_csv(cfg.out_dir / "eval_confusion.csv", report.pooled.confusion);
  log << "accuracy " << report.pooled.accuracy << ", log loss " << report.pooled.log_loss << '\n';
  return kExitOk;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const LoadedModel model = load_model(cfg);
  const fs::path& input = cfg.paths.predict_input;
  std::vector<OpcodeSequence> seqs;
  if (fs::is_directory(input)) {
    seqs = load_opcode_dir(input);
  } else if (fs::exists(input)) {
    seqs.push_back(read_opcodes_file(input));
  } else {
    throw ReadError("predict input " + input.string() + " not found", 0);
  }
  ensure_out_dir(cfg);

  const auto t0 = Clock::now();
  std::vector<std::pair<std::string, ForwardResult>> rows;
  for (const auto& s : seqs) {
    if (s.tokens.empty()) {
      log << "warning: skipping empty sample " << s.sample_id << '\n';
      continue;
    }
    const auto ids = model.vocab.encode(s.tokens);
    rows.emplace_back(s.sample_id, forward(ids, model.params, model.cfg, model.embedding.embedding.vectors));
  }
  const double elapsed = seconds_since(t0);
  if (rows.empty()) throw EmptyCorpusError("no non-empty samples to predict");

  const fs::path csv_path = cfg.out_dir / "predictions.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw ReadError("cannot write " + csv_path.string(), 0);
  csv << "sample_id";
  for (std::size_t c = 1; c <= model.cfg.classes; ++c) csv << ",p" << c;
  csv << ",argmax\n";
  for (const auto& [id, result] : rows) {
    csv << id;
    for (double p : result.probs) csv << ',' << textio::format_double(p);
    const auto best = std::max_element(result.probs.begin(), result.probs.end()) - result.probs.begin();
    csv << ',' << best + 1 << '\n';
  }
  const double per_sample = elapsed / static_cast<double>(rows.size());
  out << "seconds_per_sample " << textio::format_double(per_sample) << '\n';
  log << "wrote " << rows.size() << " predictions to " << csv_path.string() << '\n';
  return kExitOk;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  const auto seqs = load_labeled(cfg, log);
  const Vocabulary vocab = fs::exists(cfg.paths.vocab) ? Vocabulary::load(cfg.paths.vocab)
                                                       : build_vocabulary(seqs, cfg.parser.min_count);
  const LabeledDataset dataset = to_dataset(seqs, vocab, cfg.model.classes);
  ensure_out_dir(cfg);

  const auto hist = class_histogram(dataset);
  write_histogram_csv(cfg.out_dir / "histogram.csv", hist, dataset.class_names);

  const auto points = scatter_pairs(dataset, vocab, cfg.analytics.scatter_a, cfg.analytics.scatter_b);
  write_scatter_csv(cfg.out_dir / "scatter.csv", dataset, points, cfg.analytics.scatter_a,
                    cfg.analytics.scatter_b);

  const auto tables = count_opcodes(dataset, vocab.size());
  const auto corr = pearson_matrix(tables, cfg.analytics.top_k);
  write_correlation_csv(cfg.out_dir / "correlation.csv", corr, vocab);

  if (fs::exists(cfg.paths.embedding)) {
    const LoadedEmbedding emb = load_embedding(cfg.paths.embedding);
    check_vocab_matches(emb, vocab);
    const Pca2d pca = pca_2d(document_embeddings(dataset, emb.embedding.vectors));
    write_pca_csv(cfg.out_dir / "pca.csv", dataset, pca);
  } else {
    log << "note: no embedding at " << cfg.paths.embedding.string() << ", PCA skipped\n";
  }
  log << "analytics written to " << cfg.out_dir.string() << '\n';
  return kExitOk;
}

bool is_command(std::string_view name) {
  static const std::vector<std::string_view> names = {
      "extract", "synth", "build-vocab", "train-embeddings", "train", "evaluate", "predict", "analyze"};
  return std::find(names.begin(), names.end(), name) != names.end();
}

int run_command(std::string_view command, const fs::path& config_path, const Overrides& overrides,
                std::ostream& out, std::ostream& log) {
  try {
    if (!is_command(command)) throw ConfigError("unknown command '" + std::string(command) + "'", 0);
    RunConfig cfg = load_run_config(config_path);
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    cfg.finalize();
    try {
      cfg.embedding.validate();
      cfg.model.validate();
      cfg.train.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), 0);
    }
    if (command == "extract") return cmd_extract(cfg, log);
    if (command == "synth") return cmd_synth(cfg, log);
    if (command == "build-vocab") return cmd_build_vocab(cfg, log);
    if (command == "train-embeddings") return cmd_train_embeddings(cfg, log);
    if (command == "train") return cmd_train(cfg, log);
    if (command == "evaluate") return cmd_evaluate(cfg, log);
    if (command == "predict") return cmd_predict(cfg, out, log);
    return cmd_analyze(cfg, log);
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CompatibilityError& e) {
    log << "error: " << e.what() << '\n';
    return kExitCompatibility;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace sea::cli
