// SPDX-License-Identifier: Apache-2.0
#include "sea/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "sea/errors.hpp"
#include "sea/optim.hpp"
#include "sea/textio.hpp"

namespace sea {

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("train: epochs must be >= 1");
  if (folds < 2) throw DomainError("train: folds must be >= 2");
  if (batch_size < 1) throw DomainError("train: batch_size must be >= 1");
  if (!(lr > 0.0)) throw DomainError("train: learning rate must be positive");
  if (fold_workers < 1) throw DomainError("train: fold_workers must be >= 1");
}

TrainResult train(const LabeledDataset& dataset, const Matrix& embedding, const SeaConfig& model_cfg,
                  const TrainConfig& train_cfg, std::span<const std::size_t> indices) {
  model_cfg.validate();
  train_cfg.validate();
  if (embedding.cols() != model_cfg.d) {
    throw CompatibilityError("train: embedding dim " + std::to_string(embedding.cols()) +
                             " but model d " + std::to_string(model_cfg.d));
  }
  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (order.empty()) {
    order.resize(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.empty()) throw EmptyCorpusError("train: empty dataset");

  std::vector<std::size_t> class_count(model_cfg.classes, 0);
  for (std::size_t i : order) {
    const int y = dataset.samples.at(i).label;
    if (y < 0 || static_cast<std::size_t>(y) >= model_cfg.classes) {
      throw DomainError("train: label outside the model's classes");
    }
    if (dataset.samples[i].tokens.empty()) throw EmptySequenceError("train: empty sample");
    ++class_count[y];
  }
  const auto present = static_cast<std::size_t>(
      std::count_if(class_count.begin(), class_count.end(), [](std::size_t n) { return n > 0; }));
  if (present < 2) throw DomainError("train: training data holds a single class");
  std::vector<double> class_weight(model_cfg.classes, 1.0);
  if (train_cfg.class_weighting) {
    for (std::size_t c = 0; c < model_cfg.classes; ++c) {
      if (class_count[c]) {
        class_weight[c] = static_cast<double>(order.size()) /
                          (static_cast<double>(present) * static_cast<double>(class_count[c]));
      }
    }
  }

  TrainResult result;
  result.params = init_params(model_cfg, train_cfg.seed, &embedding);
  std::mt19937_64 rng(train_cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam;
  adam.lr = train_cfg.lr;
  const auto slots = result.params.tensors();

  for (std::size_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < order.size(); b += train_cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + train_cfg.batch_size);
      std::vector<std::span<const int>> batch;
      std::vector<int> labels;
      std::vector<double> weights;
      for (std::size_t i = b; i < end; ++i) {
        const Sample& s = dataset.samples[order[i]];
        batch.emplace_back(s.tokens);
        labels.push_back(s.label);
        weights.push_back(class_weight[s.label]);
      }

      ad::Tape tape;
      std::vector<ad::Var> leaves;
      leaves.reserve(slots.size());
      for (const Matrix* m : slots) leaves.push_back(tape.parameter(*m));
      std::optional<ad::Var> frozen;
      if (!result.params.has_embedding()) frozen = tape.constant(embedding);
      const SeaVars vars = bind_sea_vars(leaves, frozen);
      const ad::Var loss = sea_batch_loss(vars, batch, std::move(labels), std::move(weights),
                                          model_cfg.max_len);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) throw NumericError("train: loss became non-finite");
      total += value * static_cast<double>(end - b);
      tape.backward(loss, true);

      std::vector<Matrix> grads;
      grads.reserve(leaves.size());
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        const Matrix& g = leaves[k].grad();
        grads.push_back(g.empty() ? Matrix(slots[k]->rows(), slots[k]->cols()) : g);
      }
      clip_global_norm(grads, train_cfg.clip_norm);
      adam_step(slots, grads, adam);
    }
    result.loss_history.push_back(total / static_cast<double>(order.size()));
    if (train_cfg.target_loss > 0.0 && result.loss_history.back() < train_cfg.target_loss) break;
  }
  return result;
}

Matrix predict_probs(const SeaParams& params, const SeaConfig& cfg, const Matrix& embedding,
                     const LabeledDataset& dataset, std::span<const std::size_t> indices) {
  Matrix probs(indices.size(), cfg.classes);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto out = forward(dataset.samples.at(indices[r]).tokens, params, cfg, embedding);
    std::copy(out.probs.begin(), out.probs.end(), probs.row(r).begin());
  }
  return probs;
}

EvalReport evaluate(const SeaParams& params, const SeaConfig& cfg, const Matrix& embedding,
                    const LabeledDataset& dataset) {
  if (dataset.samples.empty()) throw EmptyCorpusError("evaluate: empty dataset");
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Matrix probs = predict_probs(params, cfg, embedding, dataset, all);
  const auto labels = dataset.labels();
  EvalReport report;
  report.pooled = compute_metrics(probs, labels);
  return report;
}

KFoldResult kfold_validate(const LabeledDataset& dataset, const Matrix& embedding,
                           const SeaConfig& model_cfg, const TrainConfig& train_cfg) {
  train_cfg.validate();
  if (dataset.samples.empty()) throw EmptyCorpusError("kfold_validate: empty dataset");
  const auto labels = dataset.labels();

  KFoldResult result;
  result.split = stratified_kfold(labels, train_cfg.folds, train_cfg.seed);
  result.held_out_probs = Matrix(dataset.size(), model_cfg.classes);
  result.fold_params.resize(train_cfg.folds);
  result.fold_loss_histories.resize(train_cfg.folds);
  result.report.per_fold.resize(train_cfg.folds);

  auto run_fold = [&](std::size_t fold) {
    TrainConfig cfg = train_cfg;
    cfg.seed = train_cfg.seed + fold;
    const auto train_idx = result.split.train_indices(fold);
    const auto test_idx = result.split.test_indices(fold);
    TrainResult trained = train(dataset, embedding, model_cfg, cfg, train_idx);
    const Matrix probs = predict_probs(trained.params, model_cfg, embedding, dataset, test_idx);
    std::vector<int> fold_labels;
    for (std::size_t i : test_idx) fold_labels.push_back(labels[i]);
    // Each fold writes disjoint rows and its own slots.
    for (std::size_t r = 0; r < test_idx.size(); ++r) {
      std::copy(probs.row(r).begin(), probs.row(r).end(),
                result.held_out_probs.row(test_idx[r]).begin());
    }
    if (!test_idx.empty()) result.report.per_fold[fold] = compute_metrics(probs, fold_labels);
    result.fold_params[fold] = std::move(trained.params);
    result.fold_loss_histories[fold] = std::move(trained.loss_history);
  };

  const std::size_t workers = std::min(train_cfg.fold_workers, train_cfg.folds);
  for (std::size_t start = 0; start < train_cfg.folds; start += workers) {
    std::vector<std::future<void>> running;
    for (std::size_t f = start; f < std::min(train_cfg.folds, start + workers); ++f) {
      running.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                   run_fold, f));
    }
    for (auto& r : running) r.get();
  }

  result.report.pooled = compute_metrics(result.held_out_probs, labels);
  return result;
}

namespace {

nlohmann::json metrics_json(const Metrics& m) {
  nlohmann::json j;
  j["samples"] = m.samples;
  j["accuracy"] = m.accuracy;
  j["f1_macro"] = m.f1_macro;
  j["f1_weighted"] = m.f1_weighted;
  j["log_loss"] = m.log_loss;
  if (std::isnan(m.roc_auc_ovr_macro)) {
    j["roc_auc_ovr_macro"] = nullptr;
  } else {
    j["roc_auc_ovr_macro"] = m.roc_auc_ovr_macro;
  }
  j["f1_per_class"] = m.f1_per_class;
  j["recall_per_class"] = m.recall_per_class;
  j["confusion"] = m.confusion;
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReadError("cannot write " + path.string(), 0);
  return out;
}

std::string fmt(double v) { return std::isnan(v) ? "nan" : textio::format_double(v); }

}  // namespace

std::string report_json(const EvalReport& report, std::span<const std::string> class_names) {
  nlohmann::json j;
  j["class_names"] = std::vector<std::string>(class_names.begin(), class_names.end());
  j["f1_headline"] = "macro";
  j["confusion_scope"] = report.per_fold.empty() ? "single evaluation" : "pooled over folds";
  j["pooled"] = metrics_json(report.pooled);
  j["per_fold"] = nlohmann::json::array();
  for (const auto& m : report.per_fold) j["per_fold"].push_back(metrics_json(m));
  return j.dump(2) + "\n";
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report,
                       std::span<const std::string> class_names) {
  open_out(path) << report_json(report, class_names);
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "fold,samples,accuracy,f1_macro,f1_weighted,log_loss,roc_auc_ovr_macro\n";
  auto row = [&out](const std::string& name, const Metrics& m) {
    out << name << ',' << m.samples << ',' << fmt(m.accuracy) << ',' << fmt(m.f1_macro) << ','
        << fmt(m.f1_weighted) << ',' << fmt(m.log_loss) << ',' << fmt(m.roc_auc_ovr_macro) << '\n';
  };
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) row(std::to_string(f + 1), report.per_fold[f]);
  row("pooled", report.pooled);
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& confusion) {
  auto out = open_out(path);
  out << "true\\predicted";
  for (std::size_t c = 0; c < confusion.size(); ++c) out << ',' << c + 1;
  out << '\n';
  for (std::size_t r = 0; r < confusion.size(); ++r) {
    out << r + 1;
    for (auto v : confusion[r]) out << ',' << v;
    out << '\n';
  }
}

void write_loss_csv(const std::filesystem::path& path,
                    std::span<const std::vector<double>> histories) {
  auto out = open_out(path);
  out << "run,epoch,loss\n";
  for (std::size_t r = 0; r < histories.size(); ++r) {
    for (std::size_t e = 0; e < histories[r].size(); ++e) {
      out << r + 1 << ',' << e + 1 << ',' << fmt(histories[r][e]) << '\n';
    }
  }
}

}  // namespace sea
