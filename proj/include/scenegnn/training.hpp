#pragma once

// Cross-entropy training with Adam (decoupled weight decay) or SGD, and
// accuracy evaluation. A batch is one forward pass over the disjoint union
// of its graphs; each step applies the gradient of the mean per-graph loss.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scenegnn/detections.hpp"
#include "scenegnn/error.hpp"
#include "scenegnn/gnn_models.hpp"
#include "scenegnn/graph_builder.hpp"

namespace scenegnn::training {

enum class OptimizerKind { Adam, SGD };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::SGD;
  throw Error(ErrorKind::InvalidConfig, "unknown optimizer '" + s + "' (expected adam or sgd)");
}

struct TrainConfig {
  double learning_rate = 0.001;
  double weight_decay = 5e-4;
  int epochs = 10;
  int batch_size = 64;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::Adam;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be > 0");
  if (!(cfg.weight_decay >= 0.0)) throw Error(ErrorKind::InvalidConfig, "weight_decay must be >= 0");
  if (cfg.epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (cfg.batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be >= 1");
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct Metrics {
  double accuracy = 0.0;
  /// Recall per true class; NaN when the class is absent.
  std::array<double, 2> per_class_accuracy{};
  /// confusion[true][predicted]
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  double mean_loss = 0.0;

  std::size_t count() const { return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]; }
};

/// -log_probs[target].
inline nn::Tensor cross_entropy_loss(const nn::Tensor& log_probs, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= log_probs.cols()) {
    throw Error(ErrorKind::BadTarget, "target class " + std::to_string(target) + " out of range");
  }
  return nn::neg(nn::pick(log_probs, 0, static_cast<std::size_t>(target)));
}

/// Argmax over classes; an exact tie resolves to class 0 (indoor).
inline int predict(std::span<const double> log_probs) { return log_probs[1] > log_probs[0] ? 1 : 0; }

/// Optimizer moments, one slot per parameter in store order.
struct OptimizerState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
  long step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// Applies one update from the gradients accumulated in `store`, then zeros them.
///   Adam: theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
///   SGD:  theta -= lr * (g + wd * theta)
inline void optimizer_step(nn::ParameterStore& store, OptimizerState& state, const TrainConfig& cfg) {
  const double lr = cfg.learning_rate;
  const double wd = cfg.weight_decay;
  if (cfg.optimizer == OptimizerKind::Adam && state.first.empty()) {
    for (const auto& [_, t] : store) {
      state.first.emplace_back(t.size(), 0.0);
      state.second.emplace_back(t.size(), 0.0);
    }
  }
  ++state.step;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  std::size_t slot = 0;
  for (auto& [_, t] : store) {
    auto theta = t.mutable_values();
    auto grad = t.mutable_grad();
    if (cfg.optimizer == OptimizerKind::SGD) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * (grad[i] + wd * theta[i]);
    } else {
      auto& m = state.first[slot];
      auto& v = state.second[slot];
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + kAdamEps) + wd * theta[i]);
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    ++slot;
  }
}

struct LabeledGraph {
  SceneGraph graph;
  int target = 0;
};

inline std::vector<SceneGraph> build_graphs(const std::vector<SceneSample>& scenes, const gnn::ModelConfig& cfg) {
  std::vector<SceneGraph> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) out.push_back(build_graph(s, cfg.beta, cfg.vocab_size));
  return out;
}

inline std::vector<LabeledGraph> build_labeled_graphs(const std::vector<SceneSample>& scenes, const gnn::ModelConfig& cfg) {
  std::vector<LabeledGraph> out;
  out.reserve(scenes.size());
  for (const auto& s : scenes) {
    if (!s.scene_class) throw Error(ErrorKind::UnlabeledSample, "scene '" + s.scene_id + "' has no scene label");
    out.push_back({build_graph(s, cfg.beta, cfg.vocab_size), static_cast<int>(*s.scene_class)});
  }
  return out;
}

/// Graphs per forward pass during evaluation and training.
inline constexpr std::size_t kEvalChunk = 64;

inline Metrics evaluate(const gnn::Classifier& model, const std::vector<LabeledGraph>& data) {
  if (data.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  nn::NoGradGuard no_grad;
  Metrics m;
  double loss = 0.0;
  for (std::size_t start = 0; start < data.size(); start += kEvalChunk) {
    const std::size_t stop = std::min(data.size(), start + kEvalChunk);
    std::vector<const SceneGraph*> graphs;
    for (std::size_t i = start; i < stop; ++i) graphs.push_back(&data[i].graph);
    const nn::Tensor lp = model.forward(gnn::make_batch(graphs));
    for (std::size_t i = start; i < stop; ++i) {
      const auto row = lp.values().subspan((i - start) * 2, 2);
      const auto target = static_cast<std::size_t>(data[i].target);
      loss -= row[target];
      ++m.confusion[target][static_cast<std::size_t>(predict(row))];
    }
  }
  const auto total = static_cast<double>(data.size());
  m.accuracy = static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / total;
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t n = m.confusion[c][0] + m.confusion[c][1];
    m.per_class_accuracy[c] = n ? static_cast<double>(m.confusion[c][c]) / static_cast<double>(n) : std::nan("");
  }
  m.mean_loss = loss / total;
  return m;
}

struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  int version = kFormatVersion;
  gnn::ModelConfig model_config;
  TrainConfig train_config;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> history;
  nn::ParameterStore parameters;

  gnn::Classifier model() const { return gnn::Classifier(model_config, parameters.clone()); }
};

inline Metrics evaluate(const Checkpoint& ckpt, const std::vector<SceneSample>& scenes) {
  if (scenes.empty()) throw Error(ErrorKind::EmptyDataset, "cannot evaluate on an empty dataset");
  return evaluate(ckpt.model(), build_labeled_graphs(scenes, ckpt.model_config));
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on prebuilt graphs. Deterministic in `cfg.seed`, which seeds both
/// parameter initialization and the per-epoch shuffle.
inline Checkpoint train_graphs(const std::vector<LabeledGraph>& train_set, const std::vector<LabeledGraph>& val_set,
                               const gnn::ModelConfig& model_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  validate(cfg);
  gnn::validate(model_cfg);
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");

  gnn::Classifier model(model_cfg, cfg.seed);
  OptimizerState state;
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  Checkpoint ckpt;
  ckpt.model_config = model_cfg;
  ckpt.train_config = cfg;
  ckpt.seed = cfg.seed;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<const SceneGraph*> graphs;
      std::vector<int> targets;
      for (std::size_t i = start; i < stop; ++i) {
        graphs.push_back(&train_set[order[i]].graph);
        targets.push_back(train_set[order[i]].target);
      }
      const nn::Tensor lp = model.forward(gnn::make_batch(graphs));
      const nn::Tensor picked = nn::select_per_row(lp, targets);
      for (std::size_t i = 0; i < targets.size(); ++i) {
        epoch_loss -= picked.values()[i];
        correct += predict(lp.values().subspan(i * 2, 2)) == targets[i] ? 1 : 0;
      }
      // Mean per-graph cross-entropy over the batch.
      nn::scale(nn::sum(picked), -1.0 / static_cast<double>(targets.size())).backward();
      optimizer_step(model.parameters(), state, cfg);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!val_set.empty()) {
      const Metrics vm = evaluate(model, val_set);
      rec.val_loss = vm.mean_loss;
      rec.val_accuracy = vm.accuracy;
    }
    ckpt.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  ckpt.parameters = model.parameters().clone();
  return ckpt;
}

inline Checkpoint train(const std::vector<SceneSample>& train_set, const std::vector<SceneSample>& val_set,
                        const gnn::ModelConfig& model_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  validate(cfg);
  gnn::validate(model_cfg);
  if (train_set.empty()) throw Error(ErrorKind::EmptyDataset, "training set is empty");
  return train_graphs(build_labeled_graphs(train_set, model_cfg), build_labeled_graphs(val_set, model_cfg), model_cfg, cfg,
                      on_epoch);
}

}  // namespace scenegnn::training
