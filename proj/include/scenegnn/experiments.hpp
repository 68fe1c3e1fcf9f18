#pragma once

// Desk-scale experiment harness: beta sweep, class-count ablation and the
// size/speed benchmark, plus CSV/JSON/table reporting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenegnn/checkpoint.hpp"
#include "scenegnn/detections.hpp"
#include "scenegnn/error.hpp"
#include "scenegnn/gnn_models.hpp"
#include "scenegnn/training.hpp"

namespace scenegnn::experiments {

/// Published figures, displayed next to local measurements. Never used as targets.
namespace reference {

struct BenchmarkRow {
  gnn::Variant variant;
  double accuracy;
  std::size_t params;
  double inference_ms;
};

inline constexpr BenchmarkRow kBenchmark[] = {
    {gnn::Variant::GCN, 0.889, 2'104'322, 0.470},
    {gnn::Variant::GIN, 0.906, 14'703'618, 0.123},
    {gnn::Variant::GINLAF, 0.920, 23'712, 0.110},
};

inline const BenchmarkRow& benchmark_row(gnn::Variant v) {
  for (const auto& r : kBenchmark)
    if (r.variant == v) return r;
  return kBenchmark[0];
}

/// Accuracy by minimum distinct classes per scene, k = 3..6.
inline constexpr int kClassCountKs[] = {3, 4, 5, 6};
inline constexpr double kClassCountAccuracy[3][4] = {
    {0.8750, 0.8877, 0.8884, 0.8886},  // GCN
    {0.9021, 0.9050, 0.9054, 0.9059},  // GIN
    {0.9083, 0.9123, 0.9142, 0.9196},  // GINLAF
};

inline std::optional<double> class_count_accuracy(gnn::Variant v, int k) {
  if (k < 3 || k > 6) return std::nullopt;
  return kClassCountAccuracy[static_cast<int>(v)][k - 3];
}

inline constexpr double kOptimalBeta = 0.1;
/// Accuracy gain at the optimal beta, GCN / GIN / GINLAF.
inline constexpr double kBetaGain[3] = {0.0122, 0.0075, 0.0088};

}  // namespace reference

struct SweepPoint {
  double beta = 0.0;
  double accuracy = 0.0;
};

struct SweepResult {
  /// Sorted by beta (nondecreasing; repeated betas are kept).
  std::vector<SweepPoint> points;
  /// Smallest beta reaching the best accuracy.
  double argmax_beta = 0.0;
};

/// For each beta: rebuild every graph, train from the same seed, record
/// test accuracy.
inline SweepResult sweep_beta(gnn::ModelConfig model_cfg, const training::TrainConfig& train_cfg, const DatasetSplit& data,
                              std::vector<double> betas,
                              const std::function<void(const SweepPoint&)>& on_point = {}) {
  if (betas.empty()) throw Error(ErrorKind::InvalidConfig, "beta list is empty");
  for (double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw Error(ErrorKind::InvalidConfig, "betas must be finite and >= 0");
  }
  std::stable_sort(betas.begin(), betas.end());
  SweepResult result;
  double best = -1.0;
  for (double beta : betas) {
    model_cfg.beta = beta;
    const auto ckpt = training::train(data.train, data.val, model_cfg, train_cfg);
    const SweepPoint p{beta, training::evaluate(ckpt, data.test).accuracy};
    result.points.push_back(p);
    if (p.accuracy > best) {
      best = p.accuracy;
      result.argmax_beta = beta;
    }
    if (on_point) on_point(p);
  }
  return result;
}

inline std::size_t distinct_labels(const SceneSample& s) {
  std::set<int> labels;
  for (const auto& d : s.detections) labels.insert(d.label_id);
  return labels.size();
}

struct AblationRow {
  int k = 0;
  std::size_t subset_size = 0;
  /// Absent when the subset is empty (see `error`).
  std::optional<training::Metrics> metrics;
  std::string error;
};

/// Evaluates on scenes with at least k distinct labels (exactly k when
/// `exact`). An empty subset is reported in its row, not thrown.
inline std::vector<AblationRow> ablation_class_count(const training::Checkpoint& ckpt, const std::vector<SceneSample>& scenes,
                                                     const std::vector<int>& ks, bool exact = false) {
  if (ks.empty()) throw Error(ErrorKind::InvalidConfig, "k list is empty");
  for (int k : ks) {
    if (k < 1) throw Error(ErrorKind::InvalidConfig, "k must be >= 1");
  }
  const auto model = ckpt.model();
  const auto graphs = training::build_labeled_graphs(scenes, ckpt.model_config);
  std::vector<std::size_t> richness;
  for (const auto& s : scenes) richness.push_back(distinct_labels(s));

  std::vector<AblationRow> rows;
  for (int k : ks) {
    AblationRow row;
    row.k = k;
    std::vector<training::LabeledGraph> subset;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const auto uk = static_cast<std::size_t>(k);
      if (exact ? richness[i] == uk : richness[i] >= uk) subset.push_back(graphs[i]);
    }
    row.subset_size = subset.size();
    if (subset.empty()) {
      row.error = Error(ErrorKind::EmptySubset, "no scene has " + std::string(exact ? "exactly " : "at least ") +
                                                    std::to_string(k) + " distinct labels")
                      .what();
    } else {
      row.metrics = training::evaluate(model, subset);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

struct BenchmarkOptions {
  int warmup_passes = 10;
  int timed_passes = 100;
  /// Include graph construction in the timed region.
  bool full_pipeline = false;
};

struct BenchmarkRow {
  gnn::Variant variant = gnn::Variant::GINLAF;
  std::size_t param_count = 0;
  /// Median milliseconds per single-graph forward pass.
  double inference_ms = 0.0;
  double accuracy = 0.0;
  reference::BenchmarkRow reference{};
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline BenchmarkReport benchmark(const std::vector<training::Checkpoint>& checkpoints, const std::vector<SceneSample>& scenes,
                                 const BenchmarkOptions& opts = {}) {
  if (checkpoints.empty()) throw Error(ErrorKind::InvalidConfig, "benchmark needs at least one checkpoint");
  if (scenes.empty()) throw Error(ErrorKind::EmptyDataset, "benchmark dataset is empty");
  if (opts.warmup_passes < 10 || opts.timed_passes < 100) {
    throw Error(ErrorKind::InvalidConfig, "benchmark needs >= 10 warm-up and >= 100 timed passes");
  }
  using clock = std::chrono::steady_clock;
  BenchmarkReport report;
  for (const auto& ckpt : checkpoints) {
    const auto model = ckpt.model();
    const auto& cfg = model.config();
    const auto graphs = training::build_labeled_graphs(scenes, cfg);

    nn::NoGradGuard no_grad;
    double sink = 0.0;
    auto pass = [&](std::size_t i) {
      const std::size_t idx = i % scenes.size();
      if (opts.full_pipeline) {
        sink += model.forward(build_graph(scenes[idx], cfg.beta, cfg.vocab_size)).values()[0];
      } else {
        sink += model.forward(graphs[idx].graph).values()[0];
      }
    };
    for (int i = 0; i < opts.warmup_passes; ++i) pass(static_cast<std::size_t>(i));
    std::vector<double> times;
    for (int i = 0; i < opts.timed_passes; ++i) {
      const auto t0 = clock::now();
      pass(static_cast<std::size_t>(i));
      times.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    if (!std::isfinite(sink)) throw Error(ErrorKind::NonFinite, "model produced non-finite output");

    BenchmarkRow row;
    row.variant = cfg.variant;
    row.param_count = nn::param_count(model.parameters());
    row.inference_ms = median(std::move(times));
    row.accuracy = training::evaluate(model, graphs).accuracy;
    row.reference = reference::benchmark_row(cfg.variant);
    report.rows.push_back(row);
  }
  return report;
}

// ---- reporting ----

enum class Format { Csv, Json, Table };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  if (s == "table") return Format::Table;
  throw Error(ErrorKind::InvalidConfig, "unknown format '" + s + "' (expected csv, json or table)");
}

inline std::string fmt(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline void write_sweep(std::ostream& out, const SweepResult& r, Format f, gnn::Variant variant) {
  const double ref_gain = reference::kBetaGain[static_cast<int>(variant)];
  switch (f) {
    case Format::Csv:
      out << "beta,test_accuracy\n";
      for (const auto& p : r.points) out << fmt(p.beta, 4) << "," << fmt(p.accuracy) << "\n";
      break;
    case Format::Json: {
      nlohmann::ordered_json j;
      j["points"] = nlohmann::ordered_json::array();
      for (const auto& p : r.points) j["points"].push_back({{"beta", p.beta}, {"accuracy", p.accuracy}});
      j["argmax_beta"] = r.argmax_beta;
      j["reference"] = {{"optimal_beta", reference::kOptimalBeta}, {"gain_at_optimum", ref_gain}};
      out << j.dump(2) << "\n";
      break;
    }
    case Format::Table:
      out << std::left << std::setw(10) << "beta" << "test accuracy\n";
      for (const auto& p : r.points) out << std::setw(10) << fmt(p.beta, 3) << fmt(100 * p.accuracy, 2) << "%\n";
      out << "best beta: " << fmt(r.argmax_beta, 3) << "  (published optimum " << fmt(reference::kOptimalBeta, 1)
          << ", gain " << fmt(100 * ref_gain, 2) << "%)\n";
      break;
  }
}

inline void write_ablation(std::ostream& out, const std::vector<AblationRow>& rows, Format f, gnn::Variant variant) {
  auto ref = [variant](int k) { return reference::class_count_accuracy(variant, k); };
  switch (f) {
    case Format::Csv:
      out << "k,subset_size,accuracy,reference_accuracy\n";
      for (const auto& r : rows) {
        out << r.k << "," << r.subset_size << "," << (r.metrics ? fmt(r.metrics->accuracy) : "") << ","
            << (ref(r.k) ? fmt(*ref(r.k), 4) : "") << "\n";
      }
      break;
    case Format::Json: {
      auto j = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json row{{"k", r.k}, {"subset_size", r.subset_size}};
        row["accuracy"] = r.metrics ? nlohmann::ordered_json(r.metrics->accuracy) : nlohmann::ordered_json(nullptr);
        if (!r.error.empty()) row["error"] = r.error;
        row["reference_accuracy"] = ref(r.k) ? nlohmann::ordered_json(*ref(r.k)) : nlohmann::ordered_json(nullptr);
        j.push_back(row);
      }
      out << j.dump(2) << "\n";
      break;
    }
    case Format::Table:
      out << std::left << std::setw(6) << "k" << std::setw(10) << "scenes" << std::setw(12) << "accuracy" << "published\n";
      for (const auto& r : rows) {
        out << std::setw(6) << r.k << std::setw(10) << r.subset_size << std::setw(12)
            << (r.metrics ? fmt(100 * r.metrics->accuracy, 2) + "%" : std::string("empty")) << (ref(r.k) ? fmt(100 * *ref(r.k), 2) + "%" : "-")
            << "\n";
      }
      break;
  }
}

inline void write_benchmark(std::ostream& out, const BenchmarkReport& rep, Format f) {
  switch (f) {
    case Format::Csv:
      out << "variant,param_count,inference_ms,accuracy,reference_param_count,reference_inference_ms,reference_accuracy\n";
      for (const auto& r : rep.rows) {
        out << gnn::to_string(r.variant) << "," << r.param_count << "," << fmt(r.inference_ms, 4) << "," << fmt(r.accuracy) << ","
            << r.reference.params << "," << fmt(r.reference.inference_ms, 3) << "," << fmt(r.reference.accuracy, 3) << "\n";
      }
      break;
    case Format::Json: {
      auto j = nlohmann::ordered_json::array();
      for (const auto& r : rep.rows) {
        j.push_back({{"variant", gnn::to_string(r.variant)},
                     {"param_count", r.param_count},
                     {"inference_ms", r.inference_ms},
                     {"accuracy", r.accuracy},
                     {"reference", {{"param_count", r.reference.params}, {"inference_ms", r.reference.inference_ms}, {"accuracy", r.reference.accuracy}}}});
      }
      out << j.dump(2) << "\n";
      break;
    }
    case Format::Table:
      out << std::left << std::setw(9) << "model" << std::setw(12) << "params" << std::setw(12) << "ms/graph" << std::setw(11)
          << "accuracy" << "| published: params, ms, accuracy\n";
      for (const auto& r : rep.rows) {
        out << std::setw(9) << gnn::to_string(r.variant) << std::setw(12) << r.param_count << std::setw(12) << fmt(r.inference_ms, 4)
            << std::setw(11) << (fmt(100 * r.accuracy, 2) + "%") << "| " << r.reference.params << ", "
            << fmt(r.reference.inference_ms, 3) << ", " << fmt(100 * r.reference.accuracy, 1) << "%\n";
      }
      break;
  }
}

}  // namespace scenegnn::experiments
