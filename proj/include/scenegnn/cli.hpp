#pragma once

// Command-line front end. `run` is the whole program; tools/scenegnn.cpp
// only forwards argv. Exit codes: 0 success, 1 usage error, 2 data or
// validation error.

#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scenegnn/checkpoint.hpp"
#include "scenegnn/detections.hpp"
#include "scenegnn/experiments.hpp"
#include "scenegnn/gnn_models.hpp"
#include "scenegnn/graph_builder.hpp"
#include "scenegnn/synthetic.hpp"
#include "scenegnn/training.hpp"

namespace scenegnn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

namespace detail {

struct ModelFlags {
  std::string model;
  double beta = kDefaultBeta;
  std::string edge_weights = "expneg";
  int hidden = 0;
  int layers = 3;
  int vocab_size = kDefaultVocabSize;
  double lr = 0.001;
  double wd = 5e-4;
  int epochs = 10;
  int batch = 64;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";

  void add_to(CLI::App& app, bool model_required) {
    auto* m = app.add_option("--model", model, "Architecture: gcn, gin or ginlaf")
                  ->check(CLI::IsMember({"gcn", "gin", "ginlaf"}));
    if (model_required) m->required();
    app.add_option("--beta", beta, "Distance ratio for edge construction")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--edge-weights", edge_weights, "GCN propagation weights")
        ->capture_default_str()
        ->check(CLI::IsMember({"binary", "expneg"}));
    app.add_option("--hidden", hidden, "Hidden width (default 1024 for gcn/gin, 32 for ginlaf)");
    app.add_option("--layers", layers, "Number of graph layers")->capture_default_str();
    app.add_option("--vocab-size", vocab_size, "Label vocabulary size")->capture_default_str();
    app.add_option("--lr", lr, "Learning rate")->capture_default_str();
    app.add_option("--wd", wd, "Weight decay")->capture_default_str();
    app.add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app.add_option("--batch", batch, "Graphs per optimizer step")->capture_default_str();
    app.add_option("--seed", seed, "Random seed")->capture_default_str();
    app.add_option("--optimizer", optimizer, "adam or sgd")->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));
  }

  gnn::ModelConfig model_config() const {
    auto cfg = gnn::ModelConfig::defaults(gnn::parse_variant(model));
    if (hidden > 0) cfg.hidden_dim = hidden;
    cfg.num_layers = layers;
    cfg.vocab_size = vocab_size;
    cfg.edge_weight_mode = gnn::parse_edge_weight_mode(edge_weights);
    cfg.beta = beta;
    gnn::validate(cfg);
    return cfg;
  }

  training::TrainConfig train_config() const {
    training::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.weight_decay = wd;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.optimizer = training::parse_optimizer(optimizer);
    training::validate(cfg);
    return cfg;
  }
};

/// Writes `text` to `path`, or to `out` when path is empty.
inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  f << text;
}

inline std::string strip_jsonl(const std::string& path) {
  const std::string ext = ".jsonl";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size());
  }
  return path;
}

inline void require_labeled(const std::vector<SceneSample>& scenes, const std::string& what) {
  for (const auto& s : scenes) {
    if (!s.scene_class) {
      throw Error(ErrorKind::UnlabeledSample, what + " scene '" + s.scene_id + "' has no \"scene\" label; "
                                                        "eval, train and experiments need labeled data (classify does not)");
    }
  }
}

inline nlohmann::ordered_json matrix_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string metrics_text(const training::Metrics& m, experiments::Format f) {
  std::ostringstream o;
  using experiments::fmt;
  switch (f) {
    case experiments::Format::Csv:
      o << "count,accuracy,indoor_accuracy,outdoor_accuracy,mean_loss,tn,fp,fn,tp\n"
        << m.count() << "," << fmt(m.accuracy) << "," << fmt(m.per_class_accuracy[0]) << "," << fmt(m.per_class_accuracy[1])
        << "," << fmt(m.mean_loss) << "," << m.confusion[0][0] << "," << m.confusion[0][1] << "," << m.confusion[1][0] << ","
        << m.confusion[1][1] << "\n";
      break;
    case experiments::Format::Json: {
      nlohmann::ordered_json j{{"count", m.count()}, {"accuracy", m.accuracy}};
      j["per_class_accuracy"] = {{"indoor", std::isnan(m.per_class_accuracy[0]) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.per_class_accuracy[0])},
                                 {"outdoor", std::isnan(m.per_class_accuracy[1]) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.per_class_accuracy[1])}};
      j["confusion"] = {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}};
      j["mean_loss"] = m.mean_loss;
      o << j.dump(2) << "\n";
      break;
    }
    case experiments::Format::Table:
      o << "scenes:    " << m.count() << "\n"
        << "accuracy:  " << fmt(100 * m.accuracy, 2) << "%\n"
        << "indoor:    " << fmt(100 * m.per_class_accuracy[0], 2) << "%\n"
        << "outdoor:   " << fmt(100 * m.per_class_accuracy[1], 2) << "%\n"
        << "mean loss: " << fmt(m.mean_loss) << "\n"
        << "confusion (rows true, cols predicted; indoor, outdoor):\n"
        << "  " << m.confusion[0][0] << " " << m.confusion[0][1] << "\n"
        << "  " << m.confusion[1][0] << " " << m.confusion[1][1] << "\n";
      break;
  }
  return o.str();
}

inline std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("list", "'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Indoor/outdoor scene classification from object detections with graph neural networks", "scenegnn"};
  app.require_subcommand(1);

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Generate a labeled synthetic scene file");
  std::size_t gen_n = 2000;
  std::uint64_t gen_seed = 0;
  int gen_vocab = kDefaultVocabSize;
  std::string gen_out;
  bool gen_split = false;
  gen->add_option("--n", gen_n, "Number of scenes")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--vocab-size", gen_vocab, "Label vocabulary size")->capture_default_str();
  gen->add_option("--out", gen_out, "Output JSON-Lines file")->required();
  gen->add_flag("--split", gen_split, "Also write 8:1:1 <out>.train/.val/.test.jsonl");

  // train
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  detail::ModelFlags train_flags;
  std::string train_data, train_val, train_out;
  train_flags.add_to(*train, true);
  train->add_option("--data", train_data, "Training scenes (JSON-Lines)")->required();
  train->add_option("--val", train_val, "Validation scenes");
  train->add_option("--out", train_out, "Checkpoint path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on labeled scenes");
  std::string eval_model, eval_data, eval_format = "csv", eval_out;
  eval->add_option("--model", eval_model, "Checkpoint path")->required();
  eval->add_option("--data", eval_data, "Labeled scenes")->required();
  eval->add_option("--format", eval_format, "csv, json or table")->capture_default_str()->check(CLI::IsMember({"csv", "json", "table"}));
  eval->add_option("--out", eval_out, "Write the report here instead of stdout");

  // classify
  auto* classify = app.add_subcommand("classify", "Print scene_id,indoor_logprob,outdoor_logprob,predicted per scene");
  std::string cls_model, cls_data;
  classify->add_option("--model", cls_model, "Checkpoint path")->required();
  classify->add_option("--data", cls_data, "Scenes (labels optional)")->required();

  // sweep-beta
  auto* sweep = app.add_subcommand("sweep-beta", "Train and test once per distance ratio");
  detail::ModelFlags sweep_flags;
  std::string sweep_data, sweep_val, sweep_test, sweep_betas = "0,0.05,0.1,0.2,0.5,1.0", sweep_format = "csv", sweep_out;
  sweep_flags.model = "ginlaf";
  sweep_flags.add_to(*sweep, false);
  sweep->add_option("--data", sweep_data, "Labeled scenes (split 8:1:1 unless --test is given)")->required();
  sweep->add_option("--val", sweep_val, "Validation scenes");
  sweep->add_option("--test", sweep_test, "Test scenes");
  sweep->add_option("--betas", sweep_betas, "Comma-separated distance ratios")->capture_default_str();
  sweep->add_option("--format", sweep_format, "csv, json or table")->capture_default_str()->check(CLI::IsMember({"csv", "json", "table"}));
  sweep->add_option("--out", sweep_out, "Write the report here instead of stdout");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Accuracy by number of distinct object classes per scene");
  std::string abl_model, abl_data, abl_ks = "1,2,3,4,5,6", abl_format = "csv", abl_out;
  bool abl_exact = false;
  ablate->add_option("--model", abl_model, "Checkpoint path")->required();
  ablate->add_option("--data", abl_data, "Labeled scenes")->required();
  ablate->add_option("--ks", abl_ks, "Comma-separated class counts")->capture_default_str();
  ablate->add_flag("--exact", abl_exact, "Bin by exactly k classes instead of at least k");
  ablate->add_option("--format", abl_format, "csv, json or table")->capture_default_str()->check(CLI::IsMember({"csv", "json", "table"}));
  ablate->add_option("--out", abl_out, "Write the report here instead of stdout");

  // bench
  auto* bench = app.add_subcommand("bench", "Parameter count, inference time and accuracy per checkpoint");
  std::vector<std::string> bench_models;
  std::string bench_data, bench_format = "csv", bench_out;
  experiments::BenchmarkOptions bench_opts;
  bench->add_option("--model", bench_models, "Checkpoint path (repeatable)")->required();
  bench->add_option("--data", bench_data, "Labeled scenes")->required();
  bench->add_option("--warmup", bench_opts.warmup_passes, "Warm-up passes (>= 10)")->capture_default_str();
  bench->add_option("--passes", bench_opts.timed_passes, "Timed passes (>= 100)")->capture_default_str();
  bench->add_flag("--full-pipeline", bench_opts.full_pipeline, "Time graph construction as well");
  bench->add_option("--format", bench_format, "csv, json or table")->capture_default_str()->check(CLI::IsMember({"csv", "json", "table"}));
  bench->add_option("--out", bench_out, "Write the report here instead of stdout");

  // dump-graph
  auto* dump = app.add_subcommand("dump-graph", "Print one scene's graph (features, adjacency) as JSON");
  std::string dump_data;
  std::size_t dump_index = 0;
  double dump_beta = kDefaultBeta;
  int dump_vocab = kDefaultVocabSize;
  dump->add_option("--data", dump_data, "Scenes")->required();
  dump->add_option("--index", dump_index, "0-based record index")->capture_default_str();
  dump->add_option("--beta", dump_beta, "Distance ratio")->capture_default_str()->check(CLI::NonNegativeNumber);
  dump->add_option("--vocab-size", dump_vocab, "Label vocabulary size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      SyntheticConfig cfg;
      cfg.n_scenes = gen_n;
      cfg.seed = gen_seed;
      cfg.vocab_size = gen_vocab;
      if (gen_vocab != kDefaultVocabSize) {
        // Keep the default pool proportions: ~56% of labels each, ~12% shared.
        const int lo = gen_vocab * 45 / 80, hi = gen_vocab * 35 / 80;
        cfg.indoor_labels = label_range(0, std::max(1, lo));
        cfg.outdoor_labels = label_range(std::min(hi, gen_vocab - 1), gen_vocab);
      }
      const auto scenes = generate_synthetic(cfg);
      save_scenes(gen_out, scenes);
      if (gen_split) {
        const auto split = split_dataset(scenes, {}, gen_seed);
        const auto stem = detail::strip_jsonl(gen_out);
        save_scenes(stem + ".train.jsonl", split.train);
        save_scenes(stem + ".val.jsonl", split.val);
        save_scenes(stem + ".test.jsonl", split.test);
      }
      out << "wrote " << scenes.size() << " scenes to " << gen_out << "\n";
    } else if (*train) {
      const auto model_cfg = train_flags.model_config();
      const auto train_cfg = train_flags.train_config();
      const auto train_set = load_scenes(train_data);
      detail::require_labeled(train_set, "training");
      std::vector<SceneSample> val_set;
      if (!train_val.empty()) {
        val_set = load_scenes(train_val);
        detail::require_labeled(val_set, "validation");
      }
      out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
      const auto ckpt = training::train(train_set, val_set, model_cfg, train_cfg, [&out](const training::EpochRecord& r) {
        using experiments::fmt;
        out << r.epoch << "," << fmt(r.train_loss) << "," << fmt(r.train_accuracy) << ","
            << (r.val_loss ? fmt(*r.val_loss) : "") << "," << (r.val_accuracy ? fmt(*r.val_accuracy) : "") << "\n";
        out.flush();
      });
      training::save_checkpoint(train_out, ckpt);
    } else if (*eval) {
      const auto ckpt = training::load_checkpoint(eval_model);
      const auto scenes = load_scenes(eval_data);
      detail::require_labeled(scenes, "evaluation");
      detail::emit(detail::metrics_text(training::evaluate(ckpt, scenes), experiments::parse_format(eval_format)), eval_out, out);
    } else if (*classify) {
      const auto ckpt = training::load_checkpoint(cls_model);
      const auto model = ckpt.model();
      const auto scenes = load_scenes(cls_data);
      nn::NoGradGuard no_grad;
      for (const auto& s : scenes) {
        const auto lp = model.forward(build_graph(s, ckpt.model_config.beta, ckpt.model_config.vocab_size));
        const int pred = training::predict(lp.values());
        out << s.scene_id << "," << training::format_double(lp.values()[0]) << "," << training::format_double(lp.values()[1]) << ","
            << to_string(static_cast<SceneClass>(pred)) << "\n";
      }
    } else if (*sweep) {
      const auto model_cfg = sweep_flags.model_config();
      const auto train_cfg = sweep_flags.train_config();
      const auto betas = detail::parse_list(sweep_betas);
      DatasetSplit data;
      if (sweep_test.empty()) {
        data = split_dataset(load_scenes(sweep_data), {}, sweep_flags.seed);
      } else {
        data.train = load_scenes(sweep_data);
        data.test = load_scenes(sweep_test);
        if (!sweep_val.empty()) data.val = load_scenes(sweep_val);
      }
      detail::require_labeled(data.train, "training");
      detail::require_labeled(data.val, "validation");
      detail::require_labeled(data.test, "test");
      const auto result = experiments::sweep_beta(model_cfg, train_cfg, data, betas);
      std::ostringstream text;
      experiments::write_sweep(text, result, experiments::parse_format(sweep_format), model_cfg.variant);
      detail::emit(text.str(), sweep_out, out);
    } else if (*ablate) {
      const auto ckpt = training::load_checkpoint(abl_model);
      const auto scenes = load_scenes(abl_data);
      detail::require_labeled(scenes, "ablation");
      std::vector<int> ks;
      for (double k : detail::parse_list(abl_ks)) {
        if (k != std::floor(k)) throw CLI::ValidationError("--ks", "class counts must be integers");
        ks.push_back(static_cast<int>(k));
      }
      const auto rows = experiments::ablation_class_count(ckpt, scenes, ks, abl_exact);
      std::ostringstream text;
      experiments::write_ablation(text, rows, experiments::parse_format(abl_format), ckpt.model_config.variant);
      detail::emit(text.str(), abl_out, out);
    } else if (*bench) {
      std::vector<training::Checkpoint> ckpts;
      for (const auto& path : bench_models) ckpts.push_back(training::load_checkpoint(path));
      const auto scenes = load_scenes(bench_data);
      detail::require_labeled(scenes, "benchmark");
      const auto report = experiments::benchmark(ckpts, scenes, bench_opts);
      std::ostringstream text;
      experiments::write_benchmark(text, report, experiments::parse_format(bench_format));
      detail::emit(text.str(), bench_out, out);
    } else if (*dump) {
      const auto scenes = load_scenes(dump_data);
      if (dump_index >= scenes.size()) {
        throw Error(ErrorKind::InvalidConfig, "--index " + std::to_string(dump_index) + " out of range (file has " +
                                                  std::to_string(scenes.size()) + " scenes)");
      }
      const auto& scene = scenes[dump_index];
      const auto g = build_graph(scene, dump_beta, dump_vocab);
      nlohmann::ordered_json j;
      j["scene_id"] = scene.scene_id;
      j["n"] = g.n;
      j["beta"] = dump_beta;
      j["labels"] = g.labels;
      j["diagonals"] = g.diagonals;
      j["features"] = detail::matrix_json(g.features);
      j["adjacency"] = detail::matrix_json(g.adjacency);
      j["edges"] = detail::matrix_json(g.edges);
      out << j.dump() << "\n";
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace scenegnn::cli
