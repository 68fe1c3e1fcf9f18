#pragma once

// Checkpoint files: versioned JSON. Every floating-point value is written
// with 17 significant digits so a save/load cycle reproduces it exactly and
// identical training runs produce byte-identical files.
//
// {"version":1,
//  "model_config":{...},
//  "train_config":{...},
//  "seed":N,
//  "history":[{"epoch":1,"train_loss":...,"train_accuracy":...,"val_loss":...|null,"val_accuracy":...|null},...],
//  "parameters":{"name":{"shape":[rows,cols],"values":[...]},...}}

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scenegnn/error.hpp"
#include "scenegnn/training.hpp"

namespace scenegnn::training {

inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "cannot serialize non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string quoted(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string optional_double(const std::optional<double>& v) { return v ? format_double(*v) : "null"; }

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorKind::MalformedRecord, std::string("checkpoint missing field '") + key + "'");
  return *it;
}

}  // namespace detail

inline std::string model_config_json(const gnn::ModelConfig& c) {
  std::ostringstream o;
  o << "{\"variant\":\"" << gnn::to_string(c.variant) << "\",\"num_layers\":" << c.num_layers
    << ",\"hidden_dim\":" << c.hidden_dim << ",\"vocab_size\":" << c.vocab_size << ",\"num_classes\":" << c.num_classes
    << ",\"edge_weight_mode\":\"" << gnn::to_string(c.edge_weight_mode) << "\",\"beta\":" << format_double(c.beta) << "}";
  return o.str();
}

inline std::string train_config_json(const TrainConfig& c) {
  std::ostringstream o;
  o << "{\"learning_rate\":" << format_double(c.learning_rate) << ",\"weight_decay\":" << format_double(c.weight_decay)
    << ",\"epochs\":" << c.epochs << ",\"batch_size\":" << c.batch_size << ",\"seed\":" << c.seed << ",\"optimizer\":\""
    << to_string(c.optimizer) << "\"}";
  return o.str();
}

inline std::string to_json(const Checkpoint& ck) {
  std::ostringstream o;
  o << "{\"version\":" << ck.version << ",\n";
  o << "\"model_config\":" << model_config_json(ck.model_config) << ",\n";
  o << "\"train_config\":" << train_config_json(ck.train_config) << ",\n";
  o << "\"seed\":" << ck.seed << ",\n";
  o << "\"history\":[";
  for (std::size_t i = 0; i < ck.history.size(); ++i) {
    const auto& h = ck.history[i];
    o << (i ? ",\n" : "\n") << "{\"epoch\":" << h.epoch << ",\"train_loss\":" << format_double(h.train_loss)
      << ",\"train_accuracy\":" << format_double(h.train_accuracy) << ",\"val_loss\":" << detail::optional_double(h.val_loss)
      << ",\"val_accuracy\":" << detail::optional_double(h.val_accuracy) << "}";
  }
  o << "],\n\"parameters\":{";
  bool first = true;
  for (const auto& [name, t] : ck.parameters) {
    o << (first ? "\n" : ",\n") << detail::quoted(name) << ":{\"shape\":[" << t.rows() << "," << t.cols() << "],\"values\":[";
    const auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << format_double(v[i]);
    o << "]}";
    first = false;
  }
  o << "}}\n";
  return o.str();
}

inline gnn::ModelConfig model_config_from_json(const nlohmann::json& j) {
  gnn::ModelConfig c;
  c.variant = gnn::parse_variant(detail::field(j, "variant").get<std::string>());
  c.num_layers = detail::field(j, "num_layers").get<int>();
  c.hidden_dim = detail::field(j, "hidden_dim").get<int>();
  c.vocab_size = detail::field(j, "vocab_size").get<int>();
  c.num_classes = detail::field(j, "num_classes").get<int>();
  c.edge_weight_mode = gnn::parse_edge_weight_mode(detail::field(j, "edge_weight_mode").get<std::string>());
  c.beta = detail::field(j, "beta").get<double>();
  gnn::validate(c);
  return c;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = detail::field(j, "learning_rate").get<double>();
  c.weight_decay = detail::field(j, "weight_decay").get<double>();
  c.epochs = detail::field(j, "epochs").get<int>();
  c.batch_size = detail::field(j, "batch_size").get<int>();
  c.seed = detail::field(j, "seed").get<std::uint64_t>();
  c.optimizer = parse_optimizer(detail::field(j, "optimizer").get<std::string>());
  return c;
}

/// Parses a checkpoint and checks parameter shapes against a freshly
/// initialized model of the stored configuration.
inline Checkpoint from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    Checkpoint ck;
    ck.version = detail::field(j, "version").get<int>();
    if (ck.version != Checkpoint::kFormatVersion) {
      throw Error(ErrorKind::MalformedRecord, "unsupported checkpoint version " + std::to_string(ck.version));
    }
    ck.model_config = model_config_from_json(detail::field(j, "model_config"));
    ck.train_config = train_config_from_json(detail::field(j, "train_config"));
    ck.seed = detail::field(j, "seed").get<std::uint64_t>();
    for (const auto& h : detail::field(j, "history")) {
      EpochRecord r;
      r.epoch = detail::field(h, "epoch").get<int>();
      r.train_loss = detail::field(h, "train_loss").get<double>();
      r.train_accuracy = detail::field(h, "train_accuracy").get<double>();
      if (const auto& v = detail::field(h, "val_loss"); !v.is_null()) r.val_loss = v.get<double>();
      if (const auto& v = detail::field(h, "val_accuracy"); !v.is_null()) r.val_accuracy = v.get<double>();
      ck.history.push_back(r);
    }

    const auto& params = detail::field(j, "parameters");
    const nn::ParameterStore expected = gnn::init_parameters(ck.model_config, 0);
    if (params.size() != expected.size()) {
      throw Error(ErrorKind::MalformedRecord, "checkpoint has " + std::to_string(params.size()) + " parameters, model expects " +
                                                  std::to_string(expected.size()));
    }
    for (const auto& [name, ref] : expected) {
      auto it = params.find(name);
      if (it == params.end()) throw Error(ErrorKind::MalformedRecord, "checkpoint missing parameter '" + name + "'");
      const auto shape = detail::field(*it, "shape").get<std::vector<std::size_t>>();
      auto values = detail::field(*it, "values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != ref.rows() || shape[1] != ref.cols() || values.size() != ref.size()) {
        throw Error(ErrorKind::MalformedRecord, "parameter '" + name + "' has wrong shape");
      }
      ck.parameters.add(name, nn::Tensor({shape[0], shape[1]}, std::move(values)));
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRecord, std::string("checkpoint has unexpected structure: ") + e.what());
  }
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << to_json(ck);
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace scenegnn::training
