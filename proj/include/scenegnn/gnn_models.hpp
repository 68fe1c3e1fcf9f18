#pragma once

// Graph classifiers: GCN (symmetric-normalized propagation, mean readout),
// GIN (sum aggregation, per-layer sum readout) and GINLAF (GIN with LAF
// aggregation and LAF readout). All heads end in a 2-way log-softmax.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scenegnn/error.hpp"
#include "scenegnn/graph_builder.hpp"
#include "scenegnn/laf.hpp"
#include "scenegnn/ops.hpp"
#include "scenegnn/parameter_store.hpp"

namespace scenegnn::gnn {

enum class Variant { GCN, GIN, GINLAF };
enum class EdgeWeightMode { Binary, ExpNeg };
enum class Aggregator { Sum, LAF };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::GCN: return "gcn";
    case Variant::GIN: return "gin";
    case Variant::GINLAF: return "ginlaf";
  }
  return "?";
}

inline const char* to_string(EdgeWeightMode m) { return m == EdgeWeightMode::Binary ? "binary" : "expneg"; }

inline Variant parse_variant(const std::string& s) {
  if (s == "gcn") return Variant::GCN;
  if (s == "gin") return Variant::GIN;
  if (s == "ginlaf") return Variant::GINLAF;
  throw Error(ErrorKind::InvalidConfig, "unknown model '" + s + "' (expected one of: gcn, gin, ginlaf)");
}

inline EdgeWeightMode parse_edge_weight_mode(const std::string& s) {
  if (s == "binary") return EdgeWeightMode::Binary;
  if (s == "expneg") return EdgeWeightMode::ExpNeg;
  throw Error(ErrorKind::InvalidConfig, "unknown edge weight mode '" + s + "' (expected binary or expneg)");
}

inline int default_hidden_dim(Variant v) { return v == Variant::GINLAF ? 32 : 1024; }

struct ModelConfig {
  Variant variant = Variant::GINLAF;
  int num_layers = 3;
  int hidden_dim = 32;
  int vocab_size = kDefaultVocabSize;
  int num_classes = 2;
  /// Propagation weights for GCN. GIN variants aggregate over the unweighted neighbor set.
  EdgeWeightMode edge_weight_mode = EdgeWeightMode::ExpNeg;
  double beta = kDefaultBeta;

  static ModelConfig defaults(Variant v) {
    ModelConfig cfg;
    cfg.variant = v;
    cfg.hidden_dim = default_hidden_dim(v);
    return cfg;
  }

  int feature_dim() const { return vocab_size + 1; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void validate(const ModelConfig& cfg) {
  if (cfg.num_layers < 1) throw Error(ErrorKind::InvalidConfig, "num_layers must be >= 1");
  if (cfg.hidden_dim < 1) throw Error(ErrorKind::InvalidConfig, "hidden_dim must be >= 1");
  if (cfg.vocab_size < 1) throw Error(ErrorKind::InvalidConfig, "vocab_size must be >= 1");
  if (cfg.num_classes != 2) throw Error(ErrorKind::InvalidConfig, "num_classes must be 2 (indoor/outdoor)");
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw Error(ErrorKind::InvalidConfig, "beta must be finite and >= 0");
}

/// D^-1/2 (W + I) D^-1/2 with W the edge weights selected by `mode`.
/// ExpNeg uses exp(-delta / tau), tau = mean of the nonzero edge distances;
/// when every edge distance is 0 it falls back to weight 1.
inline Matrix normalize_adjacency(const SceneGraph& g, EdgeWeightMode mode) {
  const std::size_t n = g.n;
  double tau = 0.0;
  if (mode == EdgeWeightMode::ExpNeg) {
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (g.has_edge(i, j) && g.adjacency(i, j) > 0.0) {
          total += g.adjacency(i, j);
          ++count;
        }
    tau = count ? total / static_cast<double>(count) : 0.0;
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || !g.has_edge(i, j)) continue;
      a(i, j) = (mode == EdgeWeightMode::Binary || tau == 0.0) ? 1.0 : std::exp(-g.adjacency(i, j) / tau);
    }
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double deg = 0.0;
    for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(deg);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv_sqrt[i] * inv_sqrt[j];
  return a;
}

namespace detail {

inline nn::Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = u(rng);
  return nn::Tensor({fan_in, fan_out}, std::move(v));
}

// softplus^-1(1).
inline constexpr double kUnitSoftplusInverse = 0.54132485461291805;
// softplus(-4) ~ 0.018, a start near 0.
inline constexpr double kSmallSoftplusInverse = -4.0;

enum class LafInit { Sum, Mean };

inline void add_laf(nn::ParameterStore& store, const std::string& prefix, std::size_t channels, LafInit init,
                    std::mt19937_64& rng) {
  // Sum starts with e ~ 0 (denominator ~ 1); mean with f ~ 0 (denominator ~ set size).
  const std::size_t small_row = init == LafInit::Sum ? 4 : 5;
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);
  std::vector<double> exps(8 * channels);
  for (std::size_t k = 0; k < 8; ++k)
    for (std::size_t c = 0; c < channels; ++c)
      exps[k * channels + c] = (k == small_row ? kSmallSoftplusInverse : kUnitSoftplusInverse) + jitter(rng);
  // alpha ~ 1, beta ~ 0; gamma ~ 1, delta ~ 0 after softplus.
  const double start[4] = {1.0, 0.0, kUnitSoftplusInverse, kSmallSoftplusInverse};
  std::vector<double> coefs(4 * channels);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t c = 0; c < channels; ++c) coefs[k * channels + c] = start[k] + jitter(rng);
  store.add(prefix + ".exponents", nn::Tensor({8, channels}, std::move(exps)));
  store.add(prefix + ".coefficients", nn::Tensor({4, channels}, std::move(coefs)));
}

inline std::size_t gin_layer_input(const ModelConfig& cfg, int k) {
  return k == 0 ? static_cast<std::size_t>(cfg.feature_dim()) : static_cast<std::size_t>(cfg.hidden_dim);
}

}  // namespace detail

/// Parameters for `cfg`, initialized from `seed`: Glorot-uniform weights,
/// zero biases, epsilon = 0.
inline nn::ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  nn::ParameterStore store;
  const auto hidden = static_cast<std::size_t>(cfg.hidden_dim);
  const auto classes = static_cast<std::size_t>(cfg.num_classes);
  const auto features = static_cast<std::size_t>(cfg.feature_dim());

  if (cfg.variant == Variant::GCN) {
    for (int k = 0; k < cfg.num_layers; ++k) {
      store.add("gcn." + std::to_string(k) + ".weight", detail::glorot(k == 0 ? features : hidden, hidden, rng));
    }
    store.add("head.weight", detail::glorot(hidden, classes, rng));
    store.add("head.bias", nn::Tensor::zeros(1, classes));
    return store;
  }

  std::size_t readout = features;
  for (int k = 0; k < cfg.num_layers; ++k) {
    const std::string p = "gin." + std::to_string(k);
    const std::size_t in = detail::gin_layer_input(cfg, k);
    store.add(p + ".eps", nn::Tensor::zeros(1, 1));
    store.add(p + ".mlp0.weight", detail::glorot(in, hidden, rng));
    store.add(p + ".mlp0.bias", nn::Tensor::zeros(1, hidden));
    store.add(p + ".mlp1.weight", detail::glorot(hidden, hidden, rng));
    store.add(p + ".mlp1.bias", nn::Tensor::zeros(1, hidden));
    if (cfg.variant == Variant::GINLAF) detail::add_laf(store, p + ".laf", in, detail::LafInit::Sum, rng);
    readout += hidden;
  }
  if (cfg.variant == Variant::GINLAF) {
    for (int k = 0; k <= cfg.num_layers; ++k) {
      detail::add_laf(store, "readout." + std::to_string(k) + ".laf", detail::gin_layer_input(cfg, k),
                        detail::LafInit::Mean, rng);
    }
  }
  store.add("head.weight", detail::glorot(readout, classes, rng));
  store.add("head.bias", nn::Tensor::zeros(1, classes));
  return store;
}

/// Disjoint union of graphs. Graph b owns node rows offsets[b]..offsets[b+1];
/// no edges cross graphs, so a forward pass over the batch equals separate
/// per-graph passes. Holds pointers: the graphs must outlive the batch.
struct GraphBatch {
  std::vector<const SceneGraph*> graphs;
  std::vector<std::size_t> offsets{0};
  Matrix features;

  std::size_t size() const { return graphs.size(); }
  std::size_t num_nodes() const { return offsets.back(); }
};

inline GraphBatch make_batch(const std::vector<const SceneGraph*>& graphs) {
  GraphBatch batch;
  batch.graphs = graphs;
  std::size_t width = 0;
  for (const auto* g : graphs) {
    if (g->n == 0) throw Error(ErrorKind::EmptyScene, "graph has no nodes");
    if (batch.offsets.size() > 1 && g->features.cols != width) {
      throw Error(ErrorKind::ShapeMismatch, "batch mixes feature widths");
    }
    width = g->features.cols;
    batch.offsets.push_back(batch.offsets.back() + g->n);
  }
  batch.features = Matrix(batch.num_nodes(), width);
  for (std::size_t b = 0; b < graphs.size(); ++b) {
    const auto& f = graphs[b]->features.data;
    std::copy(f.begin(), f.end(), batch.features.data.begin() + static_cast<std::ptrdiff_t>(batch.offsets[b] * width));
  }
  return batch;
}

inline GraphBatch make_batch(const SceneGraph& g) { return make_batch(std::vector<const SceneGraph*>{&g}); }

namespace detail {

inline void require_features(const ModelConfig& cfg, const GraphBatch& batch) {
  if (batch.size() == 0) throw Error(ErrorKind::EmptyScene, "empty batch");
  if (batch.features.cols != static_cast<std::size_t>(cfg.feature_dim())) {
    throw Error(ErrorKind::ShapeMismatch, "graph feature width " + std::to_string(batch.features.cols) +
                                              " does not match model input width " + std::to_string(cfg.feature_dim()));
  }
}

inline nn::Tensor head(const nn::ParameterStore& p, const nn::Tensor& pooled) {
  return nn::log_softmax(nn::add_bias(nn::matmul(pooled, p.get("head.weight")), p.get("head.bias")));
}

/// Effective LAF coefficients: alpha and beta as stored, gamma and delta
/// through softplus so the denominator stays positive.
inline nn::Tensor laf_coefficients(const nn::Tensor& raw) {
  const std::size_t c = raw.cols();
  std::vector<double> mask(4 * c, 0.0);
  std::fill(mask.begin() + static_cast<std::ptrdiff_t>(2 * c), mask.end(), 1.0);
  const nn::Tensor den_rows({4, c}, mask);
  for (auto& v : mask) v = 1.0 - v;
  const nn::Tensor num_rows({4, c}, std::move(mask));
  return nn::add(nn::elementwise_mul(raw, num_rows), nn::elementwise_mul(nn::softplus(raw), den_rows));
}

inline nn::Tensor laf_over(const nn::ParameterStore& p, const std::string& prefix, const nn::Tensor& h,
                           const Membership& members) {
  return laf_pool(nn::sigmoid(h), members, nn::softplus(p.get(prefix + ".exponents")),
                  laf_coefficients(p.get(prefix + ".coefficients")));
}

inline nn::BlockDiagonal edge_blocks(const GraphBatch& batch) {
  nn::BlockDiagonal a;
  for (const auto* g : batch.graphs) a.append(g->edges);
  return a;
}

inline Membership neighbor_lists(const GraphBatch& batch) {
  Membership out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const SceneGraph& g = *batch.graphs[b];
    for (std::size_t i = 0; i < g.n; ++i) {
      auto& list = out.emplace_back();
      for (std::size_t j = 0; j < g.n; ++j)
        if (g.has_edge(i, j)) list.push_back(batch.offsets[b] + j);
    }
  }
  return out;
}

inline Membership graph_lists(const GraphBatch& batch) {
  Membership out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (std::size_t i = batch.offsets[b]; i < batch.offsets[b + 1]; ++i) out[b].push_back(i);
  return out;
}

}  // namespace detail

/// Last-layer GCN node states, (total nodes) x hidden.
inline nn::Tensor gcn_node_states(const ModelConfig& cfg, const nn::ParameterStore& p, const GraphBatch& batch) {
  detail::require_features(cfg, batch);
  nn::BlockDiagonal prop;
  for (const auto* g : batch.graphs) prop.append(normalize_adjacency(*g, cfg.edge_weight_mode));
  nn::Tensor h = nn::Tensor::from(batch.features);
  for (int k = 0; k < cfg.num_layers; ++k) {
    h = nn::relu(nn::block_matmul(prop, nn::matmul(h, p.get("gcn." + std::to_string(k) + ".weight"))));
  }
  return h;
}

/// Batch x 2 log-probabilities.
inline nn::Tensor gcn_forward(const ModelConfig& cfg, const nn::ParameterStore& p, const GraphBatch& batch) {
  return detail::head(p, nn::segment_mean(gcn_node_states(cfg, p, batch), batch.offsets));
}

inline void require_aggregator(const ModelConfig& cfg, Aggregator agg) {
  const bool ok = (cfg.variant == Variant::GIN && agg == Aggregator::Sum) ||
                  (cfg.variant == Variant::GINLAF && agg == Aggregator::LAF);
  if (!ok) {
    throw Error(ErrorKind::AggregatorMismatch, std::string("aggregator ") + (agg == Aggregator::Sum ? "sum" : "laf") +
                                                   " is not valid for variant " + to_string(cfg.variant));
  }
}

/// One GIN update: MLP((1 + eps) h_v + AGG_{u in N(v)} h_u).
inline nn::Tensor gin_layer(const nn::ParameterStore& p, int k, const nn::Tensor& h, const GraphBatch& batch, Aggregator agg) {
  const std::string prefix = "gin." + std::to_string(k);
  const nn::Tensor neighbors = agg == Aggregator::Sum ? nn::block_matmul(detail::edge_blocks(batch), h)
                                                      : detail::laf_over(p, prefix + ".laf", h, detail::neighbor_lists(batch));
  const nn::Tensor combined = nn::add(nn::scale_by(h, nn::add_scalar(p.get(prefix + ".eps"), 1.0)), neighbors);
  const nn::Tensor hidden = nn::relu(nn::add_bias(nn::matmul(combined, p.get(prefix + ".mlp0.weight")), p.get(prefix + ".mlp0.bias")));
  return nn::add_bias(nn::matmul(hidden, p.get(prefix + ".mlp1.weight")), p.get(prefix + ".mlp1.bias"));
}

/// Node states h^(0) .. h^(K).
inline std::vector<nn::Tensor> gin_layer_states(const ModelConfig& cfg, const nn::ParameterStore& p, const GraphBatch& batch,
                                                Aggregator agg) {
  require_aggregator(cfg, agg);
  detail::require_features(cfg, batch);
  std::vector<nn::Tensor> states{nn::Tensor::from(batch.features)};
  for (int k = 0; k < cfg.num_layers; ++k) states.push_back(gin_layer(p, k, states.back(), batch, agg));
  return states;
}

/// Batch x 2 log-probabilities. The readout pools every layer 0..K (sum or
/// LAF per graph) and concatenates. LAF readouts of sigmoid states sit near
/// 0.5, so they are shifted by -0.5 before the head.
inline nn::Tensor gin_forward(const ModelConfig& cfg, const nn::ParameterStore& p, const GraphBatch& batch, Aggregator agg) {
  const auto states = gin_layer_states(cfg, p, batch, agg);
  const Membership per_graph = agg == Aggregator::LAF ? detail::graph_lists(batch) : Membership{};
  std::vector<nn::Tensor> pooled;
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (agg == Aggregator::Sum) {
      pooled.push_back(nn::segment_sum(states[k], batch.offsets));
    } else {
      const auto laf = detail::laf_over(p, "readout." + std::to_string(k) + ".laf", states[k], per_graph);
      pooled.push_back(nn::add_scalar(laf, -0.5));
    }
  }
  return detail::head(p, nn::concat_cols(pooled));
}

inline nn::Tensor gcn_forward(const ModelConfig& cfg, const nn::ParameterStore& p, const SceneGraph& g) {
  return gcn_forward(cfg, p, make_batch(g));
}

inline nn::Tensor gin_forward(const ModelConfig& cfg, const nn::ParameterStore& p, const SceneGraph& g, Aggregator agg) {
  return gin_forward(cfg, p, make_batch(g), agg);
}

/// A configured model with its parameters. Forward passes only read the
/// parameters, so concurrent inference on one model is safe.
class Classifier {
 public:
  Classifier(ModelConfig cfg, nn::ParameterStore params) : cfg_(std::move(cfg)), params_(std::move(params)) { validate(cfg_); }
  Classifier(const ModelConfig& cfg, std::uint64_t seed) : Classifier(cfg, init_parameters(cfg, seed)) {}

  /// Batch x 2 log-probabilities (indoor, outdoor), one row per graph.
  nn::Tensor forward(const GraphBatch& batch) const {
    switch (cfg_.variant) {
      case Variant::GCN: return gcn_forward(cfg_, params_, batch);
      case Variant::GIN: return gin_forward(cfg_, params_, batch, Aggregator::Sum);
      case Variant::GINLAF: return gin_forward(cfg_, params_, batch, Aggregator::LAF);
    }
    throw std::logic_error("unreachable");
  }

  nn::Tensor forward(const SceneGraph& g) const { return forward(make_batch(g)); }

  const ModelConfig& config() const { return cfg_; }
  const nn::ParameterStore& parameters() const { return params_; }
  nn::ParameterStore& parameters() { return params_; }

 private:
  ModelConfig cfg_;
  nn::ParameterStore params_;
};

}  // namespace scenegnn::gnn
