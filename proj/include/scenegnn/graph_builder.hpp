#pragma once

// Space-semantic graph construction: nodes carry (label, size), an edge i-j
// exists when j lies within (1 + beta) of i's nearest-neighbor distance, as
// seen from either endpoint.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "scenegnn/detections.hpp"
#include "scenegnn/error.hpp"
#include "scenegnn/matrix.hpp"

namespace scenegnn {

inline constexpr double kDefaultBeta = 0.1;
inline constexpr int kDefaultVocabSize = 80;

/// Symmetric, zero-diagonal, n x n. Units are image-diagonal lengths.
using DistanceMatrix = Matrix;

struct SceneGraph {
  std::size_t n = 0;
  int vocab_size = 0;
  /// n x (vocab_size + 1): one-hot label followed by the normalized diagonal.
  Matrix features;
  /// Raw distance on existing edges, 0 elsewhere.
  Matrix adjacency;
  /// 1 where an edge exists. Kept separately because co-located objects
  /// produce edges whose stored distance is 0.
  Matrix edges;
  std::vector<int> labels;
  std::vector<double> diagonals;

  std::size_t feature_dim() const { return features.cols; }
  bool has_edge(std::size_t i, std::size_t j) const { return edges(i, j) != 0.0; }
  std::size_t edge_count() const {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) count += has_edge(i, j) ? 1 : 0;
    return count;
  }
};

inline double image_diagonal(double image_w, double image_h) { return std::sqrt(image_w * image_w + image_h * image_h); }

inline double diagonal(const Detection& det, double image_w, double image_h) {
  return std::sqrt(det.w * det.w + det.h * det.h) / image_diagonal(image_w, image_h);
}

inline DistanceMatrix pairwise_distances(const SceneSample& scene) {
  const std::size_t n = scene.detections.size();
  if (n == 0) throw Error(ErrorKind::EmptyScene, "scene '" + scene.scene_id + "' has no detections");
  const double norm = image_diagonal(scene.image_w, scene.image_h);
  DistanceMatrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = scene.detections[i];
    const double ax = a.x + a.w / 2.0;
    const double ay = a.y + a.h / 2.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = scene.detections[j];
      const double dx = ax - (b.x + b.w / 2.0);
      const double dy = ay - (b.y + b.h / 2.0);
      d(i, j) = d(j, i) = std::sqrt(dx * dx + dy * dy) / norm;
    }
  }
  return d;
}

/// Distance from node i to its nearest other node.
inline double min_distance(std::size_t i, const DistanceMatrix& d) {
  if (d.rows < 2) throw Error(ErrorKind::NoNeighbor, "node has no neighbor in a single-node scene");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.cols; ++j) {
    if (j != i) best = std::min(best, d(i, j));
  }
  return best;
}

inline Matrix encode_node_features(const SceneSample& scene, int vocab_size) {
  const std::size_t n = scene.detections.size();
  const auto width = static_cast<std::size_t>(vocab_size) + 1;
  Matrix x(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& det = scene.detections[i];
    if (det.label_id < 0 || det.label_id >= vocab_size) {
      throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(det.label_id) + " not in vocabulary of size " +
                                                  std::to_string(vocab_size));
    }
    x(i, static_cast<std::size_t>(det.label_id)) = 1.0;
    x(i, width - 1) = diagonal(det, scene.image_w, scene.image_h);
  }
  return x;
}

inline SceneGraph build_graph(const SceneSample& scene, double beta = kDefaultBeta, int vocab_size = kDefaultVocabSize) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidConfig, "beta must be finite and >= 0");
  const DistanceMatrix dist = pairwise_distances(scene);
  SceneGraph g;
  g.n = scene.detections.size();
  g.vocab_size = vocab_size;
  g.features = encode_node_features(scene, vocab_size);
  g.adjacency = Matrix(g.n, g.n);
  g.edges = Matrix(g.n, g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    g.labels.push_back(scene.detections[i].label_id);
    g.diagonals.push_back(g.features(i, g.features.cols - 1));
  }
  if (g.n < 2) return g;

  for (std::size_t i = 0; i < g.n; ++i) {
    const double dmin = min_distance(i, dist);
    const double threshold = dmin + beta * dmin;
    for (std::size_t j = 0; j < g.n; ++j) {
      if (j != i && dist(i, j) <= threshold) {
        g.edges(i, j) = g.edges(j, i) = 1.0;
        g.adjacency(i, j) = g.adjacency(j, i) = dist(i, j);
      }
    }
  }
  return g;
}

/// Builds a graph directly from node features and an undirected edge list.
/// Used for synthetic structures that do not come from boxes.
inline SceneGraph make_graph(Matrix features, const std::vector<std::pair<std::size_t, std::size_t>>& edge_list,
                             const std::vector<double>& weights = {}) {
  SceneGraph g;
  g.n = features.rows;
  g.vocab_size = static_cast<int>(features.cols) - 1;
  g.adjacency = Matrix(g.n, g.n);
  g.edges = Matrix(g.n, g.n);
  for (std::size_t e = 0; e < edge_list.size(); ++e) {
    const auto [i, j] = edge_list[e];
    if (i >= g.n || j >= g.n || i == j) throw Error(ErrorKind::InvalidConfig, "bad edge in edge list");
    const double w = weights.empty() ? 1.0 : weights[e];
    g.edges(i, j) = g.edges(j, i) = 1.0;
    g.adjacency(i, j) = g.adjacency(j, i) = w;
  }
  for (std::size_t i = 0; i < g.n; ++i) {
    g.labels.push_back(-1);
    g.diagonals.push_back(features.cols ? features(i, features.cols - 1) : 0.0);
  }
  g.features = std::move(features);
  return g;
}

/// Reorders nodes: node k of the result is node perm[k] of the input.
inline SceneGraph permute_graph(const SceneGraph& g, const std::vector<std::size_t>& perm) {
  SceneGraph out;
  out.n = g.n;
  out.vocab_size = g.vocab_size;
  out.features = Matrix(g.n, g.features.cols);
  out.adjacency = Matrix(g.n, g.n);
  out.edges = Matrix(g.n, g.n);
  for (std::size_t a = 0; a < g.n; ++a) {
    for (std::size_t c = 0; c < g.features.cols; ++c) out.features(a, c) = g.features(perm[a], c);
    for (std::size_t b = 0; b < g.n; ++b) {
      out.adjacency(a, b) = g.adjacency(perm[a], perm[b]);
      out.edges(a, b) = g.edges(perm[a], perm[b]);
    }
    out.labels.push_back(g.labels[perm[a]]);
    out.diagonals.push_back(g.diagonals[perm[a]]);
  }
  return out;
}

}  // namespace scenegnn
