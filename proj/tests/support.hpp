#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scenegnn/detections.hpp"
#include "scenegnn/graph_builder.hpp"
#include "scenegnn/synthetic.hpp"

namespace scenegnn::test {

/// Random scene with integer box geometry fully inside the frame. A fraction
/// of boxes duplicate an earlier one so that co-located nodes and exact
/// distance ties show up.
inline SceneSample random_scene(std::mt19937_64& rng, std::size_t n, int vocab = kDefaultVocabSize) {
  std::uniform_int_distribution<int> frame(64, 1024);
  SceneSample s;
  s.scene_id = "r";
  s.image_w = frame(rng);
  s.image_h = frame(rng);
  std::uniform_int_distribution<int> label(0, vocab - 1);
  std::bernoulli_distribution copy(0.15);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && copy(rng)) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      Detection d = s.detections[pick(rng)];
      d.label_id = label(rng);
      s.detections.push_back(d);
      continue;
    }
    std::uniform_int_distribution<int> w(1, static_cast<int>(s.image_w));
    std::uniform_int_distribution<int> h(1, static_cast<int>(s.image_h));
    Detection d;
    d.label_id = label(rng);
    d.w = w(rng);
    d.h = h(rng);
    d.x = std::uniform_int_distribution<int>(0, static_cast<int>(s.image_w - d.w))(rng);
    d.y = std::uniform_int_distribution<int>(0, static_cast<int>(s.image_h - d.h))(rng);
    s.detections.push_back(d);
  }
  std::bernoulli_distribution labeled(0.5);
  s.scene_class = labeled(rng) ? SceneClass::Indoor : SceneClass::Outdoor;
  return s;
}

/// Scene whose boxes are centered at the given points (2x2 boxes).
inline SceneSample scene_with_centers(const std::vector<std::pair<double, double>>& centers, double image_w = 100.0,
                                      double image_h = 100.0) {
  SceneSample s;
  s.scene_id = "c";
  s.image_w = image_w;
  s.image_h = image_h;
  int label = 0;
  for (const auto& [cx, cy] : centers) s.detections.push_back({label++ % 4, cx - 1.0, cy - 1.0, 2.0, 2.0});
  return s;
}

/// Independent edge construction straight from the pixel geometry. Box
/// centers are kept as doubled integers, so distances compare exactly.
struct OracleGraph {
  std::set<std::pair<std::size_t, std::size_t>> edges;  // i < j
  std::vector<std::vector<long double>> distance;
};

inline OracleGraph oracle_graph(const SceneSample& s, double beta) {
  const std::size_t n = s.detections.size();
  std::vector<std::int64_t> cx(n), cy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = s.detections[i];
    cx[i] = static_cast<std::int64_t>(2 * d.x + d.w);
    cy[i] = static_cast<std::int64_t>(2 * d.y + d.h);
  }
  auto sq = [&](std::size_t i, std::size_t j) {
    const std::int64_t dx = cx[i] - cx[j], dy = cy[i] - cy[j];
    return dx * dx + dy * dy;
  };
  const long double diag2 = 2.0L * std::sqrt(static_cast<long double>(s.image_w) * s.image_w +
                                             static_cast<long double>(s.image_h) * s.image_h);
  OracleGraph out;
  out.distance.assign(n, std::vector<long double>(n, 0.0L));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.distance[i][j] = std::sqrt(static_cast<long double>(sq(i, j))) / diag2;
  for (std::size_t i = 0; i < n && n > 1; ++i) {
    std::int64_t nearest = -1;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && (nearest < 0 || sq(i, j) < nearest)) nearest = sq(i, j);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool tie = sq(i, j) == nearest;
      const bool within = std::sqrt(static_cast<long double>(sq(i, j))) <=
                          (1.0L + beta) * std::sqrt(static_cast<long double>(nearest));
      if (tie || within) out.edges.insert({std::min(i, j), std::max(i, j)});
    }
  }
  return out;
}

inline std::set<std::pair<std::size_t, std::size_t>> edge_set(const SceneGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j)
      if (g.has_edge(i, j)) out.insert({i, j});
  return out;
}

inline std::vector<std::size_t> random_permutation(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Labeled synthetic scenes whose indoor and outdoor label pools do not overlap.
inline std::vector<SceneSample> separable_scenes(std::size_t n, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n_scenes = n;
  cfg.seed = seed;
  cfg.indoor_labels = label_range(0, 40);
  cfg.outdoor_labels = label_range(40, 80);
  return generate_synthetic(cfg);
}

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scenegnn-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace scenegnn::test
