#pragma once

// Synthetic indoor/outdoor scenes. Classes differ in two ways: their label
// pools overlap only partially, and same-label objects vary much more in
// size outdoors (depth makes the same object appear at different scales).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scenegnn/detections.hpp"
#include "scenegnn/error.hpp"

namespace scenegnn {

inline std::vector<int> label_range(int first, int last_exclusive) {
  std::vector<int> out;
  for (int l = first; l < last_exclusive; ++l) out.push_back(l);
  return out;
}

struct SyntheticConfig {
  std::size_t n_scenes = 2000;
  int vocab_size = 80;
  std::vector<int> indoor_labels = label_range(0, 45);
  std::vector<int> outdoor_labels = label_range(35, 80);
  /// Log-scale spread of same-label diagonals (approximately the relative std).
  double size_variance_indoor = 0.1;
  double size_variance_outdoor = 0.6;
  int min_objects = 3;
  int max_objects = 12;
  /// Upper bound on distinct labels per scene; the count is drawn uniformly
  /// from [1, min(max_distinct_labels, objects, pool size)].
  int max_distinct_labels = 8;
  std::uint64_t seed = 0;
};

inline void validate(const SyntheticConfig& cfg) {
  if (cfg.vocab_size < 1) throw Error(ErrorKind::InvalidConfig, "vocab_size must be >= 1");
  if (cfg.indoor_labels.empty() || cfg.outdoor_labels.empty()) {
    throw Error(ErrorKind::InvalidConfig, "indoor and outdoor label pools must be nonempty");
  }
  for (const auto* pool : {&cfg.indoor_labels, &cfg.outdoor_labels}) {
    for (int l : *pool) {
      if (l < 0 || l >= cfg.vocab_size) {
        throw Error(ErrorKind::InvalidConfig, "label " + std::to_string(l) + " outside vocabulary");
      }
    }
  }
  if (!(cfg.size_variance_indoor >= 0.0) || !(cfg.size_variance_outdoor > cfg.size_variance_indoor)) {
    throw Error(ErrorKind::InvalidConfig, "require 0 <= size_variance_indoor < size_variance_outdoor");
  }
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects) {
    throw Error(ErrorKind::InvalidConfig, "require 1 <= min_objects <= max_objects");
  }
  if (cfg.max_distinct_labels < 1) throw Error(ErrorKind::InvalidConfig, "max_distinct_labels must be >= 1");
}

namespace detail {

/// Typical diagonal of each label as a fraction of the image diagonal. Fixed
/// across seeds so that every dataset shares one "world".
inline std::vector<double> label_base_sizes(int vocab_size) {
  std::mt19937_64 rng(0x5ce9e5eedULL);
  std::uniform_real_distribution<double> u(0.06, 0.30);
  std::vector<double> sizes(static_cast<std::size_t>(vocab_size));
  for (auto& s : sizes) s = u(rng);
  return sizes;
}

}  // namespace detail

inline std::vector<SceneSample> generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const auto base_size = detail::label_base_sizes(cfg.vocab_size);

  std::vector<SceneClass> classes(cfg.n_scenes, SceneClass::Outdoor);
  for (std::size_t i = 0; i < (cfg.n_scenes + 1) / 2; ++i) classes[i] = SceneClass::Indoor;
  std::shuffle(classes.begin(), classes.end(), rng);

  static constexpr std::pair<double, double> kFrames[] = {{640, 480}, {480, 640}, {800, 600}, {1024, 768}};
  std::uniform_int_distribution<std::size_t> pick_frame(0, std::size(kFrames) - 1);
  std::uniform_int_distribution<int> pick_count(cfg.min_objects, cfg.max_objects);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.35, 1.22);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<SceneSample> scenes;
  scenes.reserve(cfg.n_scenes);
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    const bool indoor = classes[s] == SceneClass::Indoor;
    const auto& pool = indoor ? cfg.indoor_labels : cfg.outdoor_labels;
    const double spread = indoor ? cfg.size_variance_indoor : cfg.size_variance_outdoor;

    SceneSample scene;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%06zu", s);
    scene.scene_id = id;
    const auto [fw, fh] = kFrames[pick_frame(rng)];
    scene.image_w = fw;
    scene.image_h = fh;
    scene.scene_class = classes[s];
    const double frame_diag = std::hypot(fw, fh);

    const int n_objects = pick_count(rng);
    const int max_distinct = std::min({cfg.max_distinct_labels, n_objects, static_cast<int>(pool.size())});
    const int n_distinct = std::uniform_int_distribution<int>(1, max_distinct)(rng);
    std::vector<int> chosen = pool;
    std::shuffle(chosen.begin(), chosen.end(), rng);
    chosen.resize(static_cast<std::size_t>(n_distinct));

    std::uniform_int_distribution<int> pick_label(0, n_distinct - 1);
    for (int k = 0; k < n_objects; ++k) {
      // Every chosen label appears at least once.
      const int label = k < n_distinct ? chosen[static_cast<std::size_t>(k)]
                                       : chosen[static_cast<std::size_t>(pick_label(rng))];
      const double diag = std::min(0.9, base_size[static_cast<std::size_t>(label)] * std::exp(spread * normal(rng)));
      const double theta = angle(rng);
      Detection det;
      det.label_id = label;
      det.w = std::clamp(diag * frame_diag * std::cos(theta), 1.0, fw);
      det.h = std::clamp(diag * frame_diag * std::sin(theta), 1.0, fh);
      det.x = std::floor(unit(rng) * (fw - det.w));
      det.y = std::floor(unit(rng) * (fh - det.h));
      scene.detections.push_back(det);
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

}  // namespace scenegnn
