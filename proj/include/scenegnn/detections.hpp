#pragma once

// Scene data model, JSON-Lines ingestion and dataset splitting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenegnn/error.hpp"

namespace scenegnn {

enum class SceneClass : int { Indoor = 0, Outdoor = 1 };

inline const char* to_string(SceneClass c) { return c == SceneClass::Indoor ? "indoor" : "outdoor"; }

/// One predicted object. (x, y) is the top-left corner, all geometry in pixels.
struct Detection {
  int label_id = 0;
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct SceneSample {
  std::string scene_id;
  double image_w = 0.0;
  double image_h = 0.0;
  std::vector<Detection> detections;
  std::optional<SceneClass> scene_class;

  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

/// Clamps a box to [0, image_w] x [0, image_h]. Returns false when nothing
/// of the box remains inside the frame.
inline bool clamp_to_image(Detection& det, double image_w, double image_h) {
  if (det.x >= 0.0 && det.y >= 0.0 && det.x + det.w <= image_w && det.y + det.h <= image_h) {
    return det.w > 0.0 && det.h > 0.0;
  }
  const double x0 = std::clamp(det.x, 0.0, image_w);
  const double y0 = std::clamp(det.y, 0.0, image_h);
  const double x1 = std::clamp(det.x + det.w, 0.0, image_w);
  const double y1 = std::clamp(det.y + det.h, 0.0, image_h);
  det.x = x0;
  det.y = y0;
  det.w = x1 - x0;
  det.h = y1 - y0;
  return det.w > 0.0 && det.h > 0.0;
}

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end()) throw MalformedRecord(line_no, std::string("missing field '") + key + "'");
  if (!it->is_number()) throw MalformedRecord(line_no, std::string("field '") + key + "' must be a number");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw MalformedRecord(line_no, std::string("field '") + key + "' is not finite");
  return v;
}

}  // namespace detail

/// Parses one JSON-Lines record. `line_no` is only used for error reporting.
inline SceneSample parse_scene(const std::string& line, std::size_t line_no) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedRecord(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw MalformedRecord(line_no, "record must be a JSON object");

  SceneSample scene;
  auto id = obj.find("scene_id");
  if (id == obj.end() || !id->is_string()) throw MalformedRecord(line_no, "'scene_id' must be a string");
  scene.scene_id = id->get<std::string>();
  scene.image_w = detail::require_number(obj, "image_w", line_no);
  scene.image_h = detail::require_number(obj, "image_h", line_no);
  if (scene.image_w <= 0.0 || scene.image_h <= 0.0) throw MalformedRecord(line_no, "image dimensions must be positive");

  if (auto s = obj.find("scene"); s != obj.end() && !s->is_null()) {
    if (!s->is_string()) throw MalformedRecord(line_no, "'scene' must be \"indoor\" or \"outdoor\"");
    const auto name = s->get<std::string>();
    if (name == "indoor") {
      scene.scene_class = SceneClass::Indoor;
    } else if (name == "outdoor") {
      scene.scene_class = SceneClass::Outdoor;
    } else {
      throw MalformedRecord(line_no, "'scene' must be \"indoor\" or \"outdoor\", got \"" + name + "\"");
    }
  }

  auto dets = obj.find("detections");
  if (dets == obj.end() || !dets->is_array()) throw MalformedRecord(line_no, "'detections' must be an array");
  scene.detections.reserve(dets->size());
  for (const auto& d : *dets) {
    if (!d.is_object()) throw MalformedRecord(line_no, "detection must be an object");
    auto label = d.find("label");
    if (label == d.end() || !label->is_number_integer()) throw MalformedRecord(line_no, "detection 'label' must be an integer");
    Detection det;
    const auto raw_label = label->get<std::int64_t>();
    if (raw_label < 0 || raw_label > std::numeric_limits<int>::max()) {
      throw MalformedRecord(line_no, "detection 'label' must be a nonnegative int");
    }
    det.label_id = static_cast<int>(raw_label);
    det.x = detail::require_number(d, "x", line_no);
    det.y = detail::require_number(d, "y", line_no);
    det.w = detail::require_number(d, "w", line_no);
    det.h = detail::require_number(d, "h", line_no);
    if (det.w <= 0.0 || det.h <= 0.0) throw MalformedRecord(line_no, "detection width and height must be positive");
    if (!clamp_to_image(det, scene.image_w, scene.image_h)) {
      throw MalformedRecord(line_no, "detection lies entirely outside the image");
    }
    scene.detections.push_back(det);
  }
  return scene;
}

inline std::vector<SceneSample> parse_scenes(std::istream& in) {
  std::vector<SceneSample> scenes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    scenes.push_back(parse_scene(line, line_no));
  }
  if (scenes.empty()) throw Error(ErrorKind::EmptyFile, "no scene records found");
  return scenes;
}

inline std::vector<SceneSample> load_scenes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return parse_scenes(in);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::EmptyFile) throw Error(ErrorKind::EmptyFile, "'" + path + "' contains no records");
    throw;
  }
}

inline nlohmann::ordered_json scene_to_json(const SceneSample& scene) {
  nlohmann::ordered_json out;
  out["scene_id"] = scene.scene_id;
  out["image_w"] = scene.image_w;
  out["image_h"] = scene.image_h;
  if (scene.scene_class) out["scene"] = to_string(*scene.scene_class);
  auto dets = nlohmann::ordered_json::array();
  for (const auto& d : scene.detections) {
    dets.push_back({{"label", d.label_id}, {"x", d.x}, {"y", d.y}, {"w", d.w}, {"h", d.h}});
  }
  out["detections"] = std::move(dets);
  return out;
}

inline void write_scenes(std::ostream& out, const std::vector<SceneSample>& scenes) {
  for (const auto& s : scenes) out << scene_to_json(s).dump() << '\n';
}

inline void save_scenes(const std::string& path, const std::vector<SceneSample>& scenes) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  write_scenes(out, scenes);
}

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<SceneSample> train;
  std::vector<SceneSample> val;
  std::vector<SceneSample> test;
};

/// Shuffles deterministically in `seed`, then cuts val and test sizes as
/// floor(n * ratio); the remainder goes to train.
inline DatasetSplit split_dataset(const std::vector<SceneSample>& scenes, SplitRatios ratios = {},
                                  std::uint64_t seed = 0) {
  if (!(ratios.train > 0.0 && ratios.val > 0.0 && ratios.test > 0.0)) {
    throw Error(ErrorKind::BadRatios, "split ratios must all be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::BadRatios, "split ratios must sum to 1");
  }
  const std::size_t n = scenes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  // The small epsilon keeps e.g. 0.29 * 100 from flooring to 28.
  const auto cut = [n](double r) { return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9)); };
  const std::size_t n_val = cut(ratios.val);
  const std::size_t n_test = cut(ratios.test);
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.train.reserve(n_train);
  split.val.reserve(n_val);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = scenes[order[i]];
    if (i < n_train) {
      split.train.push_back(s);
    } else if (i < n_train + n_val) {
      split.val.push_back(s);
    } else {
      split.test.push_back(s);
    }
  }
  return split;
}

}  // namespace scenegnn
