// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "raydn/eval.hpp"
#include "raydn/model.hpp"
#include "raydn/ray_queries.hpp"
#include "raydn/scenes.hpp"
#include "raydn/train.hpp"

namespace raydn {

// Everything a run needs, serialized as a single JSON document with a
// schema_version field. Unknown keys are rejected (fail-closed); every field
// has a default and round-trips losslessly.
struct RunConfig {
  std::uint64_t seed = 1;
  RaySpec ray;
  DecoderConfig decoder;
  SceneGenParams scenegen;
  TrainParams train;
  EvalConfig eval;
};

void validate(const RunConfig& cfg);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& text);

// Scene files: JSON with schema_version, rig matrices, boxes.
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

// All scene_*.json files under dir, sorted by filename.
std::vector<Scene> load_scene_dir(const std::string& dir);

// Detection dumps (JSON list with schema_version).
void save_detections(const std::vector<Detection>& dets, const std::string& path);
std::vector<Detection> load_detections(const std::string& path);

}  // namespace raydn
