// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "raydn/geometry.hpp"
#include "raydn/ray_queries.hpp"
#include "raydn/rng.hpp"

namespace raydn {

// (x_min, x_max, y_min, y_max, z_min, z_max) in meters, world frame, z up.
using PerceptionRange = std::array<double, 6>;

struct Scene {
  std::string scene_id;
  std::vector<CameraModel> rig;
  std::vector<GroundTruthBox> boxes;
  std::size_t colinear_pairs = 0;  // compensated pairs included at generation
};

// One cell of the per-camera feature grid. `content` is depth-blind by
// construction; `direction` is the unit world-frame ray through the pixel and
// is the only positional signal the detector receives for this token.
struct FeatureToken {
  std::size_t camera_index = 0;
  double u = 0.0;
  double v = 0.0;
  // [occupancy, class one-hot..., ext_u, ext_v, du, dv]: per stamping box the
  // normalized footprint extent plus the offset from this token's pixel to the
  // footprint center — image-plane quantities only, never depth.
  std::vector<double> content;
  Vec3 direction;
};

struct SceneGenParams {
  std::size_t n_cameras = 6;
  double camera_radius = 1.2;   // meters from rig center
  int image_width = 64;
  int image_height = 48;
  double focal = 46.0;          // pixels; ~70 deg horizontal FOV at 64 px
  std::size_t grid_w = 16;      // feature tokens per camera, horizontal
  std::size_t grid_h = 12;
  std::size_t n_boxes_min = 3;
  std::size_t n_boxes_max = 8;
  std::size_t class_count = 4;
  double min_separation = 2.0;  // meters between box centers
  double min_radius = 4.5;      // meters from rig center to any box center
  double size_min = 1.0;
  double size_max = 6.0;        // sizes log-uniform in [size_min, size_max]
  double pair_prob = 0.35;      // chance a scene carries a compensated pair
  double pair_scale_min = 1.5;  // depth ratio of the pair partner
  double pair_scale_max = 2.2;
};

void validate(const SceneGenParams& p);

// Outward-facing ring of cameras at equal azimuth spacing, shared intrinsics.
std::vector<CameraModel> make_rig(const SceneGenParams& p);
std::vector<CameraModel> make_rig(std::size_t n_cameras, double radius);

// Random scene; centers uniform in `range` outside min_radius, pairwise
// separation >= min_separation by rejection (CapacityError after 1000 tries).
// With probability pair_prob the scene starts with a compensated colinear
// pair: a second box scaled about one camera's optical center so both project
// to the identical footprint in that camera.
Scene sample_scene(SeededRng& rng, std::size_t n_boxes,
                   const PerceptionRange& range, const SceneGenParams& p);

// Depth-blind rendering: each camera yields a grid_w x grid_h token grid;
// every box whose corners project in front of the camera stamps its class
// one-hot and projected bbox extent onto tokens inside the bbox. Overlaps
// sum. No depth-derived quantity enters any token.
std::vector<FeatureToken> render_features(const Scene& scene, std::size_t grid_w,
                                          std::size_t grid_h,
                                          std::size_t class_count);

inline std::size_t token_content_dim(std::size_t class_count) {
  return class_count + 5;
}

}  // namespace raydn
