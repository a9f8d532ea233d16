// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "raydn/beta_sampler.hpp"
#include "raydn/geometry.hpp"
#include "raydn/rng.hpp"

namespace raydn {

struct GroundTruthBox {
  Vec3 center;              // meters, world frame
  double w = 1.0;           // size along local x, meters
  double h = 1.0;           // size along local y, meters
  double l = 1.0;           // size along local z, meters
  double yaw = 0.0;         // radians, in (-pi, pi]
  std::int32_t class_id = 0;
};

void validate(const GroundTruthBox& box);

struct RaySpec {
  BetaParams params{8.0, 2.0};
  double radius_k = 3.0;
  std::size_t n_per_ray = 5;
};

void validate(const RaySpec& spec);

// One ground-truth object seen from one camera: n_per_ray reference points on
// the camera ray through the projected center, exactly one labeled positive.
struct RayQueryGroup {
  std::size_t gt_index = 0;
  std::size_t camera_index = 0;
  std::vector<Vec3> ref_points;
  std::vector<double> depths;       // meters along the frustum depth axis
  std::vector<bool> positive;       // exactly one true
  GroundTruthBox target;
};

// f(S_GT): half-width of the sampling interval around the true depth.
double scale_extent(const GroundTruthBox& box, double k);

// d_hat_i = d + (2*beta_i - 1) * extent, resampled (then clamped) to stay > 0.
std::vector<double> sample_depths(SeededRng& rng, double d, double extent,
                                  const BetaParams& params, std::size_t n);

// Builds one group; throws NotVisibleError when the center is not visible.
RayQueryGroup build_ray_group(const CameraModel& camera, const GroundTruthBox& box,
                              const RaySpec& spec, SeededRng& rng);

struct BuildAllResult {
  std::vector<RayQueryGroup> groups;
  std::size_t skipped_boxes = 0;  // boxes visible in no camera
};

// One group per (box, camera) pair with a visible center. Each pair draws from
// its own derived RNG stream so results are order-independent.
BuildAllResult build_all(const std::vector<CameraModel>& cameras,
                         const std::vector<GroundTruthBox>& boxes,
                         const RaySpec& spec, const SeededRng& rng);

}  // namespace raydn
