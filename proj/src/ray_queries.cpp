// SPDX-License-Identifier: Apache-2.0
#include "raydn/ray_queries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raydn/error.hpp"

namespace raydn {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinDepth = 0.1;      // meters, floor for pathological samples
constexpr int kMaxResample = 16;

}  // namespace

void validate(const GroundTruthBox& box) {
  if (!(box.w > 0.0 && box.h > 0.0 && box.l > 0.0))
    throw DomainError("box sizes must be > 0");
  if (!(box.yaw > -kPi && box.yaw <= kPi))
    throw DomainError("box yaw must lie in (-pi, pi]");
  if (!box.center.finite()) throw DomainError("box center must be finite");
}

void validate(const RaySpec& spec) {
  validate(spec.params);
  if (!(spec.radius_k > 0.0)) throw DomainError("radius_k must be > 0");
  if (spec.n_per_ray < 2) throw DomainError("n_per_ray must be >= 2");
}

double scale_extent(const GroundTruthBox& box, double k) {
  if (!(k > 0.0)) throw DomainError("k must be > 0");
  validate(box);
  return k * (box.w + box.h + box.l) / 6.0;
}

std::vector<double> sample_depths(SeededRng& rng, double d, double extent,
                                  const BetaParams& params, std::size_t n) {
  if (!(d > 0.0)) throw DomainError("depth must be > 0");
  if (!(extent > 0.0)) throw DomainError("extent must be > 0");
  std::vector<double> out(n);
  for (auto& depth : out) {
    double cand = 0.0;
    for (int attempt = 0; attempt < kMaxResample; ++attempt) {
      cand = d + (2.0 * sample_beta_one(rng, params) - 1.0) * extent;
      if (cand > 0.0) break;
    }
    // Near objects with large extents can exhaust the resample budget; clamp
    // without exceeding the true depth so the depth-bound invariant survives.
    if (cand <= 0.0) cand = std::min(kMinDepth, d);
    depth = cand;
  }
  return out;
}

RayQueryGroup build_ray_group(const CameraModel& camera, const GroundTruthBox& box,
                              const RaySpec& spec, SeededRng& rng) {
  validate(spec);
  validate(box);
  if (!visible(camera, box.center))
    throw NotVisibleError("box center not visible in camera");

  const FrustumCoord fc = project(camera, box.center);
  const double extent = scale_extent(box, spec.radius_k);

  RayQueryGroup group;
  group.target = box;
  group.depths = sample_depths(rng, fc.d, extent, spec.params, spec.n_per_ray);
  group.ref_points.reserve(spec.n_per_ray);
  group.positive.assign(spec.n_per_ray, false);

  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < group.depths.size(); ++i) {
    const Vec3 p = unproject(camera, {fc.u, fc.v, group.depths[i]});
    group.ref_points.push_back(p);
    const double dist = (p - box.center).norm();
    if (dist < best_dist) {  // strict: ties keep the lowest index
      best_dist = dist;
      best = i;
    }
  }
  group.positive[best] = true;
  return group;
}

BuildAllResult build_all(const std::vector<CameraModel>& cameras,
                         const std::vector<GroundTruthBox>& boxes,
                         const RaySpec& spec, const SeededRng& rng) {
  if (cameras.empty()) throw DomainError("build_all requires at least one camera");
  validate(spec);

  BuildAllResult result;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    bool seen = false;
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      if (!visible(cameras[c], boxes[b].center)) continue;
      seen = true;
      // Key the stream on the (box, camera) pair, not on visit order.
      SeededRng pair_rng = rng.split(b * 0x10000ull + c + 1ull);
      RayQueryGroup group = build_ray_group(cameras[c], boxes[b], spec, pair_rng);
      group.gt_index = b;
      group.camera_index = c;
      result.groups.push_back(std::move(group));
    }
    if (!seen) ++result.skipped_boxes;
  }
  return result;
}

}  // namespace raydn
