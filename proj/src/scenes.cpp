// SPDX-License-Identifier: Apache-2.0
#include "raydn/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "raydn/error.hpp"

namespace raydn {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kMaxTries = 1000;
constexpr double kMinCornerDepth = 0.05;  // meters; box must be fully in front

bool in_range(const Vec3& c, const PerceptionRange& r) {
  return c.x >= r[0] && c.x <= r[1] && c.y >= r[2] && c.y <= r[3] &&
         c.z >= r[4] && c.z <= r[5];
}

double radial2(const Vec3& c) { return c.x * c.x + c.y * c.y; }

bool separated(const Vec3& c, const std::vector<GroundTruthBox>& boxes,
               double min_sep) {
  for (const auto& b : boxes)
    if ((c - b.center).norm() < min_sep) return false;
  return true;
}

GroundTruthBox sample_box(SeededRng& rng, const PerceptionRange& range,
                          const SceneGenParams& p, double size_cap) {
  GroundTruthBox box;
  box.center = {rng.next_range(range[0], range[1]),
                rng.next_range(range[2], range[3]),
                rng.next_range(range[4], range[5])};
  const double lo = std::log(p.size_min);
  const double hi = std::log(std::min(p.size_max, size_cap));
  box.w = std::exp(rng.next_range(lo, hi));
  box.h = std::exp(rng.next_range(lo, hi));
  box.l = std::exp(rng.next_range(lo, hi));
  box.yaw = kPi - 2.0 * kPi * rng.next_double();  // (-pi, pi]
  box.class_id = static_cast<std::int32_t>(rng.next_below(p.class_count));
  return box;
}

// The eight world-frame corners; heading (yaw) carries l, lateral carries w.
std::array<Vec3, 8> box_corners(const GroundTruthBox& b) {
  const double cy = std::cos(b.yaw), sy = std::sin(b.yaw);
  const Vec3 fwd{cy * b.l * 0.5, sy * b.l * 0.5, 0.0};
  const Vec3 lat{-sy * b.w * 0.5, cy * b.w * 0.5, 0.0};
  const Vec3 up{0.0, 0.0, b.h * 0.5};
  std::array<Vec3, 8> out;
  std::size_t i = 0;
  for (int a = -1; a <= 1; a += 2)
    for (int bb = -1; bb <= 1; bb += 2)
      for (int c = -1; c <= 1; c += 2)
        out[i++] = b.center + fwd * a + lat * bb + up * c;
  return out;
}

}  // namespace

void validate(const SceneGenParams& p) {
  if (p.n_cameras < 1) throw DomainError("n_cameras must be >= 1");
  if (!(p.camera_radius >= 0.0)) throw DomainError("camera_radius must be >= 0");
  if (p.image_width < 1 || p.image_height < 1)
    throw DomainError("image dims must be >= 1");
  if (!(p.focal > 0.0)) throw DomainError("focal must be > 0");
  if (p.grid_w < 1 || p.grid_h < 1) throw DomainError("grid dims must be >= 1");
  if (p.n_boxes_min > p.n_boxes_max) throw DomainError("n_boxes_min > n_boxes_max");
  if (p.class_count < 1) throw DomainError("class_count must be >= 1");
  if (!(p.size_min > 0.0 && p.size_max >= p.size_min))
    throw DomainError("bad size range");
  if (!(p.pair_prob >= 0.0 && p.pair_prob <= 1.0))
    throw DomainError("pair_prob must be in [0,1]");
  if (!(p.pair_scale_min > 1.0 && p.pair_scale_max >= p.pair_scale_min))
    throw DomainError("pair scales must be > 1 and ordered");
}

std::vector<CameraModel> make_rig(const SceneGenParams& p) {
  validate(p);
  std::vector<CameraModel> rig;
  rig.reserve(p.n_cameras);
  const double cx = p.image_width / 2.0;
  const double cyp = p.image_height / 2.0;
  Mat4 intr = Mat4::identity();
  intr.at(0, 0) = p.focal;
  intr.at(0, 2) = cx;
  intr.at(1, 1) = p.focal;
  intr.at(1, 2) = cyp;
  for (std::size_t i = 0; i < p.n_cameras; ++i) {
    const double phi = 2.0 * kPi * static_cast<double>(i) /
                       static_cast<double>(p.n_cameras);
    const double c = std::cos(phi), s = std::sin(phi);
    const Vec3 center{p.camera_radius * c, p.camera_radius * s, 0.0};
    // Camera frame: x right, y down, z forward (outward). Rows of R.
    const Vec3 right{s, -c, 0.0};
    const Vec3 down{0.0, 0.0, -1.0};
    const Vec3 fwd{c, s, 0.0};
    Mat4 extr = Mat4::identity();
    const Vec3 rows[3] = {right, down, fwd};
    for (int r = 0; r < 3; ++r) {
      extr.at(r, 0) = rows[r].x;
      extr.at(r, 1) = rows[r].y;
      extr.at(r, 2) = rows[r].z;
      extr.at(r, 3) = -rows[r].dot(center);
    }
    rig.emplace_back(intr * extr, p.image_width, p.image_height);
  }
  return rig;
}

std::vector<CameraModel> make_rig(std::size_t n_cameras, double radius) {
  SceneGenParams p;
  p.n_cameras = n_cameras;
  p.camera_radius = radius;
  return make_rig(p);
}

Scene sample_scene(SeededRng& rng, std::size_t n_boxes,
                   const PerceptionRange& range, const SceneGenParams& p) {
  validate(p);
  if (!(range[0] < range[1] && range[2] < range[3] && range[4] < range[5]))
    throw DomainError("degenerate perception range");

  Scene scene;
  scene.rig = make_rig(p);
  if (n_boxes == 0) return scene;

  const double min_r2 = p.min_radius * p.min_radius;
  int tries = 0;
  auto next_try = [&]() {
    if (++tries > kMaxTries)
      throw CapacityError("sample_scene: rejection budget exhausted");
  };

  // Optional compensated colinear pair, placed first.
  if (n_boxes >= 2 && rng.next_double() < p.pair_prob) {
    for (;;) {
      next_try();
      const double rho = rng.next_range(p.pair_scale_min, p.pair_scale_max);
      GroundTruthBox base = sample_box(rng, range, p, p.size_max / rho);
      if (radial2(base.center) < min_r2) continue;
      // Pick a camera that sees the base box, deterministically via the rng.
      std::vector<std::size_t> seeing;
      for (std::size_t c = 0; c < scene.rig.size(); ++c)
        if (visible(scene.rig[c], base.center)) seeing.push_back(c);
      if (seeing.empty()) continue;
      const std::size_t cam = seeing[rng.next_below(seeing.size())];
      const Vec3 o = scene.rig[cam].optical_center();
      GroundTruthBox partner = base;
      partner.center = o + (base.center - o) * rho;
      partner.w *= rho;
      partner.h *= rho;
      partner.l *= rho;
      if (!in_range(partner.center, range)) continue;
      if (radial2(partner.center) < min_r2) continue;
      if ((partner.center - base.center).norm() < p.min_separation) continue;
      if (!visible(scene.rig[cam], partner.center)) continue;
      scene.boxes.push_back(base);
      scene.boxes.push_back(partner);
      scene.colinear_pairs = 1;
      break;
    }
  }

  while (scene.boxes.size() < n_boxes) {
    next_try();
    GroundTruthBox box = sample_box(rng, range, p, p.size_max);
    if (radial2(box.center) < min_r2) continue;
    if (!separated(box.center, scene.boxes, p.min_separation)) continue;
    scene.boxes.push_back(box);
  }
  return scene;
}

std::vector<FeatureToken> render_features(const Scene& scene, std::size_t grid_w,
                                          std::size_t grid_h,
                                          std::size_t class_count) {
  if (grid_w < 1 || grid_h < 1) throw DomainError("grid dims must be >= 1");
  const std::size_t dim = token_content_dim(class_count);
  std::vector<FeatureToken> tokens;
  tokens.reserve(scene.rig.size() * grid_w * grid_h);

  for (std::size_t cam = 0; cam < scene.rig.size(); ++cam) {
    const CameraModel& camera = scene.rig[cam];
    const double w = camera.image_width();
    const double h = camera.image_height();
    const std::size_t base = tokens.size();
    for (std::size_t gy = 0; gy < grid_h; ++gy) {
      for (std::size_t gx = 0; gx < grid_w; ++gx) {
        FeatureToken tok;
        tok.camera_index = cam;
        tok.u = (static_cast<double>(gx) + 0.5) * w / static_cast<double>(grid_w);
        tok.v = (static_cast<double>(gy) + 0.5) * h / static_cast<double>(grid_h);
        tok.content.assign(dim, 0.0);
        tok.direction =
            ray_through(camera, unproject(camera, {tok.u, tok.v, 1.0})).direction;
        tokens.push_back(std::move(tok));
      }
    }

    for (const auto& box : scene.boxes) {
      if (box.class_id < 0 ||
          static_cast<std::size_t>(box.class_id) >= class_count)
        throw DomainError("render_features: class_id outside class_count");
      const auto corners = box_corners(box);
      double u0 = 1e300, u1 = -1e300, v0 = 1e300, v1 = -1e300;
      bool in_front = true;
      for (const auto& corner : corners) {
        FrustumCoord fc;
        try {
          fc = project(camera, corner);
        } catch (const DegenerateDepthError&) {
          in_front = false;
          break;
        }
        if (fc.d <= kMinCornerDepth) {
          in_front = false;
          break;
        }
        u0 = std::min(u0, fc.u);
        u1 = std::max(u1, fc.u);
        v0 = std::min(v0, fc.v);
        v1 = std::max(v1, fc.v);
      }
      if (!in_front) continue;
      if (u1 < 0.0 || u0 > w || v1 < 0.0 || v0 > h) continue;

      const double ext_u = (u1 - u0) / w;
      const double ext_v = (v1 - v0) / h;
      const double cu = 0.5 * (u0 + u1);
      const double cv = 0.5 * (v0 + v1);
      for (std::size_t t = base; t < tokens.size(); ++t) {
        FeatureToken& tok = tokens[t];
        if (tok.u < u0 || tok.u > u1 || tok.v < v0 || tok.v > v1) continue;
        tok.content[0] += 1.0;
        tok.content[1 + static_cast<std::size_t>(box.class_id)] += 1.0;
        tok.content[dim - 4] += ext_u;
        tok.content[dim - 3] += ext_v;
        // Offset from this token's pixel to the footprint center, normalized.
        // Image-plane only: identical for any compensated (depth, size) pair.
        tok.content[dim - 2] += (cu - tok.u) / w;
        tok.content[dim - 1] += (cv - tok.v) / h;
      }
    }
  }
  return tokens;
}

}  // namespace raydn
