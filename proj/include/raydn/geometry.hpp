// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>

#include "raydn/error.hpp"

namespace raydn {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Row-major 4x4 transform.
struct Mat4 {
  std::array<double, 16> m{};

  static Mat4 identity();
  static Mat4 diag(double a, double b, double c, double d);

  double& at(int r, int c) { return m[static_cast<std::size_t>(r * 4 + c)]; }
  double at(int r, int c) const { return m[static_cast<std::size_t>(r * 4 + c)]; }

  Mat4 operator*(const Mat4& o) const;
  // Homogeneous transform of (v, 1); returns the raw 4-vector.
  std::array<double, 4> apply(const Vec3& v) const;
  std::array<double, 4> apply4(const std::array<double, 4>& v) const;

  double determinant() const;
  // Throws SingularTransformError when |det| <= 1e-12.
  Mat4 inverse() const;
};

// Image-plane coordinate plus depth along the axis orthogonal to the plane.
struct FrustumCoord {
  double u = 0.0;  // pixels
  double v = 0.0;  // pixels
  double d = 0.0;  // meters, > 0 in front of the camera
};

struct Ray {
  Vec3 origin;     // camera optical center, world frame
  Vec3 direction;  // unit length
};

// Projective camera: a single fused world-to-frustum 4x4 (intrinsics times
// extrinsics) plus pixel bounds. The optical center is recovered from the
// inverse transform rather than stored.
class CameraModel {
 public:
  CameraModel(const Mat4& world_to_frustum, int image_width, int image_height);

  const Mat4& world_to_frustum() const { return world_to_frustum_; }
  const Mat4& frustum_to_world() const { return frustum_to_world_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  // World-frame image of the frustum origin under the inverse transform.
  Vec3 optical_center() const { return optical_center_; }

 private:
  Mat4 world_to_frustum_;
  Mat4 frustum_to_world_;
  Vec3 optical_center_;
  int width_ = 0;
  int height_ = 0;
};

// World point -> (u, v, d). d may be <= 0 (behind the camera); callers check
// visibility. Throws DegenerateDepthError when |d| < 1e-12.
FrustumCoord project(const CameraModel& camera, const Vec3& point);

// (u, v, d) -> world point; requires d > 0.
Vec3 unproject(const CameraModel& camera, const FrustumCoord& fc);

// True iff projection succeeds with d > 0 and (u, v) falls inside the image.
bool visible(const CameraModel& camera, const Vec3& point);

// Ray from the optical center through `point`. Throws DegenerateRayError when
// the point is within 1e-9 m of the center.
Ray ray_through(const CameraModel& camera, const Vec3& point);

// Perpendicular distance from `point` to `ray`.
double ray_point_distance(const Ray& ray, const Vec3& point);

}  // namespace raydn
