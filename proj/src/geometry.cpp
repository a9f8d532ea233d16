// SPDX-License-Identifier: Apache-2.0
#include "raydn/geometry.hpp"

#include <cmath>
#include <utility>

namespace raydn {

namespace {
constexpr double kDepthEps = 1e-12;    // depth degeneracy threshold, meters
constexpr double kDetEps = 1e-12;      // invertibility threshold on |det|
constexpr double kRayOriginEps = 1e-9; // coincident-point threshold, meters
}  // namespace

Vec3 Vec3::normalized() const {
  const double n = norm();
  if (n < kRayOriginEps) throw DomainError("cannot normalize near-zero vector");
  return {x / n, y / n, z / n};
}

Mat4 Mat4::identity() {
  Mat4 r;
  for (int i = 0; i < 4; ++i) r.at(i, i) = 1.0;
  return r;
}

Mat4 Mat4::diag(double a, double b, double c, double d) {
  Mat4 r;
  r.at(0, 0) = a;
  r.at(1, 1) = b;
  r.at(2, 2) = c;
  r.at(3, 3) = d;
  return r;
}

Mat4 Mat4::operator*(const Mat4& o) const {
  Mat4 r;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      const double a = at(i, k);
      for (int j = 0; j < 4; ++j) r.at(i, j) += a * o.at(k, j);
    }
  return r;
}

std::array<double, 4> Mat4::apply(const Vec3& v) const {
  return apply4({v.x, v.y, v.z, 1.0});
}

std::array<double, 4> Mat4::apply4(const std::array<double, 4>& v) const {
  std::array<double, 4> r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) r[static_cast<std::size_t>(i)] += at(i, j) * v[static_cast<std::size_t>(j)];
  return r;
}

double Mat4::determinant() const {
  // Gaussian elimination with partial pivoting; product of pivots.
  std::array<double, 16> a = m;
  double det = 1.0;
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::fabs(a[static_cast<std::size_t>(r * 4 + col)]) >
          std::fabs(a[static_cast<std::size_t>(pivot * 4 + col)]))
        pivot = r;
    if (pivot != col) {
      for (int j = 0; j < 4; ++j)
        std::swap(a[static_cast<std::size_t>(col * 4 + j)], a[static_cast<std::size_t>(pivot * 4 + j)]);
      det = -det;
    }
    const double p = a[static_cast<std::size_t>(col * 4 + col)];
    if (p == 0.0) return 0.0;
    det *= p;
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[static_cast<std::size_t>(r * 4 + col)] / p;
      for (int j = col; j < 4; ++j)
        a[static_cast<std::size_t>(r * 4 + j)] -= f * a[static_cast<std::size_t>(col * 4 + j)];
    }
  }
  return det;
}

Mat4 Mat4::inverse() const {
  // Gauss-Jordan with partial pivoting on [A | I].
  std::array<double, 16> a = m;
  Mat4 inv = Mat4::identity();
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::fabs(a[static_cast<std::size_t>(r * 4 + col)]) >
          std::fabs(a[static_cast<std::size_t>(pivot * 4 + col)]))
        pivot = r;
    const double p = a[static_cast<std::size_t>(pivot * 4 + col)];
    if (std::fabs(p) < kDetEps)
      throw SingularTransformError("4x4 transform is not invertible");
    if (pivot != col) {
      for (int j = 0; j < 4; ++j) {
        std::swap(a[static_cast<std::size_t>(col * 4 + j)], a[static_cast<std::size_t>(pivot * 4 + j)]);
        std::swap(inv.at(col, j), inv.at(pivot, j));
      }
    }
    const double scale = 1.0 / a[static_cast<std::size_t>(col * 4 + col)];
    for (int j = 0; j < 4; ++j) {
      a[static_cast<std::size_t>(col * 4 + j)] *= scale;
      inv.at(col, j) *= scale;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = a[static_cast<std::size_t>(r * 4 + col)];
      if (f == 0.0) continue;
      for (int j = 0; j < 4; ++j) {
        a[static_cast<std::size_t>(r * 4 + j)] -= f * a[static_cast<std::size_t>(col * 4 + j)];
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

CameraModel::CameraModel(const Mat4& world_to_frustum, int image_width, int image_height)
    : world_to_frustum_(world_to_frustum), width_(image_width), height_(image_height) {
  if (width_ < 1 || height_ < 1)
    throw DomainError("camera image dimensions must be >= 1");
  if (std::fabs(world_to_frustum_.determinant()) <= kDetEps)
    throw SingularTransformError("world_to_frustum must be invertible");
  frustum_to_world_ = world_to_frustum_.inverse();
  const auto c = frustum_to_world_.apply4({0.0, 0.0, 0.0, 1.0});
  if (std::fabs(c[3]) < kDepthEps)
    throw SingularTransformError("frustum origin maps to a point at infinity");
  optical_center_ = {c[0] / c[3], c[1] / c[3], c[2] / c[3]};
}

FrustumCoord project(const CameraModel& camera, const Vec3& point) {
  if (!point.finite()) throw DomainError("project requires a finite point");
  const auto h = camera.world_to_frustum().apply(point);
  if (std::fabs(h[3]) < kDepthEps)
    throw DegenerateDepthError("projected point has degenerate homogeneous weight");
  const double d = h[2] / h[3];
  if (std::fabs(d) < kDepthEps)
    throw DegenerateDepthError("point lies on the camera plane (d ~ 0)");
  return {h[0] / h[3] / d, h[1] / h[3] / d, d};
}

Vec3 unproject(const CameraModel& camera, const FrustumCoord& fc) {
  if (!(fc.d > 0.0)) throw DomainError("unproject requires d > 0");
  const auto p = camera.frustum_to_world().apply4({fc.u * fc.d, fc.v * fc.d, fc.d, 1.0});
  if (std::fabs(p[3]) < kDepthEps)
    throw SingularTransformError("unprojected point at infinity");
  return {p[0] / p[3], p[1] / p[3], p[2] / p[3]};
}

bool visible(const CameraModel& camera, const Vec3& point) {
  FrustumCoord fc;
  try {
    fc = project(camera, point);
  } catch (const DegenerateDepthError&) {
    return false;
  }
  return fc.d > 0.0 && fc.u >= 0.0 && fc.u < camera.image_width() && fc.v >= 0.0 &&
         fc.v < camera.image_height();
}

Ray ray_through(const CameraModel& camera, const Vec3& point) {
  const Vec3 origin = camera.optical_center();
  const Vec3 delta = point - origin;
  if (delta.norm() <= kRayOriginEps)
    throw DegenerateRayError("point coincides with the optical center");
  return {origin, delta.normalized()};
}

double ray_point_distance(const Ray& ray, const Vec3& point) {
  const Vec3 delta = point - ray.origin;
  return delta.cross(ray.direction).norm();
}

}  // namespace raydn
