// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <vector>

#include <doctest.h>

#include "raydn/error.hpp"
#include "raydn/scenes.hpp"

using namespace raydn;

namespace {
const PerceptionRange kRange{-28.0, 28.0, -28.0, 28.0, -2.0, 2.0};
}

TEST_CASE("rig geometry: outward ring at equal azimuth spacing") {
  const auto rig = make_rig(6, 1.2);
  REQUIRE(rig.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    const Vec3 c = rig[i].optical_center();
    CHECK(std::sqrt(c.x * c.x + c.y * c.y) == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(c.z == doctest::Approx(0.0));
    // Forward axis is radial: a far point straight outward projects to the
    // image center with depth ~ distance.
    const Vec3 outward = c * (10.0 / 1.2);
    const FrustumCoord fc = project(rig[i], outward);
    CHECK(fc.u == doctest::Approx(32.0).epsilon(1e-9));
    CHECK(fc.v == doctest::Approx(24.0).epsilon(1e-9));
    CHECK(fc.d == doctest::Approx(10.0 - 1.2).epsilon(1e-12));
  }
  // Adjacent optical centers subtend 60 degrees.
  for (std::size_t i = 0; i < 6; ++i) {
    const Vec3 a = rig[i].optical_center().normalized();
    const Vec3 b = rig[(i + 1) % 6].optical_center().normalized();
    CHECK(a.dot(b) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("sampled scenes respect separation, radius, and range") {
  SceneGenParams p;
  SeededRng rng(91);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + rng.next_below(6);
    SeededRng sub = rng.split(static_cast<std::uint64_t>(t) + 1);
    const Scene s = sample_scene(sub, n, kRange, p);
    REQUIRE(s.boxes.size() == n);
    for (const auto& b : s.boxes) {
      CHECK(std::sqrt(b.center.x * b.center.x + b.center.y * b.center.y) >=
            p.min_radius - 1e-12);
      CHECK(b.center.x >= kRange[0]);
      CHECK(b.center.x <= kRange[1]);
      CHECK(b.w >= p.size_min - 1e-12);
      CHECK(b.w <= p.size_max * p.pair_scale_max + 1e-9);
      CHECK_NOTHROW(validate(b));
    }
    for (std::size_t i = 0; i < s.boxes.size(); ++i)
      for (std::size_t j = i + 1; j < s.boxes.size(); ++j)
        CHECK((s.boxes[i].center - s.boxes[j].center).norm() >=
              p.min_separation - 1e-12);
  }
}

TEST_CASE("scene sampling is deterministic") {
  SceneGenParams p;
  SeededRng a(92), b(92);
  const Scene s1 = sample_scene(a, 6, kRange, p);
  const Scene s2 = sample_scene(b, 6, kRange, p);
  REQUIRE(s1.boxes.size() == s2.boxes.size());
  for (std::size_t i = 0; i < s1.boxes.size(); ++i) {
    CHECK(s1.boxes[i].center.x == s2.boxes[i].center.x);
    CHECK(s1.boxes[i].w == s2.boxes[i].w);
    CHECK(s1.boxes[i].yaw == s2.boxes[i].yaw);
    CHECK(s1.boxes[i].class_id == s2.boxes[i].class_id);
  }
  CHECK(s1.colinear_pairs == s2.colinear_pairs);
}

TEST_CASE("generated pairs are colinear from a rig camera with matched footprint") {
  SceneGenParams p;
  p.pair_prob = 1.0;  // force a pair every scene
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    SeededRng rng(500 + static_cast<std::uint64_t>(t));
    const Scene s = sample_scene(rng, 4, kRange, p);
    REQUIRE(s.colinear_pairs == 1);
    const GroundTruthBox& base = s.boxes[0];
    const GroundTruthBox& partner = s.boxes[1];

    // Sizes scale together by the depth ratio.
    const double rho = partner.w / base.w;
    CHECK(rho > p.pair_scale_min - 1e-9);
    CHECK(rho < p.pair_scale_max + 1e-9);
    CHECK(partner.h / base.h == doctest::Approx(rho).epsilon(1e-12));
    CHECK(partner.l / base.l == doctest::Approx(rho).epsilon(1e-12));

    // Some camera sees both centers on one ray with the same footprint.
    bool found = false;
    for (const auto& cam : s.rig) {
      if (!visible(cam, base.center) || !visible(cam, partner.center)) continue;
      const Vec3 o = cam.optical_center();
      const Vec3 db = base.center - o;
      const Vec3 dp = partner.center - o;
      if (db.cross(dp).norm() > 1e-9 * db.norm() * dp.norm()) continue;
      if (std::abs(dp.norm() / db.norm() - rho) > 1e-9) continue;
      const FrustumCoord fb = project(cam, base.center);
      const FrustumCoord fp = project(cam, partner.center);
      CHECK(fb.u == doctest::Approx(fp.u).epsilon(1e-9));
      CHECK(fb.v == doctest::Approx(fp.v).epsilon(1e-9));
      found = true;
      break;
    }
    CHECK(found);
    checked += found;
  }
  CHECK(checked == 40);
}

TEST_CASE("render emits a full grid with unit directions and no depth content") {
  SceneGenParams p;
  SeededRng rng(93);
  const Scene s = sample_scene(rng, 5, kRange, p);
  const auto tokens = render_features(s, p.grid_w, p.grid_h, p.class_count);
  REQUIRE(tokens.size() == p.grid_w * p.grid_h * s.rig.size());
  const std::size_t dim = token_content_dim(p.class_count);
  double occupancy = 0.0;
  for (const auto& tok : tokens) {
    REQUIRE(tok.content.size() == dim);
    CHECK(tok.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // Direction points outward from its camera (positive depth side).
    const Vec3 c = s.rig[tok.camera_index].optical_center();
    const Vec3 probe = c + tok.direction * 5.0;
    CHECK(project(s.rig[tok.camera_index], probe).d > 0.0);
    occupancy += tok.content[0];
  }
  CHECK(occupancy > 0.0);  // at least one box stamped somewhere
}

TEST_CASE("rendering is bitwise depth-blind for origin-camera scaled boxes") {
  // Cameras at the exact world origin; partner = base scaled by a power of
  // two about the origin. Every arithmetic step of the render then commutes
  // with the scaling, so the token grids must be bit-identical.
  const auto rig = make_rig(6, 0.0);
  GroundTruthBox base;
  base.center = {7.25, 1.5, 0.25};
  base.w = 1.75;
  base.h = 2.5;
  base.l = 3.25;
  base.yaw = 0.6;
  base.class_id = 2;
  GroundTruthBox partner = base;
  partner.center = base.center * 2.0;
  partner.w *= 2.0;
  partner.h *= 2.0;
  partner.l *= 2.0;

  Scene s1{"a", rig, {base}, 0};
  Scene s2{"b", rig, {partner}, 0};
  const auto t1 = render_features(s1, 16, 12, 4);
  const auto t2 = render_features(s2, 16, 12, 4);
  REQUIRE(t1.size() == t2.size());
  double stamped = 0.0;
  for (std::size_t i = 0; i < t1.size(); ++i) {
    REQUIRE(t1[i].content.size() == t2[i].content.size());
    for (std::size_t k = 0; k < t1[i].content.size(); ++k)
      CHECK(t1[i].content[k] == t2[i].content[k]);  // bitwise
    stamped += t1[i].content[0];
  }
  CHECK(stamped > 0.0);  // the comparison is not vacuous
}

TEST_CASE("render rejects out-of-range class ids") {
  const auto rig = make_rig(6, 1.2);
  GroundTruthBox b;
  b.center = {8, 0, 0};
  b.class_id = 9;
  Scene s{"x", rig, {b}, 0};
  CHECK_THROWS_AS(render_features(s, 8, 6, 4), DomainError);
}

TEST_CASE("scene gen parameter validation") {
  SceneGenParams p;
  CHECK_NOTHROW(validate(p));
  p.pair_scale_min = 0.9;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = SceneGenParams{};
  p.size_min = 0.0;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = SceneGenParams{};
  p.n_boxes_min = 9;
  CHECK_THROWS_AS(validate(p), DomainError);
}
