// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "raydn/error.hpp"
#include "raydn/eval.hpp"
#include "raydn/rng.hpp"
#include "raydn/scenes.hpp"

using namespace raydn;

namespace {

Detection det(double x, double y, double score, std::int32_t cls = 0,
              const std::string& scene = "s") {
  Detection d;
  d.scene_id = scene;
  d.class_id = cls;
  d.center = {x, y, 0.0};
  d.score = score;
  return d;
}

GroundTruthBox gt(double x, double y, std::int32_t cls = 0) {
  GroundTruthBox b;
  b.center = {x, y, 0.0};
  b.class_id = cls;
  return b;
}

// Independent AP oracle: for each grid recall, scan every tie-grouped prefix
// of the score-sorted outcomes and take the best precision among prefixes
// reaching that recall.
double ap_oracle(std::vector<MatchedDet> matches, std::size_t n_gt,
                 std::size_t recall_points) {
  if (n_gt == 0) return -1.0;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const MatchedDet& a, const MatchedDet& b) {
                     return a.score > b.score;
                   });
  struct Pt {
    double r, p;
  };
  std::vector<Pt> pts;
  std::size_t tp = 0, n = 0;
  std::size_t i = 0;
  while (i < matches.size()) {
    std::size_t j = i;
    while (j < matches.size() && matches[j].score == matches[i].score) {
      tp += matches[j].tp;
      ++n;
      ++j;
    }
    pts.push_back({static_cast<double>(tp) / static_cast<double>(n_gt),
                   static_cast<double>(tp) / static_cast<double>(n)});
    i = j;
  }
  if (pts.empty()) return 0.0;
  double ap = 0.0;
  for (std::size_t k = 0; k < recall_points; ++k) {
    const double r =
        static_cast<double>(k) / static_cast<double>(recall_points - 1);
    double best = 0.0;
    for (const auto& pt : pts)
      if (pt.r >= r) best = std::max(best, pt.p);
    ap += best;
  }
  return ap / static_cast<double>(recall_points);
}

}  // namespace

TEST_CASE("greedy matching: scores first, nearest unclaimed gt, threshold") {
  const std::vector<GroundTruthBox> gts{gt(0, 0), gt(3, 0)};
  const std::vector<Detection> dets{det(0.4, 0, 0.9), det(0.45, 0, 0.8),
                                    det(3.2, 0, 0.7)};
  const auto m = greedy_match(dets, gts, 1.0);
  REQUIRE(m.size() == 3);
  CHECK(m[0].score == 0.9);
  CHECK(m[0].tp);
  CHECK(m[1].score == 0.8);
  CHECK_FALSE(m[1].tp);  // gt0 claimed, gt1 too far
  CHECK(m[2].score == 0.7);
  CHECK(m[2].tp);
}

TEST_CASE("greedy matching breaks score ties by center order") {
  const std::vector<GroundTruthBox> gts{gt(-4.8, 0)};
  const std::vector<Detection> dets{det(-4.7, 0, 0.5), det(-5.0, 0, 0.5)};
  const auto m = greedy_match(dets, gts, 0.5);
  REQUIRE(m.size() == 2);
  // The det at x=-5 is lexicographically first, processes first, and claims
  // the gt even though the other det is closer.
  CHECK(m[0].det_index == 1);
  CHECK(m[0].tp);
  CHECK_FALSE(m[1].tp);
}

TEST_CASE("matching uses 2D ground distance, ignoring z") {
  const std::vector<GroundTruthBox> gts{gt(0, 0)};
  std::vector<Detection> dets{det(0.3, 0.4, 0.9)};
  dets[0].center.z = 50.0;  // must not matter
  const auto m = greedy_match(dets, gts, 0.6);
  REQUIRE(m.size() == 1);
  CHECK(m[0].tp);  // 2D distance 0.5 <= 0.6
}

TEST_CASE("average precision on the worked example") {
  // Outcomes sorted by score: FP(0.9), TP(0.8); one gt.
  std::vector<MatchedDet> m;
  m.push_back({0.9, false, 0});
  m.push_back({0.8, true, 1});
  CHECK(average_precision(m, 1, 101) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(average_precision({}, 1, 101) == 0.0);
  CHECK(average_precision(m, 0, 101) == -1.0);  // undefined sentinel
}

TEST_CASE("average precision equals the tie-grouped oracle on random cases") {
  SeededRng rng(131);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.next_below(6);
    std::vector<MatchedDet> m;
    std::size_t tp_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      MatchedDet d;
      d.score = static_cast<double>(rng.next_below(4)) / 4.0;  // forced ties
      d.tp = rng.next_double() < 0.5;
      d.det_index = i;
      tp_count += d.tp;
      m.push_back(d);
    }
    const std::size_t n_gt = tp_count + rng.next_below(3);
    if (n_gt == 0) continue;
    const double got = average_precision(m, n_gt, 101);
    const double want = ap_oracle(m, n_gt, 101);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("AP is monotone in the matching threshold on random scenes") {
  SeededRng rng(132);
  for (int t = 0; t < 30; ++t) {
    std::vector<GroundTruthBox> gts;
    const std::size_t n_gt = 1 + rng.next_below(5);
    for (std::size_t i = 0; i < n_gt; ++i)
      gts.push_back(gt(rng.next_range(-10, 10), rng.next_range(-10, 10)));
    std::vector<Detection> dets;
    const std::size_t n_det = 1 + rng.next_below(8);
    for (std::size_t i = 0; i < n_det; ++i)
      dets.push_back(det(rng.next_range(-10, 10), rng.next_range(-10, 10),
                         rng.next_double()));
    double prev = 0.0;
    for (double thr : {0.5, 1.0, 2.0, 4.0}) {
      const double ap = average_precision(greedy_match(dets, gts, thr), n_gt, 101);
      CHECK(ap >= prev - 1e-12);
      prev = ap;
    }
  }
}

TEST_CASE("duplicate rate counts colinear same-class false positives") {
  Scene scene;
  scene.scene_id = "s";
  scene.rig = make_rig(6, 1.2);
  scene.boxes = {gt(10, 0)};

  EvalConfig cfg;
  // TP at the gt, FP straight behind it along camera 0's ray.
  std::vector<Detection> dets{det(10, 0, 0.9), det(16, 0, 0.5)};
  CHECK(ray_duplicate_rate(dets, {scene}, cfg) == doctest::Approx(1.0));

  // Same FP but a different class: not a colinear duplicate.
  dets[1].class_id = 1;
  CHECK(ray_duplicate_rate(dets, {scene}, cfg) == doctest::Approx(0.0));

  // Off-ray FP.
  dets[1] = det(10, 5, 0.5);
  CHECK(ray_duplicate_rate(dets, {scene}, cfg) == doctest::Approx(0.0));

  // No FPs at all: rate defined as 0.
  CHECK(ray_duplicate_rate({det(10, 0, 0.9)}, {scene}, cfg) ==
        doctest::Approx(0.0));
}

TEST_CASE("duplicate rate is invariant under the rig symmetry rotation") {
  // Rotating boxes and detections by 60 degrees maps the 6-camera rig onto
  // itself, so the rate must not change.
  const double a = 3.14159265358979323846 / 3.0;
  const double ca = std::cos(a), sa = std::sin(a);
  auto rot = [&](const Vec3& p) {
    return Vec3{ca * p.x - sa * p.y, sa * p.x + ca * p.y, p.z};
  };

  Scene scene;
  scene.scene_id = "s";
  scene.rig = make_rig(6, 1.2);
  scene.boxes = {gt(10, 2), gt(-6, 7, 1)};
  // (15.72, 3.3) sits exactly on camera 0's ray through (10, 2): the ray from
  // (1.2, 0) has direction (8.8, 2), and (15.72, 3.3) = (1.2, 0) + 1.65*(8.8, 2).
  std::vector<Detection> dets{det(10, 2, 0.9), det(15.72, 3.3, 0.4),
                              det(-6, 7, 0.8, 1), det(4, 4, 0.3)};

  EvalConfig cfg;
  const double before = ray_duplicate_rate(dets, {scene}, cfg);

  Scene rscene = scene;
  for (auto& b : rscene.boxes) b.center = rot(b.center);
  std::vector<Detection> rdets = dets;
  for (auto& d : rdets) d.center = rot(d.center);
  const double after = ray_duplicate_rate(rdets, {rscene}, cfg);
  CHECK(before == doctest::Approx(after).epsilon(1e-12));
  CHECK(before > 0.0);  // the colinear pair above is detected
}

TEST_CASE("evaluate_detections pools per class and threshold") {
  Scene s1;
  s1.scene_id = "s1";
  s1.rig = make_rig(6, 1.2);
  s1.boxes = {gt(8, 0, 0), gt(-8, 0, 1)};
  Scene s2;
  s2.scene_id = "s2";
  s2.rig = make_rig(6, 1.2);
  s2.boxes = {gt(0, 9, 0)};

  std::vector<Detection> dets{
      det(8.1, 0, 0.9, 0, "s1"),   // TP class 0 scene 1
      det(0, 9.3, 0.8, 0, "s2"),   // TP class 0 scene 2
      det(-8.2, 0, 0.7, 1, "s1"),  // TP class 1 scene 1
      det(20, 20, 0.6, 1, "s1"),   // FP class 1
      det(5, 5, 0.5, 2, "s1"),     // FP for a class with no gt anywhere
  };
  EvalConfig cfg;
  const EvalReport r = evaluate_detections(dets, {s1, s2}, cfg);
  CHECK(r.n_detections == 5);
  CHECK(r.n_gt == 3);
  // Classes observed in dets or gts ({0,1,2}) x 4 thresholds, class-major
  // and threshold-minor ordering.
  REQUIRE(r.metrics.size() == 12);
  CHECK(r.metrics[0].class_id == 0);
  CHECK(r.metrics[0].threshold == 0.5);
  CHECK(r.metrics[1].threshold == 1.0);
  CHECK(r.metrics[4].class_id == 1);
  // Class 2 has detections but no gt: undefined AP sentinel, excluded from
  // mAP, while its false positives still count.
  for (const auto& m : r.metrics)
    if (m.class_id == 2) {
      CHECK(m.ap == -1.0);
      CHECK(m.fp == 1);
      CHECK(m.tp == 0);
    }
  // Class 0 at 0.5 m: both dets are TPs.
  CHECK(r.metrics[0].tp == 2);
  CHECK(r.metrics[0].fp == 0);
  CHECK(r.metrics[0].fn == 0);
  CHECK(r.metrics[0].ap == doctest::Approx(1.0));
  CHECK(r.map > 0.0);
  CHECK(r.map <= 1.0);
  // Micro curves: one per threshold with class_id -1 plus per-class curves.
  bool has_micro = false;
  for (const auto& c : r.curves) has_micro |= c.class_id == -1;
  CHECK(has_micro);
}

TEST_CASE("report emission is byte-stable") {
  Scene s;
  s.scene_id = "s";
  s.rig = make_rig(6, 1.2);
  s.boxes = {gt(8, 0, 0)};
  const std::vector<Detection> dets{det(8.1, 0, 0.9, 0, "s"),
                                    det(14, 0, 0.5, 0, "s")};
  EvalConfig cfg;
  const EvalReport r = evaluate_detections(dets, {s}, cfg);

  namespace fs = std::filesystem;
  const fs::path dir1 = "eval_emit_test_1", dir2 = "eval_emit_test_2";
  fs::create_directories(dir1);
  fs::create_directories(dir2);
  emit_report(r, dir1.string());
  emit_report(r, dir2.string());
  for (const char* name :
       {"metrics.csv", "summary.csv", "pr_curves.csv", "pr_curves.svg"}) {
    std::ifstream f1(dir1 / name), f2(dir2 / name);
    REQUIRE(f1.good());
    REQUIRE(f2.good());
    std::stringstream b1, b2;
    b1 << f1.rdbuf();
    b2 << f2.rdbuf();
    CHECK(b1.str() == b2.str());
    CHECK(!b1.str().empty());
  }
  // Header sanity for downstream parsers.
  std::ifstream mf(dir1 / "metrics.csv");
  std::string header;
  std::getline(mf, header);
  CHECK(header == "class_id,threshold,ap,tp,fp,fn");
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("eval config validation") {
  CHECK_NOTHROW(validate(EvalConfig{}));
  EvalConfig bad;
  bad.distance_thresholds = {1.0, 0.5};
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = EvalConfig{};
  bad.distance_thresholds = {};
  CHECK_THROWS_AS(validate(bad), DomainError);
  bad = EvalConfig{};
  bad.recall_points = 1;
  CHECK_THROWS_AS(validate(bad), DomainError);
}
