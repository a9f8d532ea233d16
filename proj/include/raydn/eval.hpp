// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "raydn/model.hpp"
#include "raydn/scenes.hpp"

namespace raydn {

struct EvalConfig {
  std::vector<double> distance_thresholds{0.5, 1.0, 2.0, 4.0};  // meters
  double ray_angle_eps = 0.01;   // radians
  std::size_t recall_points = 101;
  double score_floor = 0.05;     // inference score threshold
  double duplicate_threshold = 2.0;  // matching threshold for the duplicate metric
};

void validate(const EvalConfig& cfg);

// One detection's fate at a given threshold, plus its score for PR sorting.
struct MatchedDet {
  double score = 0.0;
  bool tp = false;
  std::size_t det_index = 0;  // index into the input detection list
};

// Greedy score-descending matching of same-class detections to ground truths
// by 2D ground-plane center distance. Ties in score break by center
// lexicographic order. Returns per-detection outcomes sorted by score
// descending; unmatched gts are FNs (n_gt - #TP).
std::vector<MatchedDet> greedy_match(const std::vector<Detection>& dets,
                                     const std::vector<GroundTruthBox>& gts,
                                     double threshold);

// Precision envelope integrated over an evenly spaced recall grid.
// Returns -1 (undefined sentinel) when n_gt == 0.
double average_precision(const std::vector<MatchedDet>& matches, std::size_t n_gt,
                         std::size_t recall_points);

struct PrCurve {
  std::int32_t class_id = -1;  // -1 = micro-average over classes
  double threshold = 0.0;
  std::vector<double> recall;
  std::vector<double> precision;
};

struct ClassThresholdMetric {
  std::int32_t class_id = 0;
  double threshold = 0.0;
  double ap = -1.0;  // -1 when undefined (no gt of this class)
  std::size_t tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::vector<ClassThresholdMetric> metrics;  // class-major, threshold-minor
  std::vector<PrCurve> curves;
  double map = 0.0;                 // mean AP over defined (class, threshold)
  double ray_duplicate_rate = 0.0;  // at duplicate_threshold
  std::size_t n_detections = 0;
  std::size_t n_gt = 0;
};

// Evaluation pools detections across scenes per (class, threshold); matching
// itself is per scene. Scene lookup is by scene_id.
EvalReport evaluate_detections(const std::vector<Detection>& dets,
                               const std::vector<Scene>& scenes,
                               const EvalConfig& cfg);

// Fraction of FP detections (at cfg.duplicate_threshold) angularly colinear
// with a same-class, same-scene TP from some camera of the rig.
double ray_duplicate_rate(const std::vector<Detection>& dets,
                          const std::vector<Scene>& scenes,
                          const EvalConfig& cfg);

// Self-contained SVG of the micro-averaged PR polylines, one per threshold.
std::string pr_curves_svg(const std::vector<PrCurve>& curves);

// Writes metrics.csv, summary.csv, pr_curves.csv and pr_curves.svg under dir.
void emit_report(const EvalReport& report, const std::string& dir);

}  // namespace raydn
