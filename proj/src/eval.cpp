// SPDX-License-Identifier: Apache-2.0
#include "raydn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "raydn/error.hpp"

namespace raydn {
namespace {

double ground_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

bool center_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

// (recall, precision) points at every distinct score cutoff, tie-safe.
std::vector<std::pair<double, double>> pr_points(std::vector<MatchedDet> matches,
                                                 std::size_t n_gt) {
  std::sort(matches.begin(), matches.end(), [](const MatchedDet& a,
                                               const MatchedDet& b) {
    return a.score > b.score;
  });
  std::vector<std::pair<double, double>> pts;
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < matches.size()) {
    const double s = matches[i].score;
    for (; i < matches.size() && matches[i].score == s; ++i)
      (matches[i].tp ? tp : fp) += 1;
    const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double rec =
        n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
    pts.emplace_back(rec, prec);
  }
  return pts;
}

struct ClassPool {
  std::vector<MatchedDet> matches;
  std::size_t tp = 0, fp = 0;
};

}  // namespace

void validate(const EvalConfig& cfg) {
  if (cfg.distance_thresholds.empty())
    throw DomainError("distance_thresholds must be nonempty");
  double prev = 0.0;
  for (double t : cfg.distance_thresholds) {
    if (!(t > prev)) throw DomainError("thresholds must be positive and increasing");
    prev = t;
  }
  if (!(cfg.ray_angle_eps > 0.0)) throw DomainError("ray_angle_eps must be > 0");
  if (cfg.recall_points < 2) throw DomainError("recall_points must be >= 2");
  if (!(cfg.score_floor >= 0.0 && cfg.score_floor <= 1.0))
    throw DomainError("score_floor must be in [0,1]");
  if (!(cfg.duplicate_threshold > 0.0))
    throw DomainError("duplicate_threshold must be > 0");
}

std::vector<MatchedDet> greedy_match(const std::vector<Detection>& dets,
                                     const std::vector<GroundTruthBox>& gts,
                                     double threshold) {
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    if (dets[a].center.x != dets[b].center.x ||
        dets[a].center.y != dets[b].center.y ||
        dets[a].center.z != dets[b].center.z)
      return center_less(dets[a].center, dets[b].center);
    return a < b;
  });

  std::vector<char> claimed(gts.size(), 0);
  std::vector<MatchedDet> out;
  out.reserve(dets.size());
  for (std::size_t i : order) {
    MatchedDet m;
    m.score = dets[i].score;
    m.det_index = i;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_g = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      const double d = ground_distance(dets[i].center, gts[g].center);
      if (d < best) {
        best = d;
        best_g = g;
      }
    }
    if (best_g < gts.size() && best <= threshold) {
      claimed[best_g] = 1;
      m.tp = true;
    }
    out.push_back(m);
  }
  return out;
}

double average_precision(const std::vector<MatchedDet>& matches, std::size_t n_gt,
                         std::size_t recall_points) {
  if (n_gt == 0) return -1.0;
  const auto pts = pr_points(matches, n_gt);
  if (pts.empty()) return 0.0;
  double ap = 0.0;
  for (std::size_t i = 0; i < recall_points; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(recall_points - 1);
    double best = 0.0;
    for (const auto& [rec, prec] : pts)
      if (rec >= r) best = std::max(best, prec);
    ap += best;
  }
  return ap / static_cast<double>(recall_points);
}

double ray_duplicate_rate(const std::vector<Detection>& dets,
                          const std::vector<Scene>& scenes,
                          const EvalConfig& cfg) {
  std::size_t n_fp = 0, n_dup = 0;
  for (const auto& scene : scenes) {
    std::set<std::int32_t> classes;
    for (const auto& b : scene.boxes) classes.insert(b.class_id);
    for (const auto& d : dets)
      if (d.scene_id == scene.scene_id) classes.insert(d.class_id);

    for (std::int32_t cls : classes) {
      std::vector<Detection> cd;
      std::vector<GroundTruthBox> cg;
      for (const auto& d : dets)
        if (d.scene_id == scene.scene_id && d.class_id == cls) cd.push_back(d);
      for (const auto& b : scene.boxes)
        if (b.class_id == cls) cg.push_back(b);
      if (cd.empty()) continue;

      const auto matches = greedy_match(cd, cg, cfg.duplicate_threshold);
      std::vector<const Detection*> tps, fps;
      for (const auto& m : matches)
        (m.tp ? tps : fps).push_back(&cd[m.det_index]);
      n_fp += fps.size();
      for (const Detection* f : fps) {
        bool dup = false;
        for (const Detection* t : tps) {
          for (const auto& cam : scene.rig) {
            const Vec3 o = cam.optical_center();
            const Vec3 a = (f->center - o);
            const Vec3 b = (t->center - o);
            const double na = a.norm(), nb = b.norm();
            if (na < 1e-9 || nb < 1e-9) continue;
            const double cosang =
                std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
            if (std::acos(cosang) < cfg.ray_angle_eps) {
              dup = true;
              break;
            }
          }
          if (dup) break;
        }
        if (dup) ++n_dup;
      }
    }
  }
  return n_fp == 0 ? 0.0 : static_cast<double>(n_dup) / static_cast<double>(n_fp);
}

EvalReport evaluate_detections(const std::vector<Detection>& dets,
                               const std::vector<Scene>& scenes,
                               const EvalConfig& cfg) {
  validate(cfg);
  EvalReport report;
  report.n_detections = dets.size();

  std::set<std::int32_t> classes;
  for (const auto& s : scenes) {
    report.n_gt += s.boxes.size();
    for (const auto& b : s.boxes) classes.insert(b.class_id);
  }
  for (const auto& d : dets) classes.insert(d.class_id);

  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (double thr : cfg.distance_thresholds) {
    ClassPool micro;
    std::size_t micro_gt = 0;
    for (std::int32_t cls : classes) {
      ClassPool pool;
      std::size_t n_gt_cls = 0;
      for (const auto& scene : scenes) {
        std::vector<Detection> cd;
        std::vector<GroundTruthBox> cg;
        for (const auto& d : dets)
          if (d.scene_id == scene.scene_id && d.class_id == cls) cd.push_back(d);
        for (const auto& b : scene.boxes)
          if (b.class_id == cls) cg.push_back(b);
        n_gt_cls += cg.size();
        if (cd.empty()) continue;
        for (const auto& m : greedy_match(cd, cg, thr)) {
          pool.matches.push_back(m);
          (m.tp ? pool.tp : pool.fp) += 1;
        }
      }
      ClassThresholdMetric metric;
      metric.class_id = cls;
      metric.threshold = thr;
      metric.tp = pool.tp;
      metric.fp = pool.fp;
      metric.fn = n_gt_cls - pool.tp;
      metric.ap = average_precision(pool.matches, n_gt_cls, cfg.recall_points);
      if (metric.ap >= 0.0) {
        ap_sum += metric.ap;
        ++ap_count;
      }
      report.metrics.push_back(metric);

      PrCurve curve;
      curve.class_id = cls;
      curve.threshold = thr;
      for (const auto& [rec, prec] : pr_points(pool.matches, n_gt_cls)) {
        curve.recall.push_back(rec);
        curve.precision.push_back(prec);
      }
      if (curve.recall.empty()) {  // explicit zero-recall marker
        curve.recall.push_back(0.0);
        curve.precision.push_back(0.0);
      }
      report.curves.push_back(std::move(curve));

      micro.matches.insert(micro.matches.end(), pool.matches.begin(),
                           pool.matches.end());
      micro_gt += n_gt_cls;
    }
    PrCurve mc;
    mc.class_id = -1;
    mc.threshold = thr;
    for (const auto& [rec, prec] : pr_points(micro.matches, micro_gt)) {
      mc.recall.push_back(rec);
      mc.precision.push_back(prec);
    }
    if (mc.recall.empty()) {
      mc.recall.push_back(0.0);
      mc.precision.push_back(0.0);
    }
    report.curves.push_back(std::move(mc));
  }
  report.map = ap_count == 0 ? 0.0 : ap_sum / static_cast<double>(ap_count);
  report.ray_duplicate_rate = ray_duplicate_rate(dets, scenes, cfg);

  std::sort(report.metrics.begin(), report.metrics.end(),
            [](const ClassThresholdMetric& a, const ClassThresholdMetric& b) {
              if (a.class_id != b.class_id) return a.class_id < b.class_id;
              return a.threshold < b.threshold;
            });
  return report;
}

namespace {

std::string fmt6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

}  // namespace

std::string pr_curves_svg(const std::vector<PrCurve>& curves) {
  // Micro-averaged PR polyline per threshold on a fixed 480x360 canvas.
  const double W = 480, H = 360, L = 50, B = 40, T = 20, R = 20;
  const double pw = W - L - R, ph = H - T - B;
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b"};
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"360\" "
       "viewBox=\"0 0 480 360\">\n";
  s += "<rect width=\"480\" height=\"360\" fill=\"white\"/>\n";
  // axes
  s += "<line x1=\"" + fmt6(L) + "\" y1=\"" + fmt6(H - B) + "\" x2=\"" +
       fmt6(W - R) + "\" y2=\"" + fmt6(H - B) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + fmt6(L) + "\" y1=\"" + fmt6(T) + "\" x2=\"" + fmt6(L) +
       "\" y2=\"" + fmt6(H - B) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double f = i / 5.0;
    s += "<text x=\"" + fmt6(L + f * pw - 8) + "\" y=\"" + fmt6(H - B + 16) +
         "\" font-size=\"10\">" + fmt6(f).substr(0, 3) + "</text>\n";
    s += "<text x=\"" + fmt6(L - 28) + "\" y=\"" + fmt6(H - B - f * ph + 4) +
         "\" font-size=\"10\">" + fmt6(f).substr(0, 3) + "</text>\n";
  }
  s += "<text x=\"" + fmt6(L + pw / 2 - 20) + "\" y=\"" + fmt6(H - 8) +
       "\" font-size=\"12\">recall</text>\n";
  s += "<text x=\"12\" y=\"" + fmt6(T + ph / 2) +
       "\" font-size=\"12\" transform=\"rotate(-90 12 " + fmt6(T + ph / 2) +
       ")\">precision</text>\n";

  int ci = 0;
  for (const auto& c : curves) {
    if (c.class_id != -1) continue;  // micro curves only
    std::string pts;
    for (std::size_t i = 0; i < c.recall.size(); ++i) {
      pts += fmt6(L + c.recall[i] * pw) + "," +
             fmt6(H - B - c.precision[i] * ph) + " ";
    }
    const char* color = colors[ci % 6];
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
         "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
    s += "<text x=\"" + fmt6(W - R - 120) + "\" y=\"" + fmt6(T + 14 + 14 * ci) +
         "\" font-size=\"10\" fill=\"" + color + "\">threshold " +
         fmt6(c.threshold).substr(0, 4) + " m</text>\n";
    ++ci;
  }
  s += "</svg>\n";
  return s;
}

void emit_report(const EvalReport& report, const std::string& dir) {
  std::string metrics = "class_id,threshold,ap,tp,fp,fn\n";
  for (const auto& m : report.metrics) {
    metrics += std::to_string(m.class_id) + "," + fmt6(m.threshold) + "," +
               (m.ap < 0.0 ? std::string() : fmt6(m.ap)) + "," +
               std::to_string(m.tp) + "," + std::to_string(m.fp) + "," +
               std::to_string(m.fn) + "\n";
  }
  write_file(dir + "/metrics.csv", metrics);

  std::string summary = "map,ray_duplicate_rate,n_detections,n_gt\n";
  summary += fmt6(report.map) + "," + fmt6(report.ray_duplicate_rate) + "," +
             std::to_string(report.n_detections) + "," +
             std::to_string(report.n_gt) + "\n";
  write_file(dir + "/summary.csv", summary);

  std::string curves = "class_id,threshold,recall,precision\n";
  for (const auto& c : report.curves)
    for (std::size_t i = 0; i < c.recall.size(); ++i)
      curves += std::to_string(c.class_id) + "," + fmt6(c.threshold) + "," +
                fmt6(c.recall[i]) + "," + fmt6(c.precision[i]) + "\n";
  write_file(dir + "/pr_curves.csv", curves);

  write_file(dir + "/pr_curves.svg", pr_curves_svg(report.curves));
}

}  // namespace raydn
