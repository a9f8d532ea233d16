// SPDX-License-Identifier: Apache-2.0
#include "raydn/run_pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "raydn/error.hpp"

namespace raydn {
namespace {

// Fixed substream indices so baseline and BEAM runs draw identical init and
// scene-order sequences; the ray stream is consumed only when BEAM is on.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kRayStream = 3;
constexpr std::uint64_t kSceneStream = 16;
constexpr double kPi = 3.14159265358979323846;

}  // namespace

std::size_t worker_threads() {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("RAYDN_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v == 0)
      throw ConfigError("RAYDN_THREADS must be a positive integer");
    n = std::min<std::size_t>(n, v);
  }
  return n;
}

std::vector<Scene> generate_scenes(const RunConfig& cfg, std::size_t count,
                                   std::uint64_t stream_offset) {
  validate(cfg);
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SeededRng rng =
        SeededRng::substream(cfg.seed, kSceneStream + stream_offset + i);
    const std::size_t span = cfg.scenegen.n_boxes_max - cfg.scenegen.n_boxes_min;
    const std::size_t n_boxes =
        cfg.scenegen.n_boxes_min + (span == 0 ? 0 : rng.next_below(span + 1));
    Scene scene = sample_scene(rng, n_boxes, cfg.decoder.perception_range,
                               cfg.scenegen);
    char id[32];
    std::snprintf(id, sizeof id, "scene_%05zu",
                  static_cast<std::size_t>(stream_offset + i));
    scene.scene_id = id;
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

TrainOutcome train_model(const RunConfig& cfg, const std::vector<Scene>& scenes,
                         bool with_beam, const std::string& diag_dir) {
  validate(cfg);
  if (scenes.empty()) throw DomainError("train_model: no scenes");

  SeededRng init_rng = SeededRng::substream(cfg.seed, kInitStream);
  SeededRng order_rng = SeededRng::substream(cfg.seed, kOrderStream);
  const SeededRng ray_root = SeededRng::substream(cfg.seed, kRayStream);

  TrainOutcome out{ToyModel(cfg.decoder, init_rng), {}};
  AdamW opt(out.model, cfg.train.lr, cfg.train.weight_decay);

  std::vector<std::vector<FeatureToken>> tokens(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i)
    tokens[i] = render_features(scenes[i], cfg.scenegen.grid_w,
                                cfg.scenegen.grid_h, cfg.scenegen.class_count);

  // Linear warmup then cosine decay to 10% of the peak rate; batch-1 Hungarian
  // reassignment noise otherwise keeps the late loss oscillating.
  const std::size_t warmup = std::min<std::size_t>(100, cfg.train.steps / 10);
  const auto lr_at = [&](std::size_t step) {
    if (step < warmup)
      return cfg.train.lr * static_cast<double>(step + 1) /
             static_cast<double>(warmup);
    const double progress =
        cfg.train.steps > warmup
            ? static_cast<double>(step - warmup) /
                  static_cast<double>(cfg.train.steps - warmup)
            : 1.0;
    constexpr double kFloor = 0.1;
    return cfg.train.lr *
           (kFloor + (1.0 - kFloor) * 0.5 * (1.0 + std::cos(kPi * progress)));
  };

  out.log.reserve(cfg.train.steps);
  for (std::size_t step = 0; step < cfg.train.steps; ++step) {
    opt.set_lr(lr_at(step));
    std::vector<SceneExample> batch;
    for (std::size_t b = 0; b < cfg.train.batch_size; ++b) {
      const std::size_t idx = order_rng.next_below(scenes.size());
      SceneExample ex;
      ex.scene = &scenes[idx];
      ex.tokens = &tokens[idx];
      if (with_beam) {
        SeededRng step_rng =
            ray_root.split(step * cfg.train.batch_size + b + 1);
        ex.groups = build_all(scenes[idx].rig, scenes[idx].boxes, cfg.ray,
                              step_rng).groups;
      }
      batch.push_back(std::move(ex));
    }
    LossBreakdown lb;
    try {
      lb = train_step(out.model, opt, batch, cfg.train);
    } catch (const NumericError&) {
      if (!diag_dir.empty()) {
        std::ofstream f(diag_dir + "/train_diagnostic.txt");
        f << "non-finite loss at step " << step << "\n";
        for (const auto& row : out.log)
          f << row.step << " total=" << row.total << " matching=" << row.matching
            << " denoising=" << row.denoising << "\n";
      }
      throw;
    }
    out.log.push_back({step, lb.total, lb.matching, lb.denoising});
  }
  return out;
}

std::vector<Detection> run_inference(const ToyModel& model,
                                     const std::vector<Scene>& scenes,
                                     const RunConfig& cfg) {
  const std::size_t n_threads = std::min(worker_threads(), scenes.size());
  std::vector<std::vector<Detection>> per_scene(scenes.size());

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenes.size()) return;
      const auto tokens = render_features(scenes[i], cfg.scenegen.grid_w,
                                          cfg.scenegen.grid_h,
                                          cfg.scenegen.class_count);
      per_scene[i] = model.infer(scenes[i], tokens, cfg.eval.score_floor);
    }
  };
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // Reduce in scene order so output is independent of scheduling.
  std::vector<Detection> dets;
  for (auto& v : per_scene)
    for (auto& d : v) dets.push_back(std::move(d));
  return dets;
}

EvalReport evaluate_model(const ToyModel& model, const std::vector<Scene>& scenes,
                          const RunConfig& cfg) {
  return evaluate_detections(run_inference(model, scenes, cfg), scenes, cfg.eval);
}

std::string loss_log_csv(const std::vector<TrainLogRow>& log) {
  std::string s = "step,total,matching,denoising\n";
  char buf[160];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g\n", r.step, r.total,
                  r.matching, r.denoising);
    s += buf;
  }
  return s;
}

}  // namespace raydn
