// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "raydn/error.hpp"
#include "raydn/run_pipeline.hpp"

using namespace raydn;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.seed = 9;
  cfg.scenegen.grid_w = 8;
  cfg.scenegen.grid_h = 6;
  cfg.scenegen.n_boxes_min = 3;
  cfg.scenegen.n_boxes_max = 5;
  cfg.decoder.embed_dim = 16;
  cfg.decoder.n_layers = 1;
  cfg.decoder.n_obj_queries = 8;
  cfg.decoder.hidden_dim = 32;
  cfg.train.steps = 12;
  return cfg;
}

}  // namespace

TEST_CASE("scene generation is deterministic and stream-separated") {
  const RunConfig cfg = tiny_config();
  const auto a = generate_scenes(cfg, 4);
  const auto b = generate_scenes(cfg, 4);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a[i].scene_id == b[i].scene_id);
    REQUIRE(a[i].boxes.size() == b[i].boxes.size());
    for (std::size_t k = 0; k < a[i].boxes.size(); ++k)
      CHECK(a[i].boxes[k].center.x == b[i].boxes[k].center.x);
  }
  // Distinct scenes differ; offset streams do not collide with the base set.
  const auto c = generate_scenes(cfg, 2, 100);
  CHECK(c[0].boxes[0].center.x != a[0].boxes[0].center.x);
  std::set<std::string> ids;
  for (const auto& s : a) ids.insert(s.scene_id);
  CHECK(ids.size() == 4);
}

TEST_CASE("baseline training never consumes the ray stream") {
  const RunConfig cfg = tiny_config();
  const auto scenes = generate_scenes(cfg, 3);
  const TrainOutcome b1 = train_model(cfg, scenes, false);
  const TrainOutcome b2 = train_model(cfg, scenes, false);
  REQUIRE(b1.log.size() == cfg.train.steps);
  for (std::size_t i = 0; i < b1.log.size(); ++i)
    CHECK(b1.log[i].total == b2.log[i].total);  // bitwise trajectory
  for (std::size_t i = 0; i < b1.model.params().size(); ++i)
    CHECK(b1.model.params()[i].value.v == b2.model.params()[i].value.v);
  // Baseline log has a zero denoising column throughout.
  for (const auto& row : b1.log) CHECK(row.denoising == 0.0);
}

TEST_CASE("beam and baseline share initialization but diverge in training") {
  const RunConfig cfg = tiny_config();
  const auto scenes = generate_scenes(cfg, 3);
  const TrainOutcome base = train_model(cfg, scenes, false);
  const TrainOutcome beam = train_model(cfg, scenes, true);
  bool diverged = false;
  for (std::size_t i = 0; i < base.model.params().size(); ++i)
    diverged |= base.model.params()[i].value.v != beam.model.params()[i].value.v;
  CHECK(diverged);
  bool denoise_seen = false;
  for (const auto& row : beam.log) denoise_seen |= row.denoising > 0.0;
  CHECK(denoise_seen);
}

TEST_CASE("inference reduces in scene order regardless of thread count") {
  const RunConfig cfg = tiny_config();
  const auto scenes = generate_scenes(cfg, 6);
  const TrainOutcome t = train_model(cfg, scenes, false);

  setenv("RAYDN_THREADS", "1", 1);
  const auto d1 = run_inference(t.model, scenes, cfg);
  setenv("RAYDN_THREADS", "4", 1);
  const auto d4 = run_inference(t.model, scenes, cfg);
  unsetenv("RAYDN_THREADS");

  REQUIRE(d1.size() == d4.size());
  for (std::size_t i = 0; i < d1.size(); ++i) {
    CHECK(d1[i].scene_id == d4[i].scene_id);
    CHECK(d1[i].score == d4[i].score);
    CHECK(d1[i].center.x == d4[i].center.x);
  }
}

TEST_CASE("worker_threads honors the env cap") {
  setenv("RAYDN_THREADS", "2", 1);
  const std::size_t capped = worker_threads();
  CHECK(capped >= 1);
  CHECK(capped <= 2);  // env cap binds even when more cores exist
  setenv("RAYDN_THREADS", "1", 1);
  CHECK(worker_threads() == 1);
  setenv("RAYDN_THREADS", "0", 1);
  CHECK_THROWS_AS(worker_threads(), ConfigError);  // zero workers rejected
  setenv("RAYDN_THREADS", "banana", 1);
  CHECK_THROWS_AS(worker_threads(), ConfigError);
  unsetenv("RAYDN_THREADS");
  CHECK(worker_threads() >= 1);
}

TEST_CASE("loss log csv shape") {
  const RunConfig cfg = tiny_config();
  const auto scenes = generate_scenes(cfg, 2);
  const TrainOutcome t = train_model(cfg, scenes, true);
  const std::string csv = loss_log_csv(t.log);
  CHECK(csv.rfind("step,total,matching,denoising\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == cfg.train.steps + 1);
}

TEST_CASE("evaluate_model produces a coherent report") {
  const RunConfig cfg = tiny_config();
  const auto scenes = generate_scenes(cfg, 3);
  const TrainOutcome t = train_model(cfg, scenes, true);
  const EvalReport r = evaluate_model(t.model, scenes, cfg);
  CHECK(r.n_gt > 0);
  // One row per (observed class, threshold).
  CHECK(r.metrics.size() % cfg.eval.distance_thresholds.size() == 0);
  CHECK(r.metrics.size() <=
        cfg.decoder.n_classes * cfg.eval.distance_thresholds.size());
  CHECK(r.map >= 0.0);
  CHECK(r.map <= 1.0);
  CHECK(r.ray_duplicate_rate >= 0.0);
  CHECK(r.ray_duplicate_rate <= 1.0);
}
