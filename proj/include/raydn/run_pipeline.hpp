// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "raydn/eval.hpp"
#include "raydn/model.hpp"
#include "raydn/run_config.hpp"
#include "raydn/scenes.hpp"
#include "raydn/train.hpp"

namespace raydn {

// Worker-thread cap: min(RAYDN_THREADS, hardware_concurrency), at least 1.
std::size_t worker_threads();

// Deterministic scene set: scene i comes from substream (seed, offset + i).
std::vector<Scene> generate_scenes(const RunConfig& cfg, std::size_t count,
                                   std::uint64_t stream_offset = 0);

struct TrainLogRow {
  std::size_t step = 0;
  double total = 0.0;
  double matching = 0.0;
  double denoising = 0.0;
};

struct TrainOutcome {
  ToyModel model;
  std::vector<TrainLogRow> log;
};

// Full training run. Baseline (with_beam = false) never touches the ray RNG
// stream, so baseline and BEAM runs share init and scene-order trajectories.
// On a non-finite loss writes a diagnostic dump next to `diag_dir` (when
// nonempty) and rethrows NumericError.
TrainOutcome train_model(const RunConfig& cfg, const std::vector<Scene>& scenes,
                         bool with_beam, const std::string& diag_dir = "");

// Inference over scenes (parallel, reduced in scene order) + metric report.
std::vector<Detection> run_inference(const ToyModel& model,
                                     const std::vector<Scene>& scenes,
                                     const RunConfig& cfg);
EvalReport evaluate_model(const ToyModel& model, const std::vector<Scene>& scenes,
                          const RunConfig& cfg);

std::string loss_log_csv(const std::vector<TrainLogRow>& log);

}  // namespace raydn
