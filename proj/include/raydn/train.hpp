// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "raydn/hungarian.hpp"
#include "raydn/model.hpp"
#include "raydn/ray_queries.hpp"
#include "raydn/scenes.hpp"
#include "raydn/tape.hpp"

namespace raydn {

struct TrainParams {
  std::size_t steps = 600;
  std::size_t batch_size = 1;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;
  double w_cls = 1.0;        // classification loss weight
  double w_box = 5.0;        // L1 box loss weight
  double w_denoise = 1.0;    // denoising loss weight vs matching loss
  double match_box_cost = 2.0;  // L1 term weight inside the matching cost
};

void validate(const TrainParams& tp);

// The 8-dim regression target for one box: normalized center, log sizes,
// sin/cos yaw. Matches the raw box head output space.
std::vector<double> box_target(const ToyModel& model, const GroundTruthBox& box);

// Hungarian matching of object queries to scene boxes on detached values:
// focal-style classification cost plus weighted L1 box cost.
MatchResult match_objects(const Tape& tape, const ForwardNodes& fwd,
                          const ToyModel& model, const Scene& scene,
                          const TrainParams& tp);

struct LossNodes {
  Tape::NodeId total = 0;
  Tape::NodeId matching = 0;
  Tape::NodeId denoising = 0;  // == total only when absent; check has_denoising
  bool has_denoising = false;
};

// Matching focal + L1 on object queries, plus — when ray groups are present —
// focal with a single positive per group and L1 regression toward the group
// target for every ray query.
LossNodes build_loss(Tape& tape, const ForwardNodes& fwd, const ToyModel& model,
                     const Scene& scene, const std::vector<RayQueryGroup>& groups,
                     const TrainParams& tp);

class AdamW {
 public:
  AdamW(const ToyModel& model, double lr, double weight_decay);
  void step(ToyModel& model, const std::vector<Tensor>& grads);
  std::size_t steps_taken() const { return t_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  double lr_, wd_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct LossBreakdown {
  double total = 0.0;
  double matching = 0.0;
  double denoising = 0.0;
};

struct SceneExample {
  const Scene* scene = nullptr;
  const std::vector<FeatureToken>* tokens = nullptr;
  std::vector<RayQueryGroup> groups;
};

// One optimizer update over a batch (gradients averaged in batch order).
// Throws NumericError when the loss is non-finite.
LossBreakdown train_step(ToyModel& model, AdamW& opt,
                         const std::vector<SceneExample>& batch,
                         const TrainParams& tp);

// Central-difference validation of the tape gradients on one example.
// Subsamples at most max_coords per parameter tensor. Returns the max
// relative error |ad - fd| / max(1e-4, |ad|, |fd|).
double gradient_check(ToyModel& model, const SceneExample& example,
                      const TrainParams& tp, double epsilon = 1e-4,
                      std::size_t max_coords = 25);

}  // namespace raydn
