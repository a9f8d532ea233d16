// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "raydn/attention_mask.hpp"
#include "raydn/ray_queries.hpp"
#include "raydn/rng.hpp"
#include "raydn/scenes.hpp"
#include "raydn/tape.hpp"
#include "raydn/tensor.hpp"

namespace raydn {

struct DecoderConfig {
  std::size_t embed_dim = 32;
  std::size_t n_heads = 2;
  std::size_t n_layers = 2;
  std::size_t n_obj_queries = 24;
  std::size_t hidden_dim = 64;
  std::size_t n_classes = 4;
  // Strength of the fixed angular projection prior added to cross-attention
  // logits: a token from camera c is favored by how closely its ray matches
  // the direction from c to the query's point. 0 disables the prior.
  double angular_prior = 100.0;
  PerceptionRange perception_range{-28.0, 28.0, -28.0, 28.0, -2.0, 2.0};
};

void validate(const DecoderConfig& cfg);

// Decoded predictions for inspection / inference.
struct HeadOutput {
  Tensor class_logits;  // (n_query, n_classes)
  Tensor box;           // (n_query, 8): x,y,z,w,h,l,sin,cos (world units)
};

struct Detection {
  std::string scene_id;
  std::int32_t class_id = 0;
  Vec3 center;
  double w = 1.0, h = 1.0, l = 1.0;
  double yaw = 0.0;
  double score = 0.0;
};

struct Param {
  std::string name;
  Tensor value;
};

// Node handles into a Tape for one forward pass. Query layout is
// [ray groups in order | object queries].
struct ForwardNodes {
  Tape::NodeId class_logits = 0;  // (n_q, C)
  Tape::NodeId box_pred = 0;      // (n_q, 8) — normalized center, log sizes, sin, cos
  Tape::NodeId x0 = 0;            // initial query features (n_q, E)
  std::size_t n_ray = 0;
  std::size_t n_obj = 0;
  std::vector<std::pair<std::size_t, Tape::NodeId>> param_leaves;
};

// Query-based detector: point-MLP query encoder, masked self-attention,
// cross-attention over depth-blind feature tokens keyed by a learned
// ray-direction embedding, shared class/box heads.
class ToyModel {
 public:
  ToyModel(const DecoderConfig& cfg, SeededRng& init_rng);

  const DecoderConfig& config() const { return cfg_; }
  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  std::size_t param_scalar_count() const;

  // Normalizes a world point into [0,1]^3 by the perception range; points
  // outside are clamped and counted.
  std::array<double, 3> normalize_point(const Vec3& p) const;
  Vec3 denormalize_point(const std::array<double, 3>& n) const;
  std::size_t clamp_count() const { return clamp_count_; }

  // Standalone embedding of a world point (normalize + point MLP), (1, E).
  Tensor encode_query(const Vec3& point) const;
  // Embedding of the viewing-ray direction through a pixel, (1, E). Depends
  // on the unit direction only, never on depth.
  Tensor ray_direction_pe(const CameraModel& camera, double u, double v) const;

  // The rig supplies the camera optical centers for the query direction
  // identities; tokens themselves stay depth-blind.
  ForwardNodes forward(Tape& tape, const std::vector<CameraModel>& rig,
                       const std::vector<FeatureToken>& tokens,
                       const std::vector<RayQueryGroup>& groups) const;

  // Inference on object queries only (no ray queries at inference).
  HeadOutput infer_heads(const std::vector<CameraModel>& rig,
                         const std::vector<FeatureToken>& tokens) const;
  std::vector<Detection> infer(const Scene& scene,
                               const std::vector<FeatureToken>& tokens,
                               double score_floor) const;

  // Versioned flat binary serialization; load verifies magic, version,
  // config hash, and parameter count.
  void save(const std::string& path) const;
  static ToyModel load(const std::string& path, const DecoderConfig& cfg);
  std::uint64_t config_hash() const;

 private:
  ToyModel() = default;
  std::size_t add_param(const std::string& name, std::size_t r, std::size_t c);
  std::size_t find(const std::string& name) const;

  DecoderConfig cfg_;
  std::vector<Param> params_;
  mutable std::size_t clamp_count_ = 0;
};

std::uint64_t config_hash(const DecoderConfig& cfg);

}  // namespace raydn
