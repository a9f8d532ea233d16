// SPDX-License-Identifier: Apache-2.0
#include "raydn/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "raydn/error.hpp"

namespace raydn {
namespace {

constexpr char kMagic[4] = {'R', 'D', 'N', 'M'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Fixed world-frame anchors for object queries: an azimuth-by-radius grid
// over the perception range, so different queries own different depth bands
// along similar viewing directions. Used both to seed the learnable
// reference points and as the (static) points behind each object query's
// camera-set direction identity.
std::vector<Vec3> object_anchor_points(const DecoderConfig& cfg) {
  const std::size_t n = cfg.n_obj_queries;
  const double r_max = std::min({std::abs(cfg.perception_range[0]),
                                 cfg.perception_range[1],
                                 std::abs(cfg.perception_range[2]),
                                 cfg.perception_range[3]});
  const std::size_t n_rad = n >= 9 ? 3 : 1;
  const std::size_t n_az = (n + n_rad - 1) / n_rad;
  constexpr double kBands[3] = {0.30, 0.55, 0.85};
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t a = q % n_az;
    const std::size_t b = q / n_az;
    const double frac = n_rad == 1 ? 0.45 : kBands[b];
    // Stagger successive rings by a fraction of the azimuth step.
    const double phi = 2.0 * kPi *
                       (static_cast<double>(a) +
                        static_cast<double>(b) / static_cast<double>(n_rad)) /
                       static_cast<double>(n_az);
    out.push_back({frac * r_max * std::cos(phi), frac * r_max * std::sin(phi), 0.0});
  }
  return out;
}

}  // namespace

void validate(const DecoderConfig& cfg) {
  if (cfg.embed_dim == 0 || cfg.n_heads == 0 || cfg.embed_dim % cfg.n_heads != 0)
    throw DomainError("embed_dim must be a positive multiple of n_heads");
  if (cfg.n_layers == 0) throw DomainError("n_layers must be >= 1");
  if (cfg.n_obj_queries == 0) throw DomainError("n_obj_queries must be >= 1");
  if (cfg.hidden_dim == 0) throw DomainError("hidden_dim must be >= 1");
  if (cfg.n_classes == 0) throw DomainError("n_classes must be >= 1");
  if (!(cfg.angular_prior >= 0.0))
    throw DomainError("angular_prior must be >= 0");
  const auto& r = cfg.perception_range;
  if (!(r[0] < r[1] && r[2] < r[3] && r[4] < r[5]))
    throw DomainError("degenerate perception_range");
}

std::uint64_t config_hash(const DecoderConfig& cfg) {
  char buf[288];
  std::snprintf(buf, sizeof buf,
                "%zu|%zu|%zu|%zu|%zu|%zu|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                cfg.embed_dim, cfg.n_heads, cfg.n_layers, cfg.n_obj_queries,
                cfg.hidden_dim, cfg.n_classes, cfg.perception_range[0],
                cfg.perception_range[1], cfg.perception_range[2],
                cfg.perception_range[3], cfg.perception_range[4],
                cfg.perception_range[5], cfg.angular_prior);
  return fnv1a(buf);
}

std::uint64_t ToyModel::config_hash() const { return raydn::config_hash(cfg_); }

std::size_t ToyModel::add_param(const std::string& name, std::size_t r,
                                std::size_t c) {
  params_.push_back({name, Tensor(r, c)});
  return params_.size() - 1;
}

std::size_t ToyModel::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw ShapeError("unknown parameter: " + name);
}

ToyModel::ToyModel(const DecoderConfig& cfg, SeededRng& init_rng) : cfg_(cfg) {
  validate(cfg);
  const std::size_t e = cfg.embed_dim;
  const std::size_t hd = cfg.hidden_dim;
  const std::size_t tok_dim = token_content_dim(cfg.n_classes);

  add_param("obj_ref_raw", cfg.n_obj_queries, 3);
  add_param("point_w1", 3, hd);
  add_param("point_b1", 1, hd);
  add_param("point_w2", hd, e);
  add_param("point_b2", 1, e);
  add_param("tok_w", tok_dim, e);
  add_param("tok_b", 1, e);
  add_param("pe_w1", 3, hd);
  add_param("pe_b1", 1, hd);
  add_param("pe_w2", hd, e);
  add_param("pe_b2", 1, e);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + "_";
    add_param(p + "ln1_g", 1, e);
    add_param(p + "ln1_b", 1, e);
    add_param(p + "self_wq", e, e);
    add_param(p + "self_bq", 1, e);
    add_param(p + "self_wk", e, e);
    add_param(p + "self_bk", 1, e);
    add_param(p + "self_wv", e, e);
    add_param(p + "self_bv", 1, e);
    add_param(p + "self_wo", e, e);
    add_param(p + "self_bo", 1, e);
    add_param(p + "ln2_g", 1, e);
    add_param(p + "ln2_b", 1, e);
    add_param(p + "cross_wq", e, e);
    add_param(p + "cross_bq", 1, e);
    add_param(p + "cross_wk", e, e);
    add_param(p + "cross_bk", 1, e);
    add_param(p + "cross_wv", e, e);
    add_param(p + "cross_bv", 1, e);
    add_param(p + "cross_wo", e, e);
    add_param(p + "cross_bo", 1, e);
    add_param(p + "ln3_g", 1, e);
    add_param(p + "ln3_b", 1, e);
    add_param(p + "ffn_w1", e, hd);
    add_param(p + "ffn_b1", 1, hd);
    add_param(p + "ffn_w2", hd, e);
    add_param(p + "ffn_b2", 1, e);
  }
  add_param("final_ln_g", 1, e);
  add_param("final_ln_b", 1, e);
  add_param("cls_w1", e, hd);
  add_param("cls_b1", 1, hd);
  add_param("cls_w2", hd, cfg.n_classes);
  add_param("cls_b2", 1, cfg.n_classes);
  add_param("box_w1", e, hd);
  add_param("box_b1", 1, hd);
  add_param("box_w2", hd, 8);
  add_param("box_b2", 1, 8);

  // Init: weights ~ N(0, 1/fan_in), biases 0, layernorm gains 1, object
  // reference points spread over the unit cube via a logit transform.
  for (auto& prm : params_) {
    const bool is_gain = prm.name.size() > 2 &&
                         prm.name.compare(prm.name.size() - 2, 2, "_g") == 0 &&
                         prm.name.find("ln") != std::string::npos;
    const bool is_bias = prm.name.find("_b") != std::string::npos && !is_gain;
    if (prm.name == "obj_ref_raw") {
      // Queries start at their fixed anchors (matching the points behind
      // their positional identity); jitter breaks exact symmetry.
      const std::vector<Vec3> anchors = object_anchor_points(cfg);
      for (std::size_t q = 0; q < cfg.n_obj_queries; ++q) {
        const Vec3& p = anchors[q];
        const std::array<double, 3> n = {
            (p.x - cfg.perception_range[0]) /
                (cfg.perception_range[1] - cfg.perception_range[0]),
            (p.y - cfg.perception_range[2]) /
                (cfg.perception_range[3] - cfg.perception_range[2]),
            (p.z - cfg.perception_range[4]) /
                (cfg.perception_range[5] - cfg.perception_range[4])};
        for (std::size_t k = 0; k < 3; ++k) {
          const double u = std::clamp(
              n[k] + 0.02 * init_rng.next_normal(), 1e-3, 1.0 - 1e-3);
          prm.value.at(q, k) = std::log(u / (1.0 - u));
        }
      }
    } else if (is_gain) {
      for (double& x : prm.value.v) x = 1.0;
    } else if (prm.name == "cls_b2") {
      // Background prior: start every class score near 1%, so the focal
      // loss spends its early budget on matched positives instead of
      // suppressing two dozen half-confident queries per scene.
      for (double& x : prm.value.v) x = std::log(0.01 / 0.99);
    } else if (is_bias) {
      // zeros
    } else if (prm.name == "cls_w2" || prm.name == "box_w2") {
      // Near-zero head outputs: predictions start at the query anchors, so
      // early Hungarian assignment is by anchor geometry instead of noise.
      const double sd = 0.02 / std::sqrt(static_cast<double>(prm.value.rows));
      for (double& x : prm.value.v) x = sd * init_rng.next_normal();
    } else {
      const double sd = 1.0 / std::sqrt(static_cast<double>(prm.value.rows));
      for (double& x : prm.value.v) x = sd * init_rng.next_normal();
    }
  }
}

std::size_t ToyModel::param_scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::array<double, 3> ToyModel::normalize_point(const Vec3& p) const {
  const auto& r = cfg_.perception_range;
  std::array<double, 3> out{(p.x - r[0]) / (r[1] - r[0]),
                            (p.y - r[2]) / (r[3] - r[2]),
                            (p.z - r[4]) / (r[5] - r[4])};
  bool clamped = false;
  for (double& x : out) {
    if (x < 0.0) {
      x = 0.0;
      clamped = true;
    } else if (x > 1.0) {
      x = 1.0;
      clamped = true;
    }
  }
  if (clamped) ++clamp_count_;
  return out;
}

Vec3 ToyModel::denormalize_point(const std::array<double, 3>& n) const {
  const auto& r = cfg_.perception_range;
  return {r[0] + n[0] * (r[1] - r[0]), r[2] + n[1] * (r[3] - r[2]),
          r[4] + n[2] * (r[5] - r[4])};
}

namespace {

// y = tanh(x W1 + b1) W2 + b2 on plain values.
Tensor value_mlp(const Tensor& x, const Tensor& w1, const Tensor& b1,
                 const Tensor& w2, const Tensor& b2) {
  Tensor h(x.rows, w1.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xv = x.at(r, k);
      for (std::size_t c = 0; c < w1.cols; ++c) h.at(r, c) += xv * w1.at(k, c);
    }
  for (std::size_t r = 0; r < h.rows; ++r)
    for (std::size_t c = 0; c < h.cols; ++c)
      h.at(r, c) = std::tanh(h.at(r, c) + b1.v[c]);
  Tensor y(x.rows, w2.cols);
  for (std::size_t r = 0; r < h.rows; ++r)
    for (std::size_t k = 0; k < h.cols; ++k) {
      const double hv = h.at(r, k);
      for (std::size_t c = 0; c < w2.cols; ++c) y.at(r, c) += hv * w2.at(k, c);
    }
  for (std::size_t r = 0; r < y.rows; ++r)
    for (std::size_t c = 0; c < y.cols; ++c) y.at(r, c) += b2.v[c];
  return y;
}

}  // namespace

Tensor ToyModel::encode_query(const Vec3& point) const {
  const auto n = normalize_point(point);
  Tensor x(1, 3);
  x.v = {n[0], n[1], n[2]};
  return value_mlp(x, params_[find("point_w1")].value, params_[find("point_b1")].value,
                   params_[find("point_w2")].value, params_[find("point_b2")].value);
}

Tensor ToyModel::ray_direction_pe(const CameraModel& camera, double u,
                                  double v) const {
  const Vec3 dir =
      ray_through(camera, unproject(camera, {u, v, 1.0})).direction;
  Tensor x(1, 3);
  x.v = {dir.x, dir.y, dir.z};
  return value_mlp(x, params_[find("pe_w1")].value, params_[find("pe_b1")].value,
                   params_[find("pe_w2")].value, params_[find("pe_b2")].value);
}

ForwardNodes ToyModel::forward(Tape& tape, const std::vector<CameraModel>& rig,
                               const std::vector<FeatureToken>& tokens,
                               const std::vector<RayQueryGroup>& groups) const {
  if (rig.empty()) throw ShapeError("forward: empty camera rig");
  if (tokens.empty()) throw ShapeError("forward: no feature tokens");
  const std::size_t e = cfg_.embed_dim;
  const std::size_t heads = cfg_.n_heads;
  const std::size_t dh = e / heads;
  const std::size_t tok_dim = token_content_dim(cfg_.n_classes);

  ForwardNodes out;
  out.n_obj = cfg_.n_obj_queries;
  std::vector<std::size_t> group_sizes;
  for (const auto& g : groups) {
    group_sizes.push_back(g.ref_points.size());
    out.n_ray += g.ref_points.size();
  }
  const std::size_t n_q = out.n_ray + out.n_obj;

  // Parameter leaves, recorded so the trainer can read gradients back.
  std::vector<Tape::NodeId> pn(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    pn[i] = tape.leaf(params_[i].value, true);
    out.param_leaves.emplace_back(i, pn[i]);
  }
  auto P = [&](const char* name) { return pn[find(name)]; };

  auto linear = [&](Tape::NodeId x, Tape::NodeId w, Tape::NodeId b) {
    return tape.add_rowvec(tape.matmul(x, w), b);
  };
  auto mlp = [&](Tape::NodeId x, const char* w1, const char* b1, const char* w2,
                 const char* b2) {
    return linear(tape.tanh_op(linear(x, P(w1), P(b1))), P(w2), P(b2));
  };

  // Reference points, normalized: ray points are constants, object refs are
  // sigmoid of a learnable raw tensor.
  Tape::NodeId ref_all;
  Tape::NodeId obj_ref = tape.sigmoid_op(P("obj_ref_raw"));
  if (out.n_ray > 0) {
    Tensor ray_refs(out.n_ray, 3);
    std::size_t r = 0;
    for (const auto& g : groups)
      for (const auto& pt : g.ref_points) {
        const auto n = normalize_point(pt);
        ray_refs.at(r, 0) = n[0];
        ray_refs.at(r, 1) = n[1];
        ray_refs.at(r, 2) = n[2];
        ++r;
      }
    ref_all = tape.concat_rows({tape.leaf(std::move(ray_refs), false), obj_ref});
  } else {
    ref_all = obj_ref;
  }

  // Every query also carries a camera-set direction identity: the unit
  // directions from each camera center to the query's world point, run
  // through the same direction encoder the tokens use and averaged. A query
  // whose point sits at the correct depth lines up with its object's tokens
  // in several cameras at once, which makes cross-camera consistency — the
  // only depth cue available from depth-blind tokens — directly attendable.
  // Ray queries use their actual reference points; object queries use fixed
  // anchors so their rows stay independent of the ray groups.
  const std::size_t n_cam = rig.size();
  Tensor q_cam_dirs(n_q * n_cam, 3);
  {
    std::vector<Vec3> pts;
    pts.reserve(n_q);
    for (const auto& g : groups)
      for (const auto& pt : g.ref_points) pts.push_back(pt);
    const std::vector<Vec3> anchors = object_anchor_points(cfg_);
    pts.insert(pts.end(), anchors.begin(), anchors.end());
    for (std::size_t q = 0; q < n_q; ++q)
      for (std::size_t c = 0; c < n_cam; ++c) {
        const Vec3 d = pts[q] - rig[c].optical_center();
        const double len = d.norm();
        const Vec3 u = len > 0.0 ? d * (1.0 / len) : Vec3{1.0, 0.0, 0.0};
        q_cam_dirs.at(q * n_cam + c, 0) = u.x;
        q_cam_dirs.at(q * n_cam + c, 1) = u.y;
        q_cam_dirs.at(q * n_cam + c, 2) = u.z;
      }
  }

  // Token side: content projection plus learned ray-direction embedding.
  // Background cells (all-zero content) carry no signal; dropping them cuts
  // cross-attention cost by roughly the grid sparsity without changing what
  // differs between scenes. The kept set is a pure function of token content.
  std::vector<std::size_t> kept;
  kept.reserve(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t].content.size() != tok_dim)
      throw ShapeError("forward: token content dim mismatch");
    for (double c : tokens[t].content)
      if (c != 0.0) {
        kept.push_back(t);
        break;
      }
  }
  if (kept.empty())  // empty scene: give cross-attention something to read
    for (std::size_t t = 0; t < tokens.size(); ++t) kept.push_back(t);

  Tensor content(kept.size(), tok_dim);
  Tensor dirs(kept.size(), 3);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const FeatureToken& tok = tokens[kept[r]];
    for (std::size_t c = 0; c < tok_dim; ++c) content.at(r, c) = tok.content[c];
    dirs.at(r, 0) = tok.direction.x;
    dirs.at(r, 1) = tok.direction.y;
    dirs.at(r, 2) = tok.direction.z;
  }
  // Fixed angular projection prior for cross-attention: a token from camera
  // c is favored by how closely its ray matches the direction from c to the
  // query's point. Pure geometry of unit directions — depth never enters the
  // tokens — yet parallax makes the prior depth-sensitive: only a correctly
  // placed query lines up with its object's tokens in every camera at once.
  Tape::NodeId cross_bias = 0;
  const bool use_bias = cfg_.angular_prior > 0.0;
  if (use_bias) {
    Tensor bias(n_q, kept.size());
    for (std::size_t t = 0; t < kept.size(); ++t) {
      const FeatureToken& tok = tokens[kept[t]];
      if (tok.camera_index >= n_cam)
        throw ShapeError("forward: token camera_index outside rig");
      for (std::size_t q = 0; q < n_q; ++q) {
        const std::size_t r = q * n_cam + tok.camera_index;
        const double dot = q_cam_dirs.at(r, 0) * tok.direction.x +
                           q_cam_dirs.at(r, 1) * tok.direction.y +
                           q_cam_dirs.at(r, 2) * tok.direction.z;
        bias.at(q, t) = cfg_.angular_prior * (dot - 1.0);
      }
    }
    cross_bias = tape.leaf(std::move(bias), false);
  }

  Tape::NodeId content_n = tape.leaf(std::move(content), false);
  Tape::NodeId dirs_n = tape.leaf(std::move(dirs), false);
  Tape::NodeId tok_base = linear(content_n, P("tok_w"), P("tok_b"));
  Tape::NodeId pe = mlp(dirs_n, "pe_w1", "pe_b1", "pe_w2", "pe_b2");
  Tape::NodeId keys_base = tape.add(tok_base, pe);
  // Values carry the direction embedding too: the only positional signal a
  // query can read out is the parallax between attended token rays, so the
  // readout must include direction, not just content.
  Tape::NodeId values_base = keys_base;

  // Initial query features: point embedding of the reference plus the mean
  // over cameras of the direction embeddings, via a constant selection
  // matrix so the direction MLP stays on-tape for gradients.
  Tensor cam_mean(n_q, n_q * n_cam);
  for (std::size_t q = 0; q < n_q; ++q)
    for (std::size_t c = 0; c < n_cam; ++c)
      cam_mean.at(q, q * n_cam + c) = 1.0 / static_cast<double>(n_cam);
  Tape::NodeId pe_q = tape.matmul(
      tape.leaf(std::move(cam_mean), false),
      mlp(tape.leaf(std::move(q_cam_dirs), false), "pe_w1", "pe_b1", "pe_w2",
          "pe_b2"));
  Tape::NodeId x = tape.add(
      mlp(ref_all, "point_w1", "point_b1", "point_w2", "point_b2"), pe_q);
  out.x0 = x;

  const AttentionMask mask = build_attention_mask(out.n_obj, group_sizes);
  std::vector<char> blocked;
  if (out.n_ray > 0) {
    blocked.resize(n_q * n_q);
    for (std::size_t r = 0; r < n_q; ++r)
      for (std::size_t c = 0; c < n_q; ++c)
        blocked[r * n_q + c] = mask.blocked(r, c) ? 1 : 0;
  }

  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  auto attention = [&](Tape::NodeId q, Tape::NodeId k, Tape::NodeId v,
                       const std::vector<char>& blk, Tape::NodeId bias,
                       bool with_bias) {
    std::vector<Tape::NodeId> head_outs;
    for (std::size_t h = 0; h < heads; ++h) {
      Tape::NodeId qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
      Tape::NodeId kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
      Tape::NodeId vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
      Tape::NodeId scores = tape.scale(tape.matmul_nt(qh, kh), inv_sqrt_dh);
      if (with_bias) scores = tape.add(scores, bias);
      Tape::NodeId probs = tape.masked_softmax_rows(scores, blk);
      head_outs.push_back(tape.matmul(probs, vh));
    }
    return heads == 1 ? head_outs[0] : tape.concat_cols(head_outs);
  };

  const std::vector<char> no_mask;
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + "_";
    auto PP = [&](const char* suffix) { return pn[find(p + suffix)]; };

    Tape::NodeId h1 = tape.layernorm_rows(x, PP("ln1_g"), PP("ln1_b"));
    Tape::NodeId sa = attention(
        linear(h1, PP("self_wq"), PP("self_bq")),
        linear(h1, PP("self_wk"), PP("self_bk")),
        linear(h1, PP("self_wv"), PP("self_bv")), blocked, 0, false);
    x = tape.add(x, linear(sa, PP("self_wo"), PP("self_bo")));

    Tape::NodeId h2 = tape.layernorm_rows(x, PP("ln2_g"), PP("ln2_b"));
    Tape::NodeId ca = attention(
        linear(h2, PP("cross_wq"), PP("cross_bq")),
        linear(keys_base, PP("cross_wk"), PP("cross_bk")),
        linear(values_base, PP("cross_wv"), PP("cross_bv")), no_mask,
        cross_bias, use_bias);
    x = tape.add(x, linear(ca, PP("cross_wo"), PP("cross_bo")));

    Tape::NodeId h3 = tape.layernorm_rows(x, PP("ln3_g"), PP("ln3_b"));
    Tape::NodeId ff = linear(tape.tanh_op(linear(h3, PP("ffn_w1"), PP("ffn_b1"))),
                             PP("ffn_w2"), PP("ffn_b2"));
    x = tape.add(x, ff);
  }

  x = tape.layernorm_rows(x, P("final_ln_g"), P("final_ln_b"));
  out.class_logits = mlp(x, "cls_w1", "cls_b1", "cls_w2", "cls_b2");
  Tape::NodeId box_raw = mlp(x, "box_w1", "box_b1", "box_w2", "box_b2");

  // Center = reference point + predicted offset, in normalized coordinates.
  Tape::NodeId center = tape.add(tape.slice_cols(box_raw, 0, 3), ref_all);
  out.box_pred = tape.concat_cols({center, tape.slice_cols(box_raw, 3, 8)});
  return out;
}

HeadOutput ToyModel::infer_heads(const std::vector<CameraModel>& rig,
                                 const std::vector<FeatureToken>& tokens) const {
  Tape tape;
  ForwardNodes fwd = forward(tape, rig, tokens, {});
  HeadOutput out;
  out.class_logits = tape.value(fwd.class_logits);
  const Tensor& raw = tape.value(fwd.box_pred);
  out.box = Tensor(raw.rows, 8);
  for (std::size_t q = 0; q < raw.rows; ++q) {
    const Vec3 c = denormalize_point({raw.at(q, 0), raw.at(q, 1), raw.at(q, 2)});
    out.box.at(q, 0) = c.x;
    out.box.at(q, 1) = c.y;
    out.box.at(q, 2) = c.z;
    out.box.at(q, 3) = std::exp(raw.at(q, 3));
    out.box.at(q, 4) = std::exp(raw.at(q, 4));
    out.box.at(q, 5) = std::exp(raw.at(q, 5));
    out.box.at(q, 6) = raw.at(q, 6);
    out.box.at(q, 7) = raw.at(q, 7);
  }
  return out;
}

std::vector<Detection> ToyModel::infer(const Scene& scene,
                                       const std::vector<FeatureToken>& tokens,
                                       double score_floor) const {
  HeadOutput heads = infer_heads(scene.rig, tokens);
  std::vector<Detection> dets;
  for (std::size_t q = 0; q < heads.class_logits.rows; ++q) {
    std::size_t best = 0;
    double best_logit = heads.class_logits.at(q, 0);
    for (std::size_t c = 1; c < cfg_.n_classes; ++c) {
      if (heads.class_logits.at(q, c) > best_logit) {
        best_logit = heads.class_logits.at(q, c);
        best = c;
      }
    }
    const double score = 1.0 / (1.0 + std::exp(-best_logit));
    if (score < score_floor) continue;
    Detection d;
    d.scene_id = scene.scene_id;
    d.class_id = static_cast<std::int32_t>(best);
    d.center = {heads.box.at(q, 0), heads.box.at(q, 1), heads.box.at(q, 2)};
    d.w = heads.box.at(q, 3);
    d.h = heads.box.at(q, 4);
    d.l = heads.box.at(q, 5);
    d.yaw = std::atan2(heads.box.at(q, 6), heads.box.at(q, 7));
    d.score = score;
    dets.push_back(std::move(d));
  }
  return dets;
}

void ToyModel::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(kMagic, 4);
  const std::uint32_t ver = kFormatVersion;
  const std::uint64_t hash = config_hash();
  const std::uint64_t count = param_scalar_count();
  f.write(reinterpret_cast<const char*>(&ver), sizeof ver);
  f.write(reinterpret_cast<const char*>(&hash), sizeof hash);
  f.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& p : params_)
    f.write(reinterpret_cast<const char*>(p.value.v.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  if (!f) throw IoError("write failed: " + path);
}

ToyModel ToyModel::load(const std::string& path, const DecoderConfig& cfg) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open model file: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw VersionError("bad model magic: " + path);
  std::uint32_t ver = 0;
  std::uint64_t hash = 0, count = 0;
  f.read(reinterpret_cast<char*>(&ver), sizeof ver);
  f.read(reinterpret_cast<char*>(&hash), sizeof hash);
  f.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!f || ver != kFormatVersion)
    throw VersionError("unsupported model format version");
  if (hash != raydn::config_hash(cfg))
    throw VersionError("model/config hash mismatch");

  SeededRng dummy(0);
  ToyModel model(cfg, dummy);
  if (count != model.param_scalar_count())
    throw VersionError("model parameter count mismatch");
  for (auto& p : model.params_) {
    f.read(reinterpret_cast<char*>(p.value.v.data()),
           static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!f) throw VersionError("model file truncated: " + path);
  return model;
}

}  // namespace raydn
