// SPDX-License-Identifier: Apache-2.0
#include "raydn/train.hpp"

#include <algorithm>
#include <cmath>

#include "raydn/error.hpp"

namespace raydn {
namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

void validate(const TrainParams& tp) {
  if (tp.steps == 0) throw DomainError("steps must be >= 1");
  if (tp.batch_size == 0) throw DomainError("batch_size must be >= 1");
  if (!(tp.lr > 0.0)) throw DomainError("lr must be > 0");
  if (!(tp.weight_decay >= 0.0)) throw DomainError("weight_decay must be >= 0");
  if (!(tp.focal_gamma >= 0.0)) throw DomainError("focal_gamma must be >= 0");
  if (!(tp.focal_alpha > 0.0 && tp.focal_alpha < 1.0))
    throw DomainError("focal_alpha must be in (0,1)");
  if (!(tp.w_cls >= 0.0 && tp.w_box >= 0.0 && tp.w_denoise >= 0.0 &&
        tp.match_box_cost >= 0.0))
    throw DomainError("loss weights must be >= 0");
}

std::vector<double> box_target(const ToyModel& model, const GroundTruthBox& box) {
  const auto n = model.normalize_point(box.center);
  return {n[0],          n[1],          n[2],
          std::log(box.w), std::log(box.h), std::log(box.l),
          std::sin(box.yaw), std::cos(box.yaw)};
}

MatchResult match_objects(const Tape& tape, const ForwardNodes& fwd,
                          const ToyModel& model, const Scene& scene,
                          const TrainParams& tp) {
  const std::size_t n_obj = fwd.n_obj;
  const std::size_t n_gt = scene.boxes.size();
  const Tensor& logits = tape.value(fwd.class_logits);
  const Tensor& box = tape.value(fwd.box_pred);

  CostMatrix cost;
  cost.n_query = n_obj;
  cost.n_gt = n_gt;
  cost.cost.resize(n_obj * n_gt);
  std::vector<std::vector<double>> targets;
  targets.reserve(n_gt);
  for (const auto& b : scene.boxes) targets.push_back(box_target(model, b));

  const double g = tp.focal_gamma, a = tp.focal_alpha;
  for (std::size_t q = 0; q < n_obj; ++q) {
    const std::size_t row = fwd.n_ray + q;
    for (std::size_t t = 0; t < n_gt; ++t) {
      const auto cls = static_cast<std::size_t>(scene.boxes[t].class_id);
      const double x = logits.at(row, cls);
      const double p = stable_sigmoid(x);
      const double pos = a * std::pow(1.0 - p, g) * softplus(-x);
      const double neg = (1.0 - a) * std::pow(p, g) * softplus(x);
      double l1 = 0.0;
      for (std::size_t k = 0; k < 8; ++k)
        l1 += std::abs(box.at(row, k) - targets[t][k]);
      const double c = (pos - neg) + tp.match_box_cost * l1;
      if (!std::isfinite(c))
        throw NumericError("match_objects: non-finite matching cost");
      cost.cost[q * n_gt + t] = c;
    }
  }
  return hungarian_match(cost);
}

LossNodes build_loss(Tape& tape, const ForwardNodes& fwd, const ToyModel& model,
                     const Scene& scene, const std::vector<RayQueryGroup>& groups,
                     const TrainParams& tp) {
  const std::size_t n_ray = fwd.n_ray;
  const std::size_t n_obj = fwd.n_obj;
  const std::size_t n_q = n_ray + n_obj;
  const std::size_t n_cls = model.config().n_classes;

  LossNodes out;

  // --- matching loss over object queries ---
  const MatchResult match = match_objects(tape, fwd, model, scene, tp);
  Tape::NodeId obj_logits = tape.slice_rows(fwd.class_logits, n_ray, n_q);
  Tape::NodeId obj_box = tape.slice_rows(fwd.box_pred, n_ray, n_q);

  Tensor cls_targets(n_obj, n_cls);
  for (const auto& [q, t] : match.pairs)
    cls_targets.at(q, static_cast<std::size_t>(scene.boxes[t].class_id)) = 1.0;
  const double inv_pos = 1.0 / std::max<std::size_t>(1, match.pairs.size());
  Tape::NodeId focal_m = tape.focal_loss(obj_logits, std::move(cls_targets),
                                         tp.focal_gamma, tp.focal_alpha, inv_pos);
  out.matching = tape.scale(focal_m, tp.w_cls);

  if (!match.pairs.empty()) {
    std::vector<std::size_t> rows;
    Tensor box_targets(match.pairs.size(), 8);
    std::size_t r = 0;
    for (const auto& [q, t] : match.pairs) {
      rows.push_back(q);
      const auto tgt = box_target(model, scene.boxes[t]);
      for (std::size_t k = 0; k < 8; ++k) box_targets.at(r, k) = tgt[k];
      ++r;
    }
    Tape::NodeId matched = tape.gather_rows(obj_box, std::move(rows));
    Tensor ones(match.pairs.size(), 8, 1.0);
    Tape::NodeId l1_m = tape.l1_to_const(matched, std::move(box_targets),
                                         std::move(ones), inv_pos);
    out.matching = tape.add(out.matching, tape.scale(l1_m, tp.w_box));
  }
  out.total = out.matching;

  // --- denoising loss over ray queries ---
  if (n_ray > 0) {
    Tape::NodeId dn_logits = tape.slice_rows(fwd.class_logits, 0, n_ray);
    Tape::NodeId dn_box = tape.slice_rows(fwd.box_pred, 0, n_ray);

    Tensor dn_cls(n_ray, n_cls);
    Tensor dn_tgt(n_ray, 8);
    std::size_t r = 0;
    for (const auto& g : groups) {
      const auto tgt = box_target(model, g.target);
      for (std::size_t i = 0; i < g.ref_points.size(); ++i, ++r) {
        if (g.positive[i])
          dn_cls.at(r, static_cast<std::size_t>(g.target.class_id)) = 1.0;
        for (std::size_t k = 0; k < 8; ++k) dn_tgt.at(r, k) = tgt[k];
      }
    }
    const double inv_grp = 1.0 / std::max<std::size_t>(1, groups.size());
    Tape::NodeId focal_dn = tape.focal_loss(dn_logits, std::move(dn_cls),
                                            tp.focal_gamma, tp.focal_alpha, inv_grp);
    Tensor ones(n_ray, 8, 1.0);
    Tape::NodeId l1_dn = tape.l1_to_const(dn_box, std::move(dn_tgt),
                                          std::move(ones), 1.0 / n_ray);
    out.denoising = tape.add(tape.scale(focal_dn, tp.w_cls),
                             tape.scale(l1_dn, tp.w_box));
    out.has_denoising = true;
    out.total = tape.add(out.matching, tape.scale(out.denoising, tp.w_denoise));
  }
  return out;
}

AdamW::AdamW(const ToyModel& model, double lr, double weight_decay)
    : lr_(lr), wd_(weight_decay) {
  for (const auto& p : model.params()) {
    m_.emplace_back(p.value.rows, p.value.cols);
    v_.emplace_back(p.value.rows, p.value.cols);
  }
}

void AdamW::step(ToyModel& model, const std::vector<Tensor>& grads) {
  auto& params = model.params();
  if (grads.size() != params.size())
    throw ShapeError("AdamW::step: gradient count mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& th = params[i].value;
    const Tensor& g = grads[i];
    if (!g.same_shape(th)) throw ShapeError("AdamW::step: gradient shape mismatch");
    for (std::size_t j = 0; j < th.size(); ++j) {
      m_[i].v[j] = beta1_ * m_[i].v[j] + (1.0 - beta1_) * g.v[j];
      v_[i].v[j] = beta2_ * v_[i].v[j] + (1.0 - beta2_) * g.v[j] * g.v[j];
      const double mhat = m_[i].v[j] / bc1;
      const double vhat = v_[i].v[j] / bc2;
      th.v[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * th.v[j]);
    }
  }
}

LossBreakdown train_step(ToyModel& model, AdamW& opt,
                         const std::vector<SceneExample>& batch,
                         const TrainParams& tp) {
  if (batch.empty()) throw DomainError("train_step: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<Tensor> acc;
  for (const auto& p : model.params()) acc.emplace_back(p.value.rows, p.value.cols);

  LossBreakdown lb;
  for (const auto& ex : batch) {
    Tape tape;
    ForwardNodes fwd = model.forward(tape, ex.scene->rig, *ex.tokens, ex.groups);
    LossNodes loss = build_loss(tape, fwd, model, *ex.scene, ex.groups, tp);
    const double total = tape.value(loss.total).v[0];
    if (!std::isfinite(total))
      throw NumericError("train_step: non-finite loss");
    lb.total += total * inv_b;
    lb.matching += tape.value(loss.matching).v[0] * inv_b;
    if (loss.has_denoising) lb.denoising += tape.value(loss.denoising).v[0] * inv_b;

    tape.backward(loss.total);
    for (const auto& [pi, node] : fwd.param_leaves) {
      const Tensor& g = tape.grad(node);
      if (g.v.empty()) continue;
      for (std::size_t j = 0; j < g.size(); ++j) acc[pi].v[j] += g.v[j] * inv_b;
    }
  }
  opt.step(model, acc);
  return lb;
}

double gradient_check(ToyModel& model, const SceneExample& example,
                      const TrainParams& tp, double epsilon,
                      std::size_t max_coords) {
  if (!(epsilon >= 1e-6 && epsilon <= 1e-3))
    throw DomainError("gradient_check: epsilon outside [1e-6, 1e-3]");

  auto loss_value = [&]() {
    Tape tape;
    ForwardNodes fwd = model.forward(tape, example.scene->rig,
                                     *example.tokens, example.groups);
    LossNodes loss = build_loss(tape, fwd, model, *example.scene, example.groups, tp);
    return tape.value(loss.total).v[0];
  };

  Tape tape;
  ForwardNodes fwd = model.forward(tape, example.scene->rig, *example.tokens,
                                   example.groups);
  LossNodes loss = build_loss(tape, fwd, model, *example.scene, example.groups, tp);
  tape.backward(loss.total);
  std::vector<Tensor> analytic(model.params().size());
  for (const auto& [pi, node] : fwd.param_leaves) analytic[pi] = tape.grad(node);

  double max_rel = 0.0;
  auto& params = model.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& th = params[i].value;
    const std::size_t stride = std::max<std::size_t>(1, th.size() / max_coords);
    for (std::size_t j = 0; j < th.size(); j += stride) {
      const double keep = th.v[j];
      th.v[j] = keep + epsilon;
      const double lp = loss_value();
      th.v[j] = keep - epsilon;
      const double lm = loss_value();
      th.v[j] = keep;
      const double fd = (lp - lm) / (2.0 * epsilon);
      const double ad = analytic[i].v.empty() ? 0.0 : analytic[i].v[j];
      const double rel =
          std::abs(ad - fd) / std::max({1e-4, std::abs(ad), std::abs(fd)});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace raydn
