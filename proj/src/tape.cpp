// SPDX-License-Identifier: Apache-2.0
#include "raydn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raydn {
namespace {

// Cache-friendly C += A * B with optional transposes handled by the callers.
void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[i * a.cols];
    double* crow = &c.v[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.v[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

// C += A * B^T
void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[i * a.cols];
    double* crow = &c.v[i * c.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.v[j * b.cols];
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

// C += A^T * B
void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.v[k * a.cols];
    const double* brow = &b.v[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c.v[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow at either tail.
double log_sigmoid(double x) {
  return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

}  // namespace

Tape::NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor& Tape::grad_buf(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.v.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

const Tensor& Tape::grad(NodeId id) const {
  const Node& n = nodes_[id];
  if (n.grad.v.empty()) {
    static const Tensor kEmpty;
    return kEmpty;
  }
  return n.grad;
}

Tape::NodeId Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (!ta.same_shape(tb)) throw ShapeError("add: shape mismatch");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.v[i] += tb.v[i];
  return push(std::move(n));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (!ta.same_shape(tb)) throw ShapeError("sub: shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.v[i] -= tb.v[i];
  return push(std::move(n));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (!ta.same_shape(tb)) throw ShapeError("mul: shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = ta;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value.v[i] *= tb.v[i];
  return push(std::move(n));
}

Tape::NodeId Tape::scale(NodeId a, double s) {
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.s0 = s;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = nodes_[a].value;
  for (double& x : n.value.v) x *= s;
  return push(std::move(n));
}

Tape::NodeId Tape::add_rowvec(NodeId a, NodeId row) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tr = nodes_[row].value;
  if (tr.rows != 1 || tr.cols != ta.cols)
    throw ShapeError("add_rowvec: row must be (1, cols)");
  Node n;
  n.op = Op::kAddRowVec;
  n.a = a;
  n.b = row;
  n.needs_grad = nodes_[a].needs_grad || nodes_[row].needs_grad;
  n.value = ta;
  for (std::size_t r = 0; r < ta.rows; ++r)
    for (std::size_t c = 0; c < ta.cols; ++c) n.value.at(r, c) += tr.v[c];
  return push(std::move(n));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.cols != tb.rows) throw ShapeError("matmul: inner dims differ");
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Tensor(ta.rows, tb.cols);
  gemm_acc(ta, tb, n.value);
  return push(std::move(n));
}

Tape::NodeId Tape::matmul_nt(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.cols != tb.cols) throw ShapeError("matmul_nt: inner dims differ");
  Node n;
  n.op = Op::kMatmulNT;
  n.a = a;
  n.b = b;
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  n.value = Tensor(ta.rows, tb.rows);
  gemm_nt_acc(ta, tb, n.value);
  return push(std::move(n));
}

Tape::NodeId Tape::tanh_op(NodeId a) {
  Node n;
  n.op = Op::kTanh;
  n.a = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = nodes_[a].value;
  for (double& x : n.value.v) x = std::tanh(x);
  return push(std::move(n));
}

Tape::NodeId Tape::sigmoid_op(NodeId a) {
  Node n;
  n.op = Op::kSigmoid;
  n.a = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = nodes_[a].value;
  for (double& x : n.value.v) x = stable_sigmoid(x);
  return push(std::move(n));
}

Tape::NodeId Tape::concat_rows(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  const std::size_t cols = nodes_[parts[0]].value.cols;
  std::size_t rows = 0;
  bool needs = false;
  for (NodeId p : parts) {
    if (nodes_[p].value.cols != cols) throw ShapeError("concat_rows: cols differ");
    rows += nodes_[p].value.rows;
    needs = needs || nodes_[p].needs_grad;
  }
  Node n;
  n.op = Op::kConcatRows;
  n.many = parts;
  n.needs_grad = needs;
  n.value = Tensor(rows, cols);
  std::size_t at = 0;
  for (NodeId p : parts) {
    const Tensor& t = nodes_[p].value;
    std::copy(t.v.begin(), t.v.end(), n.value.v.begin() + static_cast<long>(at));
    at += t.size();
  }
  return push(std::move(n));
}

Tape::NodeId Tape::concat_cols(const std::vector<NodeId>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  const std::size_t rows = nodes_[parts[0]].value.rows;
  std::size_t cols = 0;
  bool needs = false;
  for (NodeId p : parts) {
    if (nodes_[p].value.rows != rows) throw ShapeError("concat_cols: rows differ");
    cols += nodes_[p].value.cols;
    needs = needs || nodes_[p].needs_grad;
  }
  Node n;
  n.op = Op::kConcatCols;
  n.many = parts;
  n.needs_grad = needs;
  n.value = Tensor(rows, cols);
  std::size_t c0 = 0;
  for (NodeId p : parts) {
    const Tensor& t = nodes_[p].value;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < t.cols; ++c) n.value.at(r, c0 + c) = t.at(r, c);
    c0 += t.cols;
  }
  return push(std::move(n));
}

Tape::NodeId Tape::slice_rows(NodeId a, std::size_t r0, std::size_t r1) {
  const Tensor& ta = nodes_[a].value;
  if (r0 > r1 || r1 > ta.rows) throw ShapeError("slice_rows: bad range");
  Node n;
  n.op = Op::kSliceRows;
  n.a = a;
  n.idx = {r0, r1};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Tensor(r1 - r0, ta.cols);
  std::copy(ta.v.begin() + static_cast<long>(r0 * ta.cols),
            ta.v.begin() + static_cast<long>(r1 * ta.cols), n.value.v.begin());
  return push(std::move(n));
}

Tape::NodeId Tape::slice_cols(NodeId a, std::size_t c0, std::size_t c1) {
  const Tensor& ta = nodes_[a].value;
  if (c0 > c1 || c1 > ta.cols) throw ShapeError("slice_cols: bad range");
  Node n;
  n.op = Op::kSliceCols;
  n.a = a;
  n.idx = {c0, c1};
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Tensor(ta.rows, c1 - c0);
  for (std::size_t r = 0; r < ta.rows; ++r)
    for (std::size_t c = c0; c < c1; ++c) n.value.at(r, c - c0) = ta.at(r, c);
  return push(std::move(n));
}

Tape::NodeId Tape::gather_rows(NodeId a, std::vector<std::size_t> indices) {
  const Tensor& ta = nodes_[a].value;
  for (std::size_t i : indices)
    if (i >= ta.rows) throw ShapeError("gather_rows: index out of range");
  Node n;
  n.op = Op::kGatherRows;
  n.a = a;
  n.needs_grad = nodes_[a].needs_grad;
  n.value = Tensor(indices.size(), ta.cols);
  for (std::size_t r = 0; r < indices.size(); ++r)
    for (std::size_t c = 0; c < ta.cols; ++c)
      n.value.at(r, c) = ta.at(indices[r], c);
  n.idx = std::move(indices);
  return push(std::move(n));
}

Tape::NodeId Tape::masked_softmax_rows(NodeId scores, std::vector<char> blocked) {
  const Tensor& ts = nodes_[scores].value;
  if (!blocked.empty() && blocked.size() != ts.size())
    throw ShapeError("masked_softmax_rows: mask size mismatch");
  Node n;
  n.op = Op::kMaskedSoftmax;
  n.a = scores;
  n.needs_grad = nodes_[scores].needs_grad;
  n.value = Tensor(ts.rows, ts.cols);
  const bool has_mask = !blocked.empty();
  for (std::size_t r = 0; r < ts.rows; ++r) {
    const std::size_t base = r * ts.cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ts.cols; ++c) {
      if (has_mask && blocked[base + c]) continue;
      mx = std::max(mx, ts.v[base + c]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) continue;  // row all blocked -> zeros
    double sum = 0.0;
    for (std::size_t c = 0; c < ts.cols; ++c) {
      if (has_mask && blocked[base + c]) continue;
      const double e = std::exp(ts.v[base + c] - mx);
      n.value.v[base + c] = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t c = 0; c < ts.cols; ++c) {
      if (has_mask && blocked[base + c]) continue;
      n.value.v[base + c] *= inv;
    }
  }
  n.mask = std::move(blocked);
  return push(std::move(n));
}

Tape::NodeId Tape::layernorm_rows(NodeId x, NodeId gamma, NodeId beta, double eps) {
  const Tensor& tx = nodes_[x].value;
  const Tensor& tg = nodes_[gamma].value;
  const Tensor& tb = nodes_[beta].value;
  if (tg.rows != 1 || tg.cols != tx.cols || tb.rows != 1 || tb.cols != tx.cols)
    throw ShapeError("layernorm_rows: gamma/beta must be (1, cols)");
  Node n;
  n.op = Op::kLayerNorm;
  n.a = x;
  n.b = gamma;
  n.c = beta;
  n.s0 = eps;
  n.needs_grad =
      nodes_[x].needs_grad || nodes_[gamma].needs_grad || nodes_[beta].needs_grad;
  n.value = Tensor(tx.rows, tx.cols);
  n.aux0 = Tensor(tx.rows, tx.cols);  // xhat
  n.aux1 = Tensor(tx.rows, 1);        // 1/sigma per row
  const double m = static_cast<double>(tx.cols);
  for (std::size_t r = 0; r < tx.rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < tx.cols; ++c) mean += tx.at(r, c);
    mean /= m;
    double var = 0.0;
    for (std::size_t c = 0; c < tx.cols; ++c) {
      const double d = tx.at(r, c) - mean;
      var += d * d;
    }
    var /= m;
    const double inv_sigma = 1.0 / std::sqrt(var + eps);
    n.aux1.v[r] = inv_sigma;
    for (std::size_t c = 0; c < tx.cols; ++c) {
      const double xhat = (tx.at(r, c) - mean) * inv_sigma;
      n.aux0.at(r, c) = xhat;
      n.value.at(r, c) = xhat * tg.v[c] + tb.v[c];
    }
  }
  return push(std::move(n));
}

Tape::NodeId Tape::sum_all(NodeId a) {
  Node n;
  n.op = Op::kSumAll;
  n.a = a;
  n.needs_grad = nodes_[a].needs_grad;
  double s = 0.0;
  for (double x : nodes_[a].value.v) s += x;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

Tape::NodeId Tape::focal_loss(NodeId logits, Tensor targets, double gamma,
                              double alpha, double inv_norm) {
  const Tensor& tl = nodes_[logits].value;
  if (!tl.same_shape(targets)) throw ShapeError("focal_loss: target shape mismatch");
  Node n;
  n.op = Op::kFocal;
  n.a = logits;
  n.s0 = gamma;
  n.s1 = alpha;
  n.s2 = inv_norm;
  n.needs_grad = nodes_[logits].needs_grad;
  double loss = 0.0;
  for (std::size_t i = 0; i < tl.size(); ++i) {
    const double x = tl.v[i];
    const double logp = log_sigmoid(x);
    const double log1mp = log_sigmoid(-x);
    const double p = stable_sigmoid(x);
    if (targets.v[i] > 0.5) {
      loss += -alpha * std::pow(1.0 - p, gamma) * logp;
    } else {
      loss += -(1.0 - alpha) * std::pow(p, gamma) * log1mp;
    }
  }
  n.value = Tensor::scalar(loss * inv_norm);
  n.aux0 = std::move(targets);
  return push(std::move(n));
}

Tape::NodeId Tape::l1_to_const(NodeId x, Tensor target, Tensor weight,
                               double inv_norm) {
  const Tensor& tx = nodes_[x].value;
  if (!tx.same_shape(target) || !tx.same_shape(weight))
    throw ShapeError("l1_to_const: shape mismatch");
  Node n;
  n.op = Op::kL1Const;
  n.a = x;
  n.s2 = inv_norm;
  n.needs_grad = nodes_[x].needs_grad;
  double loss = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i)
    loss += weight.v[i] * std::abs(tx.v[i] - target.v[i]);
  n.value = Tensor::scalar(loss * inv_norm);
  n.aux0 = std::move(target);
  n.aux1 = std::move(weight);
  return push(std::move(n));
}

void Tape::backward(NodeId root) {
  Node& r = nodes_[root];
  if (r.value.rows != 1 || r.value.cols != 1)
    throw ShapeError("backward: root must be scalar");
  grad_buf(root).v[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[static_cast<NodeId>(i)];
    if (!n.needs_grad || n.grad.v.empty() || n.op == Op::kLeaf) continue;
    backward_node(n);
  }
}

void Tape::backward_node(Node& n) {
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kAdd: {
      if (nodes_[n.a].needs_grad) {
        Tensor& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[n.b].needs_grad) {
        Tensor& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i];
      }
      break;
    }
    case Op::kSub: {
      if (nodes_[n.a].needs_grad) {
        Tensor& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[n.b].needs_grad) {
        Tensor& gb = grad_buf(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] -= g.v[i];
      }
      break;
    }
    case Op::kMul: {
      if (nodes_[n.a].needs_grad) {
        Tensor& ga = grad_buf(n.a);
        const Tensor& vb = nodes_[n.b].value;
        for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * vb.v[i];
      }
      if (nodes_[n.b].needs_grad) {
        Tensor& gb = grad_buf(n.b);
        const Tensor& va = nodes_[n.a].value;
        for (std::size_t i = 0; i < g.size(); ++i) gb.v[i] += g.v[i] * va.v[i];
      }
      break;
    }
    case Op::kScale: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * n.s0;
      break;
    }
    case Op::kAddRowVec: {
      if (nodes_[n.a].needs_grad) {
        Tensor& ga = grad_buf(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga.v[i] += g.v[i];
      }
      if (nodes_[n.b].needs_grad) {
        Tensor& gr = grad_buf(n.b);
        for (std::size_t r = 0; r < g.rows; ++r)
          for (std::size_t c = 0; c < g.cols; ++c) gr.v[c] += g.at(r, c);
      }
      break;
    }
    case Op::kMatmul: {
      // C = A B: dA += g B^T, dB += A^T g
      if (nodes_[n.a].needs_grad) gemm_nt_acc(g, nodes_[n.b].value, grad_buf(n.a));
      if (nodes_[n.b].needs_grad) gemm_tn_acc(nodes_[n.a].value, g, grad_buf(n.b));
      break;
    }
    case Op::kMatmulNT: {
      // C = A B^T: dA += g B, dB += g^T A
      if (nodes_[n.a].needs_grad) gemm_acc(g, nodes_[n.b].value, grad_buf(n.a));
      if (nodes_[n.b].needs_grad) gemm_tn_acc(g, nodes_[n.a].value, grad_buf(n.b));
      break;
    }
    case Op::kTanh: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value.v[i];
        ga.v[i] += g.v[i] * (1.0 - y * y);
      }
      break;
    }
    case Op::kSigmoid: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value.v[i];
        ga.v[i] += g.v[i] * y * (1.0 - y);
      }
      break;
    }
    case Op::kConcatRows: {
      std::size_t at = 0;
      for (NodeId p : n.many) {
        const std::size_t sz = nodes_[p].value.size();
        if (nodes_[p].needs_grad) {
          Tensor& gp = grad_buf(p);
          for (std::size_t i = 0; i < sz; ++i) gp.v[i] += g.v[at + i];
        }
        at += sz;
      }
      break;
    }
    case Op::kConcatCols: {
      std::size_t c0 = 0;
      for (NodeId p : n.many) {
        const Tensor& vp = nodes_[p].value;
        if (nodes_[p].needs_grad) {
          Tensor& gp = grad_buf(p);
          for (std::size_t r = 0; r < g.rows; ++r)
            for (std::size_t c = 0; c < vp.cols; ++c)
              gp.at(r, c) += g.at(r, c0 + c);
        }
        c0 += vp.cols;
      }
      break;
    }
    case Op::kSliceRows: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const std::size_t r0 = n.idx[0];
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) ga.at(r0 + r, c) += g.at(r, c);
      break;
    }
    case Op::kSliceCols: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const std::size_t c0 = n.idx[0];
      for (std::size_t r = 0; r < g.rows; ++r)
        for (std::size_t c = 0; c < g.cols; ++c) ga.at(r, c0 + c) += g.at(r, c);
      break;
    }
    case Op::kGatherRows: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      for (std::size_t r = 0; r < n.idx.size(); ++r)
        for (std::size_t c = 0; c < g.cols; ++c) ga.at(n.idx[r], c) += g.at(r, c);
      break;
    }
    case Op::kMaskedSoftmax: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const bool has_mask = !n.mask.empty();
      for (std::size_t r = 0; r < g.rows; ++r) {
        const std::size_t base = r * g.cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < g.cols; ++c)
          dot += g.v[base + c] * n.value.v[base + c];
        for (std::size_t c = 0; c < g.cols; ++c) {
          if (has_mask && n.mask[base + c]) continue;  // exactly zero gradient
          const double p = n.value.v[base + c];
          ga.v[base + c] += p * (g.v[base + c] - dot);
        }
      }
      break;
    }
    case Op::kLayerNorm: {
      const Tensor& xhat = n.aux0;
      const Tensor& gam = nodes_[n.b].value;
      const double m = static_cast<double>(g.cols);
      if (nodes_[n.b].needs_grad) {
        Tensor& gg = grad_buf(n.b);
        for (std::size_t r = 0; r < g.rows; ++r)
          for (std::size_t c = 0; c < g.cols; ++c)
            gg.v[c] += g.at(r, c) * xhat.at(r, c);
      }
      if (nodes_[n.c].needs_grad) {
        Tensor& gb = grad_buf(n.c);
        for (std::size_t r = 0; r < g.rows; ++r)
          for (std::size_t c = 0; c < g.cols; ++c) gb.v[c] += g.at(r, c);
      }
      if (nodes_[n.a].needs_grad) {
        Tensor& gx = grad_buf(n.a);
        for (std::size_t r = 0; r < g.rows; ++r) {
          double mean_gy = 0.0, mean_gy_xhat = 0.0;
          for (std::size_t c = 0; c < g.cols; ++c) {
            const double gy = g.at(r, c) * gam.v[c];
            mean_gy += gy;
            mean_gy_xhat += gy * xhat.at(r, c);
          }
          mean_gy /= m;
          mean_gy_xhat /= m;
          const double inv_sigma = n.aux1.v[r];
          for (std::size_t c = 0; c < g.cols; ++c) {
            const double gy = g.at(r, c) * gam.v[c];
            gx.at(r, c) +=
                inv_sigma * (gy - mean_gy - xhat.at(r, c) * mean_gy_xhat);
          }
        }
      }
      break;
    }
    case Op::kSumAll: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const double s = g.v[0];
      for (double& x : ga.v) x += s;
      break;
    }
    case Op::kFocal: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const Tensor& logits = nodes_[n.a].value;
      const Tensor& targets = n.aux0;
      const double gamma = n.s0, alpha = n.s1;
      const double go = g.v[0] * n.s2;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const double x = logits.v[i];
        const double p = stable_sigmoid(x);
        const double q = stable_sigmoid(-x);  // 1 - p without cancellation
        const double logp = log_sigmoid(x);
        const double log1mp = log_sigmoid(-x);
        double d;
        if (targets.v[i] > 0.5) {
          d = alpha * (gamma * p * std::pow(q, gamma) * logp -
                       std::pow(q, gamma + 1.0));
        } else {
          d = (1.0 - alpha) * (std::pow(p, gamma + 1.0) -
                               gamma * std::pow(p, gamma) * q * log1mp);
        }
        ga.v[i] += go * d;
      }
      break;
    }
    case Op::kL1Const: {
      if (!nodes_[n.a].needs_grad) break;
      Tensor& ga = grad_buf(n.a);
      const Tensor& x = nodes_[n.a].value;
      const double go = g.v[0] * n.s2;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x.v[i] - n.aux0.v[i];
        const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        ga.v[i] += go * n.aux1.v[i] * sgn;
      }
      break;
    }
  }
}

}  // namespace raydn
