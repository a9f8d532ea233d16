// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "raydn/tensor.hpp"

namespace raydn {

// Reverse-mode autodiff over whole matrices. Nodes are created in topological
// order by construction (inputs must already exist), so backward() is a single
// reverse sweep. Nodes that no parameter feeds are skipped during backward.
class Tape {
 public:
  using NodeId = std::uint32_t;

  NodeId leaf(Tensor value, bool requires_grad = false);

  NodeId add(NodeId a, NodeId b);          // same shape
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);          // elementwise
  NodeId scale(NodeId a, double s);
  NodeId add_rowvec(NodeId a, NodeId row);  // broadcast (1, m) over rows
  NodeId matmul(NodeId a, NodeId b);        // (n,k) x (k,m)
  NodeId matmul_nt(NodeId a, NodeId b);     // (n,k) x (m,k)^T -> (n,m)
  NodeId tanh_op(NodeId a);
  NodeId sigmoid_op(NodeId a);
  NodeId concat_rows(const std::vector<NodeId>& parts);
  NodeId concat_cols(const std::vector<NodeId>& parts);
  NodeId slice_rows(NodeId a, std::size_t r0, std::size_t r1);
  NodeId slice_cols(NodeId a, std::size_t c0, std::size_t c1);
  NodeId gather_rows(NodeId a, std::vector<std::size_t> indices);

  // Row-wise softmax with hard exclusions. `blocked` is row-major (rows x
  // cols) or empty for no exclusions. Excluded entries are never read by the
  // max/sum loops and their outputs are exactly 0.0, which keeps unmasked rows
  // bit-independent of masked inputs. A fully-blocked row yields zeros.
  NodeId masked_softmax_rows(NodeId scores, std::vector<char> blocked);

  // Per-row layer normalization with learnable (1, m) gamma and beta.
  NodeId layernorm_rows(NodeId x, NodeId gamma, NodeId beta, double eps = 1e-5);

  NodeId sum_all(NodeId a);  // -> (1,1)

  // Sigmoid focal loss against a constant {0,1} target matrix, summed over
  // all elements and multiplied by inv_norm. Gradient is hand-derived.
  NodeId focal_loss(NodeId logits, Tensor targets, double gamma, double alpha,
                    double inv_norm);

  // inv_norm * sum_ij weight_ij * |x_ij - target_ij| with constant target and
  // weight. Subgradient at a kink is 0.
  NodeId l1_to_const(NodeId x, Tensor target, Tensor weight, double inv_norm);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_[id].needs_grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps backward.
  void backward(NodeId root);

 private:
  enum class Op : std::uint8_t {
    kLeaf, kAdd, kSub, kMul, kScale, kAddRowVec, kMatmul, kMatmulNT,
    kTanh, kSigmoid, kConcatRows, kConcatCols, kSliceRows, kSliceCols,
    kGatherRows, kMaskedSoftmax, kLayerNorm, kSumAll, kFocal, kL1Const,
  };

  struct Node {
    Op op = Op::kLeaf;
    NodeId a = 0, b = 0, c = 0;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    std::vector<NodeId> many;
    std::vector<std::size_t> idx;
    std::vector<char> mask;
    Tensor value;
    Tensor aux0, aux1;  // cached intermediates or constant operands
    Tensor grad;
    bool needs_grad = false;
  };

  NodeId push(Node n);
  Tensor& grad_buf(NodeId id);
  void backward_node(Node& n);

  std::vector<Node> nodes_;
};

}  // namespace raydn
