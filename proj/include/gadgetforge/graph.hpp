// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gadgetforge/tensor.hpp"

namespace gadgetforge {

/// Handle to a node of a Graph.
struct Var {
  std::size_t index = SIZE_MAX;
};

/// Tape for reverse-mode differentiation. Nodes are appended in evaluation
/// order, so walking the tape backwards visits every node after all of its
/// consumers. A Graph is single-use and not thread-safe.
class Graph {
 public:
  /// Value without gradient.
  Var constant(Tensor value);
  /// Borrowed value (must outlive the graph); its gradient is added to
  /// `grad_sink` by backward() when the sink is non-null.
  Var leaf(const Tensor& value, Tensor* grad_sink);

  const Tensor& value(Var v) const;
  /// Gradient after backward(); an all-zero tensor for nodes the loss does not reach.
  Tensor grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  /// Propagates d(loss)/d(node) scaled by `seed` from a 1x1 node.
  void backward(Var loss, double seed = 1.0);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var mul(Var a, Var b);
  /// alpha * a + beta, elementwise.
  Var affine(Var a, double alpha, double beta);
  /// Elementwise product with a constant tensor (dropout masks).
  Var mul_const(Var a, const Tensor& factor);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var concat_cols(std::span<const Var> parts);
  Var slice_rows(Var a, std::size_t start, std::size_t count);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  Var transpose(Var a);
  /// Row-wise softmax of a + mask, where the optional 1 x cols mask is added
  /// to every row (0 keeps a column, -1e9 removes it).
  Var softmax_rows(Var a, const Tensor* additive_mask = nullptr);
  /// Per-row normalization to zero mean / unit variance, then gamma * x + beta.
  Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
  /// Rows `ids` of table, in order.
  Var gather_rows(Var table, std::span<const std::uint32_t> ids);
  /// -log softmax(logits)[label] of a 1 x C row.
  Var cross_entropy(Var logits, std::size_t label);

 private:
  struct Node {
    Tensor own;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    Tensor* sink = nullptr;
    bool needs_grad = false;
    std::function<void(Graph&, const Node&)> backprop;

    const Tensor& value() const { return borrowed ? *borrowed : own; }
  };

  Var push(Tensor value, bool needs_grad, std::function<void(Graph&, const Node&)> backprop);
  Node& node(Var v) { return nodes_.at(v.index); }
  const Node& node(Var v) const { return nodes_.at(v.index); }
  bool needs(Var v) const { return node(v).needs_grad; }
  /// Gradient buffer of v, allocated on first use.
  Tensor& grad_ref(Var v);

  std::vector<Node> nodes_;
};

}  // namespace gadgetforge
