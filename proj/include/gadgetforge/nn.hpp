// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gadgetforge/graph.hpp"
#include "gadgetforge/rng.hpp"
#include "gadgetforge/tensor.hpp"

// Layers of the recurrent and transformer classifiers. Everything uses the
// row-vector convention: an input row x maps to x * W + b, and a weight
// matrix is (fan_in x fan_out).
namespace gadgetforge::nn {

/// pe(pos, 2i) = sin(pos / 10000^(2i/d)), pe(pos, 2i+1) = cos(same angle).
/// Throws Error(OddModelDim).
Tensor positional_encoding(std::size_t max_pos, std::size_t d_model);

/// Additive attention mask row: 0 for kept positions, -1e9 for PAD.
Tensor attention_mask(std::span<const std::uint8_t> mask);

// ---- graph-level building blocks -------------------------------------------

/// softmax(q k^T / sqrt(d_k) + mask) v.
Var attention(Graph& g, Var q, Var k, Var v, const Tensor* mask = nullptr);

struct AttentionVars {
  std::vector<Var> wq, wk, wv;  // one (d_model x d_k) matrix per head
  Var wo;                       // (h*d_k x d_model)
};
Var multi_head_attention(Graph& g, Var x, const AttentionVars& p, const Tensor* mask = nullptr);

struct LstmVars {
  Var w_f, w_u, w_o, w_c;  // ((hidden + input) x hidden), acting on [a, x]
  Var b_f, b_u, b_o, b_c;  // (1 x hidden)
};
struct LstmVarState {
  Var c, a;
};
LstmVarState lstm_step(Graph& g, Var x, const LstmVarState& s, const LstmVars& p);

struct GruVars {
  Var w_u, u_u, w_r, u_r, w_h, u_h;  // W: (input x hidden), U: (hidden x hidden)
  Var b_u, b_r, b_h;
};
Var gru_step(Graph& g, Var x, Var c_prev, const GruVars& p);

/// concat(a_T forward, a_1 backward) over the rows of `seq` whose mask is 1.
Var bilstm_features(Graph& g, Var seq, std::span<const std::uint8_t> mask, const LstmVars& fwd, const LstmVars& bwd);
/// concat(C_T forward, C_1 backward).
Var bigru_features(Graph& g, Var seq, std::span<const std::uint8_t> mask, const GruVars& fwd, const GruVars& bwd);

enum class HeadLayerKind { Dropout, Linear, Relu, Tanh };

struct HeadLayer {
  HeadLayerKind kind = HeadLayerKind::Linear;
  double p = 0.0;        // dropout rate
  std::size_t out = 0;   // linear output width
  bool operator==(const HeadLayer&) const = default;
};

struct HeadSpec {
  std::size_t input = 0;
  std::vector<HeadLayer> layers;

  /// bert, distilbert, roberta, gpt2, gptj. Inner linear layers are `width`
  /// wide and the last one maps to `classes`.
  static HeadSpec preset(std::string_view name, std::size_t input, std::size_t width, std::size_t classes,
                         double dropout);
  /// Shapes (in x out) of the linear layers, in order.
  std::vector<std::pair<std::size_t, std::size_t>> linear_shapes() const;
  void validate() const;
  bool operator==(const HeadSpec&) const = default;
};

/// Applies the head to a 1 x input row. Dropout is active only when
/// `training`; it then draws from `rng` (which must be non-null).
Var classification_head(Graph& g, Var features, const HeadSpec& spec, std::span<const Var> weights,
                        std::span<const Var> biases, Rng* rng, bool training);

// ---- tensor-level reference operations -------------------------------------

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor* mask = nullptr);

struct AttentionParams {
  std::vector<Tensor> wq, wk, wv;
  Tensor wo;

  std::size_t heads() const { return wq.size(); }
  static AttentionParams random(std::size_t d_model, std::size_t heads, Rng& rng);
};
Tensor multi_head_attention(const Tensor& x, const AttentionParams& p, const Tensor* mask = nullptr);

struct LstmParams {
  Tensor w_f, w_u, w_o, w_c, b_f, b_u, b_o, b_c;
  static LstmParams zeros(std::size_t input, std::size_t hidden);
  static LstmParams random(std::size_t input, std::size_t hidden, Rng& rng);
};
struct LstmState {
  Tensor c, a;  // 1 x hidden each
};
LstmState lstm_step(const Tensor& x, const LstmState& s, const LstmParams& p);

struct GruParams {
  Tensor w_u, u_u, w_r, u_r, w_h, u_h, b_u, b_r, b_h;
  static GruParams zeros(std::size_t input, std::size_t hidden);
  static GruParams random(std::size_t input, std::size_t hidden, Rng& rng);
};
Tensor gru_step(const Tensor& x, const Tensor& c_prev, const GruParams& p);

/// seq is T x input; masked rows are skipped. Throws Error(EmptySequence).
Tensor bilstm_forward(const Tensor& seq, std::span<const std::uint8_t> mask, const LstmParams& fwd,
                      const LstmParams& bwd);
Tensor bigru_forward(const Tensor& seq, std::span<const std::uint8_t> mask, const GruParams& fwd, const GruParams& bwd);

struct HeadParams {
  std::vector<Tensor> weights, biases;
  static HeadParams random(const HeadSpec& spec, Rng& rng);
};
Tensor classification_head(const Tensor& features, const HeadSpec& spec, const HeadParams& p, Rng* rng, bool training);

struct CrossEntropy {
  double loss = 0.0;
  Tensor grad;  // softmax(logits) - onehot(label)
};
/// Throws Error(LabelOutOfRange).
CrossEntropy cross_entropy(const Tensor& logits, std::size_t label);

/// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) entries.
Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng);

}  // namespace gadgetforge::nn
