// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/nn.hpp"

#include <cmath>

#include "gadgetforge/error.hpp"

namespace gadgetforge::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::ShapeMismatch, what);
}

std::size_t first_active(std::span<const std::uint8_t> mask) {
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) return t;
  }
  throw Error(Errc::EmptySequence, "sequence has no active positions");
}

}  // namespace

Tensor positional_encoding(std::size_t max_pos, std::size_t d_model) {
  if (d_model % 2 != 0) throw Error(Errc::OddModelDim, "d_model must be even", d_model);
  Tensor pe(max_pos, d_model);
  for (std::size_t pos = 0; pos < max_pos; ++pos) {
    for (std::size_t i = 0; i < d_model / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      pe(pos, 2 * i) = std::sin(angle);
      pe(pos, 2 * i + 1) = std::cos(angle);
    }
  }
  return pe;
}

Tensor attention_mask(std::span<const std::uint8_t> mask) {
  Tensor m(1, mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) m.data[i] = mask[i] ? 0.0 : -1e9;
  return m;
}

Var attention(Graph& g, Var q, Var k, Var v, const Tensor* mask) {
  const Tensor& qv = g.value(q);
  const Tensor& kv = g.value(k);
  const Tensor& vv = g.value(v);
  require(qv.cols == kv.cols, "attention: Q and K widths differ");
  require(kv.rows == vv.rows, "attention: K and V lengths differ");
  const double scale = 1.0 / std::sqrt(static_cast<double>(qv.cols));
  Var scores = g.affine(g.matmul(q, g.transpose(k)), scale, 0.0);
  return g.matmul(g.softmax_rows(scores, mask), v);
}

Var multi_head_attention(Graph& g, Var x, const AttentionVars& p, const Tensor* mask) {
  require(!p.wq.empty() && p.wq.size() == p.wk.size() && p.wq.size() == p.wv.size(), "attention head count");
  std::vector<Var> heads;
  heads.reserve(p.wq.size());
  for (std::size_t h = 0; h < p.wq.size(); ++h) {
    heads.push_back(attention(g, g.matmul(x, p.wq[h]), g.matmul(x, p.wk[h]), g.matmul(x, p.wv[h]), mask));
  }
  return g.matmul(g.concat_cols(heads), p.wo);
}

LstmVarState lstm_step(Graph& g, Var x, const LstmVarState& s, const LstmVars& p) {
  const Var parts[] = {s.a, x};
  const Var z = g.concat_cols(parts);
  const Var f = g.sigmoid(g.add_row(g.matmul(z, p.w_f), p.b_f));
  const Var i = g.sigmoid(g.add_row(g.matmul(z, p.w_u), p.b_u));
  const Var o = g.sigmoid(g.add_row(g.matmul(z, p.w_o), p.b_o));
  const Var cand = g.tanh(g.add_row(g.matmul(z, p.w_c), p.b_c));
  const Var c = g.add(g.mul(f, s.c), g.mul(i, cand));
  return {c, g.mul(o, g.tanh(c))};
}

Var gru_step(Graph& g, Var x, Var c_prev, const GruVars& p) {
  const Var i = g.sigmoid(g.add_row(g.add(g.matmul(x, p.w_u), g.matmul(c_prev, p.u_u)), p.b_u));
  const Var r = g.sigmoid(g.add_row(g.add(g.matmul(x, p.w_r), g.matmul(c_prev, p.u_r)), p.b_r));
  const Var cand = g.tanh(g.add_row(g.add(g.matmul(x, p.w_h), g.matmul(g.mul(r, c_prev), p.u_h)), p.b_h));
  // C_t = i * C_{t-1} + (1 - i) * cand
  return g.add(g.mul(i, c_prev), g.mul(g.affine(i, -1.0, 1.0), cand));
}

Var bilstm_features(Graph& g, Var seq, std::span<const std::uint8_t> mask, const LstmVars& fwd, const LstmVars& bwd) {
  require(g.value(seq).rows == mask.size(), "mask length differs from sequence");
  first_active(mask);
  const std::size_t hidden = g.value(fwd.b_f).cols;
  LstmVarState f{g.constant(Tensor(1, hidden)), g.constant(Tensor(1, hidden))};
  LstmVarState b = f;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) f = lstm_step(g, g.slice_rows(seq, t, 1), f, fwd);
  }
  for (std::size_t t = mask.size(); t-- > 0;) {
    if (mask[t]) b = lstm_step(g, g.slice_rows(seq, t, 1), b, bwd);
  }
  const Var parts[] = {f.a, b.a};
  return g.concat_cols(parts);
}

Var bigru_features(Graph& g, Var seq, std::span<const std::uint8_t> mask, const GruVars& fwd, const GruVars& bwd) {
  require(g.value(seq).rows == mask.size(), "mask length differs from sequence");
  first_active(mask);
  const std::size_t hidden = g.value(fwd.b_u).cols;
  Var f = g.constant(Tensor(1, hidden));
  Var b = f;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) f = gru_step(g, g.slice_rows(seq, t, 1), f, fwd);
  }
  for (std::size_t t = mask.size(); t-- > 0;) {
    if (mask[t]) b = gru_step(g, g.slice_rows(seq, t, 1), b, bwd);
  }
  const Var parts[] = {f, b};
  return g.concat_cols(parts);
}

HeadSpec HeadSpec::preset(std::string_view name, std::size_t input, std::size_t width, std::size_t classes,
                          double dropout) {
  using K = HeadLayerKind;
  HeadSpec s;
  s.input = input;
  const HeadLayer drop{K::Dropout, dropout, 0};
  const HeadLayer inner{K::Linear, 0.0, width};
  const HeadLayer last{K::Linear, 0.0, classes};
  if (name == "bert" || name == "gpt2") {
    s.layers = {drop, last};
  } else if (name == "distilbert") {
    s.layers = {inner, {K::Relu, 0.0, 0}, drop, last};
  } else if (name == "roberta") {
    s.layers = {drop, inner, {K::Tanh, 0.0, 0}, drop, last};
  } else if (name == "gptj") {
    s.layers = {last};
  } else {
    throw Error(Errc::ConfigMismatch, "unknown head preset: " + std::string(name));
  }
  s.validate();
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> HeadSpec::linear_shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t width = input;
  for (const auto& l : layers) {
    if (l.kind != HeadLayerKind::Linear) continue;
    out.emplace_back(width, l.out);
    width = l.out;
  }
  return out;
}

void HeadSpec::validate() const {
  if (input == 0 || layers.empty() || layers.back().kind != HeadLayerKind::Linear) {
    throw Error(Errc::ConfigMismatch, "head must be non-empty and end in a linear layer");
  }
  for (const auto& l : layers) {
    if (l.kind == HeadLayerKind::Dropout && !(l.p >= 0.0 && l.p < 1.0)) {
      throw Error(Errc::ConfigMismatch, "dropout rate must be in [0, 1)");
    }
    if (l.kind == HeadLayerKind::Linear && l.out == 0) throw Error(Errc::ConfigMismatch, "linear layer of width 0");
  }
}

Var classification_head(Graph& g, Var features, const HeadSpec& spec, std::span<const Var> weights,
                        std::span<const Var> biases, Rng* rng, bool training) {
  require(g.value(features).rows == 1 && g.value(features).cols == spec.input, "head input width");
  require(weights.size() == spec.linear_shapes().size() && biases.size() == weights.size(), "head parameter count");
  Var h = features;
  std::size_t linear = 0;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case HeadLayerKind::Dropout: {
        if (!training || l.p == 0.0) break;
        if (!rng) throw Error(Errc::ConfigMismatch, "training dropout needs an rng");
        const Tensor& hv = g.value(h);
        Tensor keep(hv.rows, hv.cols);
        for (double& k : keep.data) k = rng->uniform() < l.p ? 0.0 : 1.0 / (1.0 - l.p);
        h = g.mul_const(h, keep);
        break;
      }
      case HeadLayerKind::Linear:
        h = g.add_row(g.matmul(h, weights[linear]), biases[linear]);
        ++linear;
        break;
      case HeadLayerKind::Relu:
        h = g.relu(h);
        break;
      case HeadLayerKind::Tanh:
        h = g.tanh(h);
        break;
    }
  }
  return h;
}

// ---- tensor-level wrappers --------------------------------------------------

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor* mask) {
  Graph g;
  return g.value(attention(g, g.constant(q), g.constant(k), g.constant(v), mask));
}

AttentionParams AttentionParams::random(std::size_t d_model, std::size_t heads, Rng& rng) {
  if (heads == 0 || d_model % heads != 0) throw Error(Errc::ShapeMismatch, "d_model must divide into heads");
  const std::size_t dk = d_model / heads;
  AttentionParams p;
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.push_back(uniform_init(d_model, dk, d_model, rng));
    p.wk.push_back(uniform_init(d_model, dk, d_model, rng));
    p.wv.push_back(uniform_init(d_model, dk, d_model, rng));
  }
  p.wo = uniform_init(heads * dk, d_model, heads * dk, rng);
  return p;
}

Tensor multi_head_attention(const Tensor& x, const AttentionParams& p, const Tensor* mask) {
  Graph g;
  AttentionVars vars;
  for (std::size_t h = 0; h < p.heads(); ++h) {
    vars.wq.push_back(g.constant(p.wq[h]));
    vars.wk.push_back(g.constant(p.wk[h]));
    vars.wv.push_back(g.constant(p.wv[h]));
  }
  vars.wo = g.constant(p.wo);
  return g.value(multi_head_attention(g, g.constant(x), vars, mask));
}

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
  const Tensor w(hidden + input, hidden), b(1, hidden);
  return {w, w, w, w, b, b, b, b};
}

LstmParams LstmParams::random(std::size_t input, std::size_t hidden, Rng& rng) {
  const std::size_t fan = hidden + input;
  LstmParams p;
  for (Tensor* w : {&p.w_f, &p.w_u, &p.w_o, &p.w_c}) *w = uniform_init(fan, hidden, fan, rng);
  for (Tensor* b : {&p.b_f, &p.b_u, &p.b_o, &p.b_c}) *b = uniform_init(1, hidden, fan, rng);
  return p;
}

namespace {

LstmVars lstm_vars(Graph& g, const LstmParams& p) {
  return {g.constant(p.w_f), g.constant(p.w_u), g.constant(p.w_o), g.constant(p.w_c),
          g.constant(p.b_f), g.constant(p.b_u), g.constant(p.b_o), g.constant(p.b_c)};
}

GruVars gru_vars(Graph& g, const GruParams& p) {
  return {g.constant(p.w_u), g.constant(p.u_u), g.constant(p.w_r), g.constant(p.u_r), g.constant(p.w_h),
          g.constant(p.u_h), g.constant(p.b_u), g.constant(p.b_r), g.constant(p.b_h)};
}

}  // namespace

LstmState lstm_step(const Tensor& x, const LstmState& s, const LstmParams& p) {
  Graph g;
  const LstmVarState out = lstm_step(g, g.constant(x), {g.constant(s.c), g.constant(s.a)}, lstm_vars(g, p));
  return {g.value(out.c), g.value(out.a)};
}

GruParams GruParams::zeros(std::size_t input, std::size_t hidden) {
  const Tensor w(input, hidden), u(hidden, hidden), b(1, hidden);
  return {w, u, w, u, w, u, b, b, b};
}

GruParams GruParams::random(std::size_t input, std::size_t hidden, Rng& rng) {
  GruParams p;
  for (Tensor* w : {&p.w_u, &p.w_r, &p.w_h}) *w = uniform_init(input, hidden, input, rng);
  for (Tensor* u : {&p.u_u, &p.u_r, &p.u_h}) *u = uniform_init(hidden, hidden, hidden, rng);
  for (Tensor* b : {&p.b_u, &p.b_r, &p.b_h}) *b = uniform_init(1, hidden, hidden, rng);
  return p;
}

Tensor gru_step(const Tensor& x, const Tensor& c_prev, const GruParams& p) {
  Graph g;
  return g.value(gru_step(g, g.constant(x), g.constant(c_prev), gru_vars(g, p)));
}

Tensor bilstm_forward(const Tensor& seq, std::span<const std::uint8_t> mask, const LstmParams& fwd,
                      const LstmParams& bwd) {
  Graph g;
  return g.value(bilstm_features(g, g.constant(seq), mask, lstm_vars(g, fwd), lstm_vars(g, bwd)));
}

Tensor bigru_forward(const Tensor& seq, std::span<const std::uint8_t> mask, const GruParams& fwd, const GruParams& bwd) {
  Graph g;
  return g.value(bigru_features(g, g.constant(seq), mask, gru_vars(g, fwd), gru_vars(g, bwd)));
}

HeadParams HeadParams::random(const HeadSpec& spec, Rng& rng) {
  HeadParams p;
  for (auto [in, out] : spec.linear_shapes()) {
    p.weights.push_back(uniform_init(in, out, in, rng));
    p.biases.push_back(uniform_init(1, out, in, rng));
  }
  return p;
}

Tensor classification_head(const Tensor& features, const HeadSpec& spec, const HeadParams& p, Rng* rng, bool training) {
  Graph g;
  std::vector<Var> w, b;
  for (const auto& t : p.weights) w.push_back(g.constant(t));
  for (const auto& t : p.biases) b.push_back(g.constant(t));
  return g.value(classification_head(g, g.constant(features), spec, w, b, rng, training));
}

CrossEntropy cross_entropy(const Tensor& logits, std::size_t label) {
  Graph g;
  Tensor grad(logits.rows, logits.cols);
  const Var z = g.leaf(logits, &grad);
  const Var loss = g.cross_entropy(z, label);
  g.backward(loss);
  return {g.value(loss).data[0], std::move(grad)};
}

}  // namespace gadgetforge::nn
