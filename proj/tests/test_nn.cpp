// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <functional>

#include "gadgetforge/error.hpp"
#include "gadgetforge/graph.hpp"
#include "gadgetforge/model.hpp"
#include "gadgetforge/nn.hpp"
#include "gadgetforge/rng.hpp"
#include "oracles.hpp"

using namespace gadgetforge;

namespace {

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Tensor t(r, c);
  for (auto& x : t.data) x = rng.uniform(-scale, scale);
  return t;
}

double max_diff(const Tensor& t, const oracle::Mat& m) {
  double worst = 0;
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 0; c < t.cols; ++c) worst = std::max(worst, std::abs(t(r, c) - m[r][c]));
  }
  return worst;
}

double max_diff(const Tensor& t, const std::vector<double>& v) {
  double worst = 0;
  for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(t.data[i] - v[i]));
  return worst;
}

// Reduces a graph output to a scalar with fixed random weights, then checks
// the gradient of every input against central differences.
using GraphFn = std::function<Var(Graph&, const std::vector<Var>&)>;

double op_gradient_error(const GraphFn& fn, std::vector<Tensor> inputs, Rng& rng) {
  Tensor weights;
  auto loss_of = [&](const std::vector<Tensor>& xs, std::vector<Tensor>* grads) {
    Graph g;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < xs.size(); ++i) vars.push_back(g.leaf(xs[i], grads ? &(*grads)[i] : nullptr));
    const Var out = fn(g, vars);
    const Tensor& y = g.value(out);
    if (weights.empty()) weights = random_tensor(rng, y.rows, y.cols);
    const Var weighted = g.mul_const(out, weights);
    const Var left = g.matmul(g.constant(Tensor(1, y.rows, 1.0)), weighted);
    const Var total = g.matmul(left, g.constant(Tensor(y.cols, 1, 1.0)));
    if (grads) g.backward(total);
    return g.value(total).data[0];
  };
  std::vector<Tensor> grads;
  for (const auto& x : inputs) grads.emplace_back(x.rows, x.cols);
  loss_of(inputs, &grads);
  double worst = 0;
  const double eps = 1e-6;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double orig = inputs[i].data[k];
      inputs[i].data[k] = orig + eps;
      const double up = loss_of(inputs, nullptr);
      inputs[i].data[k] = orig - eps;
      const double down = loss_of(inputs, nullptr);
      inputs[i].data[k] = orig;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[i].data[k];
      worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-6}));
    }
  }
  return worst;
}

TokenSequence sequence(std::vector<TokenId> ids, std::size_t active) {
  TokenSequence s;
  s.ids = std::move(ids);
  s.mask.assign(s.ids.size(), 0);
  for (std::size_t i = 0; i < active; ++i) s.mask[i] = 1;
  for (std::size_t i = active; i < s.ids.size(); ++i) s.ids[i] = Vocabulary::kPad;
  return s;
}

ModelConfig tiny(Architecture arch) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_size = 12;
  c.max_len = 6;
  c.d_model = 8;
  c.layers = 1;
  c.heads = 2;
  c.hidden = 4;
  c.dropout = 0.0;
  return c;
}

}  // namespace

TEST_CASE("positional encoding") {
  const Tensor pe = nn::positional_encoding(4, 6);
  CHECK(pe(0, 0) == 0.0);
  CHECK(pe(0, 1) == 1.0);
  CHECK(pe(1, 0) == doctest::Approx(0.841471).epsilon(1e-6));
  CHECK(pe(1, 1) == doctest::Approx(std::cos(1.0)));
  CHECK(pe(3, 2) == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 6.0))));
  CHECK(pe(3, 5) == doctest::Approx(std::cos(3.0 / std::pow(10000.0, 4.0 / 6.0))));
  CHECK_THROWS_AS(nn::positional_encoding(4, 5), Error);
}

TEST_CASE("cross entropy") {
  const auto ce = nn::cross_entropy(Tensor::row({1.0, 2.0}), 0);
  CHECK(ce.loss == doctest::Approx(1.313262).epsilon(1e-6));
  CHECK(ce.grad.data[0] + ce.grad.data[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(nn::cross_entropy(Tensor::row({1.0, 2.0}), 2), Error);
  Graph g;
  CHECK(g.value(g.cross_entropy(g.constant(Tensor::row({1.0, 2.0})), 0)).data[0] == doctest::Approx(ce.loss));
}

TEST_CASE("attention and cells match direct formulas") {
  Rng rng(42);
  for (int round = 0; round < 100; ++round) {
    const std::size_t t = 1 + rng.below(5), d = 1 + rng.below(6), dv = 1 + rng.below(4);
    const Tensor q = random_tensor(rng, t, d, 2.0), k = random_tensor(rng, t, d, 2.0), v = random_tensor(rng, t, dv);
    CHECK(max_diff(nn::scaled_dot_attention(q, k, v), oracle::attention(oracle::to_mat(q), oracle::to_mat(k),
                                                                        oracle::to_mat(v))) <= 1e-9);

    const std::size_t dm = 2 * (1 + rng.below(3));
    const Tensor x = random_tensor(rng, t, dm);
    const auto ap = nn::AttentionParams::random(dm, 2, rng);
    CHECK(max_diff(nn::multi_head_attention(x, ap), oracle::multi_head(oracle::to_mat(x), ap)) <= 1e-9);

    const std::size_t h = 1 + rng.below(5), in = 1 + rng.below(5);
    const auto lp = nn::LstmParams::random(in, h, rng);
    const Tensor xi = random_tensor(rng, 1, in, 2.0);
    const nn::LstmState s{random_tensor(rng, 1, h), random_tensor(rng, 1, h)};
    const auto got = nn::lstm_step(xi, s, lp);
    const auto want = oracle::lstm_step(xi.data, s.c.data, s.a.data, lp);
    CHECK(max_diff(got.c, want.c) <= 1e-9);
    CHECK(max_diff(got.a, want.a) <= 1e-9);

    const auto gp = nn::GruParams::random(in, h, rng);
    const Tensor c_prev = random_tensor(rng, 1, h);
    const Tensor c = nn::gru_step(xi, c_prev, gp);
    const auto gw = oracle::gru_step(xi.data, c_prev.data, gp);
    CHECK(max_diff(c, gw.c) <= 1e-9);
    for (std::size_t j = 0; j < h; ++j) {
      const double lo = std::min(c_prev.data[j], gw.candidate[j]), hi = std::max(c_prev.data[j], gw.candidate[j]);
      CHECK(c.data[j] >= lo - 1e-15);
      CHECK(c.data[j] <= hi + 1e-15);
    }
  }
}

TEST_CASE("softmax rows sum to one, masked entries vanish") {
  Rng rng(4);
  for (int round = 0; round < 50; ++round) {
    Graph g;
    const std::size_t n = 1 + rng.below(8);
    const Tensor a = random_tensor(rng, 3, n, 30.0);
    std::vector<std::uint8_t> mask(n, 1);
    for (std::size_t i = 1; i < n; ++i) mask[i] = rng.below(2);
    const Tensor add = nn::attention_mask(mask);
    const Tensor& s = g.value(g.softmax_rows(g.constant(a), &add));
    for (std::size_t r = 0; r < 3; ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < n; ++c) {
        sum += s(r, c);
        if (!mask[c]) CHECK(s(r, c) == 0.0);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("graph ops: reverse mode matches central differences") {
  Rng rng(7);
  auto r = [&](std::size_t a, std::size_t b) { return random_tensor(rng, a, b); };
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return g.matmul(v[0], v[1]); }, {r(3, 4), r(4, 2)},
                          rng) < 1e-6);
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return g.mul(g.sigmoid(v[0]), g.tanh(v[1])); },
                          {r(2, 3), r(2, 3)}, rng) < 1e-6);
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return g.add_row(g.relu(v[0]), v[1]); },
                          {r(3, 3), r(1, 3)}, rng) < 1e-6);
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return g.softmax_rows(v[0]); }, {r(3, 5)}, rng) <
        1e-6);
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return g.layer_norm(v[0], v[1], v[2]); },
                          {r(3, 6), r(1, 6), r(1, 6)}, rng) < 1e-5);
  CHECK(op_gradient_error(
            [](Graph& g, const std::vector<Var>& v) {
              const std::vector<Var> parts = {g.transpose(v[0]), g.slice_cols(v[1], 1, 2)};
              return g.slice_rows(g.concat_cols(parts), 1, 2);
            },
            {r(2, 3), r(3, 4)}, rng) < 1e-6);
  CHECK(op_gradient_error(
            [](Graph& g, const std::vector<Var>& v) {
              const std::vector<std::uint32_t> ids = {2, 0, 2};
              return g.affine(g.gather_rows(v[0], ids), 1.5, -0.25);
            },
            {r(4, 3)}, rng) < 1e-6);
  CHECK(op_gradient_error([](Graph& g, const std::vector<Var>& v) { return nn::attention(g, v[0], v[1], v[2]); },
                          {r(3, 4), r(3, 4), r(3, 2)}, rng) < 1e-6);
}

TEST_CASE("graph layers equal the tensor-level references") {
  Rng rng(10);
  const std::size_t t = 5, in = 3, h = 4;
  const Tensor seq = random_tensor(rng, t, in);
  const std::vector<std::uint8_t> mask = {1, 1, 1, 0, 0};
  const auto f = nn::LstmParams::random(in, h, rng), b = nn::LstmParams::random(in, h, rng);
  const auto gf = nn::GruParams::random(in, h, rng), gb = nn::GruParams::random(in, h, rng);

  Graph g;
  auto lstm_vars = [&](const nn::LstmParams& p) {
    return nn::LstmVars{g.constant(p.w_f), g.constant(p.w_u), g.constant(p.w_o), g.constant(p.w_c),
                        g.constant(p.b_f), g.constant(p.b_u), g.constant(p.b_o), g.constant(p.b_c)};
  };
  auto gru_vars = [&](const nn::GruParams& p) {
    return nn::GruVars{g.constant(p.w_u), g.constant(p.u_u), g.constant(p.w_r), g.constant(p.u_r), g.constant(p.w_h),
                       g.constant(p.u_h), g.constant(p.b_u), g.constant(p.b_r), g.constant(p.b_h)};
  };
  const Var x = g.constant(seq);
  const Tensor& lstm = g.value(nn::bilstm_features(g, x, mask, lstm_vars(f), lstm_vars(b)));
  const Tensor ref = nn::bilstm_forward(seq, mask, f, b);
  CHECK(lstm == ref);
  CHECK(g.value(nn::bigru_features(g, x, mask, gru_vars(gf), gru_vars(gb))) == nn::bigru_forward(seq, mask, gf, gb));

  // forward half by hand: three steps from zero state
  std::vector<double> c(h, 0.0), a(h, 0.0);
  for (std::size_t s = 0; s < 3; ++s) {
    const auto out = oracle::lstm_step({seq.row_span(s).begin(), seq.row_span(s).end()}, c, a, f);
    c = out.c;
    a = out.a;
  }
  for (std::size_t j = 0; j < h; ++j) CHECK(std::abs(ref.data[j] - a[j]) < 1e-12);

  const std::vector<std::uint8_t> none(t, 0);
  CHECK_THROWS_AS(nn::bilstm_forward(seq, none, f, b), Error);
}

TEST_CASE("head presets") {
  using K = nn::HeadLayerKind;
  auto kinds = [](const nn::HeadSpec& s) {
    std::vector<K> k;
    for (const auto& l : s.layers) k.push_back(l.kind);
    return k;
  };
  CHECK(kinds(nn::HeadSpec::preset("bert", 8, 32, 2, 0.1)) == std::vector<K>{K::Dropout, K::Linear});
  CHECK(kinds(nn::HeadSpec::preset("gpt2", 8, 32, 2, 0.1)) == std::vector<K>{K::Dropout, K::Linear});
  CHECK(kinds(nn::HeadSpec::preset("distilbert", 8, 32, 2, 0.1)) ==
        std::vector<K>{K::Linear, K::Relu, K::Dropout, K::Linear});
  CHECK(kinds(nn::HeadSpec::preset("roberta", 8, 32, 2, 0.1)) ==
        std::vector<K>{K::Dropout, K::Linear, K::Tanh, K::Dropout, K::Linear});
  CHECK(kinds(nn::HeadSpec::preset("gptj", 8, 32, 2, 0.1)) == std::vector<K>{K::Linear});
  CHECK(nn::HeadSpec::preset("roberta", 8, 32, 3, 0.1).linear_shapes() ==
        std::vector<std::pair<std::size_t, std::size_t>>{{8, 32}, {32, 3}});
  CHECK_THROWS_AS(nn::HeadSpec::preset("xlnet", 8, 32, 2, 0.1), Error);
  CHECK_THROWS_AS(nn::HeadSpec::preset("bert", 8, 32, 2, 1.0), Error);
}

TEST_CASE("dropout is off at inference and seeded in training") {
  Rng rng(3);
  const auto spec = nn::HeadSpec::preset("roberta", 6, 8, 2, 0.5);
  const auto p = nn::HeadParams::random(spec, rng);
  const Tensor x = random_tensor(rng, 1, 6);
  CHECK(nn::classification_head(x, spec, p, nullptr, false) == nn::classification_head(x, spec, p, nullptr, false));
  Rng a(9), b(9);
  CHECK(nn::classification_head(x, spec, p, &a, true) == nn::classification_head(x, spec, p, &b, true));
}

TEST_CASE("model gradients match central differences") {
  for (auto arch : {Architecture::Transformer, Architecture::BiLstm, Architecture::BiGru}) {
    for (const char* head : {"bert", "roberta", "distilbert"}) {
      auto config = tiny(arch);
      config.head = head;
      config.head_width = 6;
      Model model(config, 17);
      const auto seq = sequence({2, 5, 7, 9, 3, 0}, 5);
      const auto check = oracle::check_model_gradients(model, seq, 1);
      CHECK_MESSAGE(check.worst < 1e-4, to_string(arch), " ", head, " ", check.worst_param, " ", check.worst);
      CHECK(check.checked == model.params().scalar_count());
    }
  }
}

TEST_CASE("trimming padding equals masking it") {
  for (auto arch : {Architecture::Transformer, Architecture::BiLstm, Architecture::BiGru}) {
    for (auto pooling : {Pooling::First, Pooling::Last}) {
      auto config = tiny(arch);
      config.layers = 2;
      config.pooling = pooling;
      Model trimmed(config, 5);
      config.trim_padding = false;
      Model masked(config, trimmed.params());
      const auto seq = sequence({2, 4, 8, 3, 0, 0}, 4);
      const Tensor a = trimmed.logits(seq), b = masked.logits(seq);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-12);
    }
  }
}

TEST_CASE("PAD ids beyond the mask do not matter") {
  auto config = tiny(Architecture::Transformer);
  config.trim_padding = false;
  Model model(config, 21);
  auto seq = sequence({2, 4, 8, 3, 0, 0}, 4);
  const Tensor base = model.logits(seq);
  seq.ids[4] = 7;
  seq.ids[5] = 11;
  const Tensor changed = model.logits(seq);
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(std::abs(base.data[i] - changed.data[i]) < 1e-12);
}

TEST_CASE("model input validation") {
  Model model(tiny(Architecture::BiGru), 1);
  CHECK_THROWS_AS(model.logits(sequence({2, 3}, 2)), Error);
  CHECK_THROWS_AS(model.logits(sequence({2, 50, 3, 0, 0, 0}, 3)), Error);
  auto bad = tiny(Architecture::Transformer);
  bad.d_model = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = tiny(Architecture::Transformer);
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("checkpoint round-trip") {
  for (auto arch : {Architecture::Transformer, Architecture::BiLstm, Architecture::BiGru}) {
    auto config = tiny(arch);
    config.head = "roberta";
    const Model model(config, 77);
    const std::string bytes = serialize_checkpoint(model, {{"epoch", "3"}});
    CHECK(bytes.starts_with("GFCKPT1\n"));
    std::map<std::string, std::string> extra;
    const Model back = parse_checkpoint(bytes, &extra);
    CHECK(back.config() == model.config());
    CHECK(back.params() == model.params());
    CHECK(extra.at("epoch") == "3");
    CHECK(serialize_checkpoint(back, extra) == bytes);
    CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 3)), Error);
    CHECK_THROWS_AS(parse_checkpoint("GFCKPT9\n"), Error);
  }
  CHECK(ModelConfig::from_map(tiny(Architecture::BiLstm).to_map()) == tiny(Architecture::BiLstm));
}
