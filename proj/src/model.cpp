// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/error.hpp"

namespace gadgetforge {

// ---- ParamStore ---------------------------------------------------------------

Tensor& ParamStore::add(std::string name, Tensor value) {
  if (index_.count(name)) throw Error(Errc::ConfigMismatch, "duplicate parameter " + name);
  index_.emplace(name, names_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.back();
}

Tensor* ParamStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &values_[it->second];
}

const Tensor* ParamStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &values_[it->second];
}

Tensor& ParamStore::at(std::string_view name) {
  if (Tensor* t = find(name)) return *t;
  throw Error(Errc::ConfigMismatch, "no parameter " + std::string(name));
}

const Tensor& ParamStore::at(std::string_view name) const {
  if (const Tensor* t = find(name)) return *t;
  throw Error(Errc::ConfigMismatch, "no parameter " + std::string(name));
}

std::size_t ParamStore::index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error(Errc::ConfigMismatch, "no parameter " + std::string(name));
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : values_) n += t.size();
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore z;
  for (std::size_t i = 0; i < size(); ++i) z.add(names_[i], Tensor(values_[i].rows, values_[i].cols));
  return z;
}

void ParamStore::fill(double v) {
  for (auto& t : values_) std::fill(t.data.begin(), t.data.end(), v);
}

Var Binder::operator()(std::string_view name) {
  auto it = bound_.find(std::string(name));
  if (it != bound_.end()) return it->second;
  const Var v = g_.leaf(params_.at(name), grads_ ? &grads_->at(name) : nullptr);
  bound_.emplace(std::string(name), v);
  return v;
}

// ---- config -------------------------------------------------------------------

std::string_view to_string(Architecture a) {
  switch (a) {
    case Architecture::Transformer: return "transformer";
    case Architecture::BiLstm: return "bilstm";
    case Architecture::BiGru: return "bigru";
  }
  return "?";
}

Architecture parse_architecture(std::string_view s) {
  if (s == "transformer") return Architecture::Transformer;
  if (s == "bilstm") return Architecture::BiLstm;
  if (s == "bigru") return Architecture::BiGru;
  throw Error(Errc::ConfigMismatch, "unknown architecture: " + std::string(s));
}

std::size_t ModelConfig::feature_dim() const {
  return arch == Architecture::Transformer ? d_model : 2 * hidden;
}

nn::HeadSpec ModelConfig::head_spec() const {
  return nn::HeadSpec::preset(head, feature_dim(), head_width ? head_width : 4 * d_model, classes, dropout);
}

void ModelConfig::validate() const {
  if (vocab_size <= Vocabulary::kSpecials) throw Error(Errc::ConfigMismatch, "vocab_size too small");
  if (max_len < 2) throw Error(Errc::ConfigMismatch, "max_len must be at least 2");
  if (d_model == 0 || classes < 2) throw Error(Errc::ConfigMismatch, "d_model and classes must be positive");
  if (arch == Architecture::Transformer) {
    if (d_model % 2 != 0) throw Error(Errc::OddModelDim, "d_model must be even", d_model);
    if (heads == 0 || d_model % heads != 0) throw Error(Errc::ConfigMismatch, "heads must divide d_model");
    if (layers == 0) throw Error(Errc::ConfigMismatch, "at least one encoder layer");
  } else if (hidden == 0) {
    throw Error(Errc::ConfigMismatch, "hidden must be positive");
  }
  head_spec();
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t get_size(const std::map<std::string, std::string>& kv, const std::string& key, std::size_t fallback) {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc{} || p != it->second.data() + it->second.size()) {
    throw Error(Errc::ConfigMismatch, "bad integer for " + key + ": " + it->second);
  }
  return v;
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {
      {"arch", std::string(to_string(arch))},
      {"vocab_size", std::to_string(vocab_size)},
      {"max_len", std::to_string(max_len)},
      {"d_model", std::to_string(d_model)},
      {"layers", std::to_string(layers)},
      {"heads", std::to_string(heads)},
      {"ff_dim", std::to_string(ff_dim)},
      {"hidden", std::to_string(hidden)},
      {"classes", std::to_string(classes)},
      {"pooling", pooling == Pooling::First ? "first" : "last"},
      {"head", head},
      {"head_width", std::to_string(head_width)},
      {"dropout", fmt_double(dropout)},
      {"trim_padding", trim_padding ? "true" : "false"},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  if (auto it = kv.find("arch"); it != kv.end()) c.arch = parse_architecture(it->second);
  c.vocab_size = get_size(kv, "vocab_size", c.vocab_size);
  c.max_len = get_size(kv, "max_len", c.max_len);
  c.d_model = get_size(kv, "d_model", c.d_model);
  c.layers = get_size(kv, "layers", c.layers);
  c.heads = get_size(kv, "heads", c.heads);
  c.ff_dim = get_size(kv, "ff_dim", c.ff_dim);
  c.hidden = get_size(kv, "hidden", c.hidden);
  c.classes = get_size(kv, "classes", c.classes);
  if (auto it = kv.find("pooling"); it != kv.end()) {
    if (it->second != "first" && it->second != "last") throw Error(Errc::ConfigMismatch, "pooling is first or last");
    c.pooling = it->second == "first" ? Pooling::First : Pooling::Last;
  }
  if (auto it = kv.find("head"); it != kv.end()) c.head = it->second;
  c.head_width = get_size(kv, "head_width", c.head_width);
  if (auto it = kv.find("dropout"); it != kv.end()) c.dropout = std::stod(it->second);
  if (auto it = kv.find("trim_padding"); it != kv.end()) c.trim_padding = it->second == "true";
  return c;
}

// ---- model --------------------------------------------------------------------

namespace {

std::string layer_key(std::size_t l, std::string_view leaf) { return "layer" + std::to_string(l) + "." + std::string(leaf); }

std::string head_key(std::size_t h, std::string_view leaf) { return "head" + std::to_string(h) + "." + std::string(leaf); }

}  // namespace

ParamStore Model::init_params(std::uint64_t seed) const {
  const ModelConfig& c = config_;
  Rng rng(seed);
  ParamStore p;
  // Embedding rows are indexed by a one-hot input, so fan_in is 1.
  p.add("embed", nn::uniform_init(c.vocab_size, c.d_model, 1, rng));
  if (c.arch == Architecture::Transformer) {
    const std::size_t d = c.d_model, dk = d / c.heads, f = c.ff();
    for (std::size_t l = 0; l < c.layers; ++l) {
      for (std::size_t h = 0; h < c.heads; ++h) {
        for (const char* w : {"wq", "wk", "wv"}) {
          p.add(layer_key(l, head_key(h, w)), nn::uniform_init(d, dk, d, rng));
        }
      }
      p.add(layer_key(l, "wo"), nn::uniform_init(c.heads * dk, d, c.heads * dk, rng));
      p.add(layer_key(l, "ln1.g"), Tensor(1, d, 1.0));
      p.add(layer_key(l, "ln1.b"), Tensor(1, d));
      p.add(layer_key(l, "ff1.w"), nn::uniform_init(d, f, d, rng));
      p.add(layer_key(l, "ff1.b"), nn::uniform_init(1, f, d, rng));
      p.add(layer_key(l, "ff2.w"), nn::uniform_init(f, d, f, rng));
      p.add(layer_key(l, "ff2.b"), nn::uniform_init(1, d, f, rng));
      p.add(layer_key(l, "ln2.g"), Tensor(1, d, 1.0));
      p.add(layer_key(l, "ln2.b"), Tensor(1, d));
    }
  } else {
    const std::size_t in = c.d_model, h = c.hidden;
    for (const char* dir : {"fwd.", "bwd."}) {
      const std::string pre = dir;
      if (c.arch == Architecture::BiLstm) {
        for (const char* w : {"w_f", "w_u", "w_o", "w_c"}) p.add(pre + w, nn::uniform_init(h + in, h, h + in, rng));
        for (const char* b : {"b_f", "b_u", "b_o", "b_c"}) p.add(pre + b, nn::uniform_init(1, h, h + in, rng));
      } else {
        for (const char* w : {"w_u", "w_r", "w_h"}) p.add(pre + w, nn::uniform_init(in, h, in, rng));
        for (const char* u : {"u_u", "u_r", "u_h"}) p.add(pre + u, nn::uniform_init(h, h, h, rng));
        for (const char* b : {"b_u", "b_r", "b_h"}) p.add(pre + b, nn::uniform_init(1, h, h, rng));
      }
    }
  }
  const auto shapes = c.head_spec().linear_shapes();
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [in, out] = shapes[i];
    p.add("cls" + std::to_string(i) + ".w", nn::uniform_init(in, out, in, rng));
    p.add("cls" + std::to_string(i) + ".b", nn::uniform_init(1, out, in, rng));
  }
  return p;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  params_ = init_params(seed);
  if (config_.arch == Architecture::Transformer) pe_ = nn::positional_encoding(config_.max_len, config_.d_model);
}

Model::Model(ModelConfig config, ParamStore params) : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const ParamStore expected = init_params(0);
  if (expected.size() != params_.size()) throw Error(Errc::ConfigMismatch, "parameter count does not match config");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Tensor* t = params_.find(expected.name(i));
    if (!t || !t->same_shape(expected.tensor(i))) {
      throw Error(Errc::ConfigMismatch, "parameter " + expected.name(i) + " missing or misshapen");
    }
  }
  if (config_.arch == Architecture::Transformer) pe_ = nn::positional_encoding(config_.max_len, config_.d_model);
}

Var Model::encode_transformer(Graph& g, Binder& bind, const TokenSequence& seq) const {
  const ModelConfig& c = config_;
  const std::size_t active = seq.active();
  const std::size_t n = c.trim_padding ? active : seq.length();
  const std::span<const TokenId> ids(seq.ids.data(), n);

  Tensor pe(n, c.d_model);
  std::copy(pe_.data.begin(), pe_.data.begin() + static_cast<std::ptrdiff_t>(n * c.d_model), pe.data.begin());
  Var x = g.add(g.gather_rows(bind("embed"), ids), g.constant(std::move(pe)));

  Tensor mask;
  if (!c.trim_padding) mask = nn::attention_mask(seq.mask);
  const Tensor* mask_ptr = c.trim_padding ? nullptr : &mask;

  for (std::size_t l = 0; l < c.layers; ++l) {
    nn::AttentionVars att;
    for (std::size_t h = 0; h < c.heads; ++h) {
      att.wq.push_back(bind(layer_key(l, head_key(h, "wq"))));
      att.wk.push_back(bind(layer_key(l, head_key(h, "wk"))));
      att.wv.push_back(bind(layer_key(l, head_key(h, "wv"))));
    }
    att.wo = bind(layer_key(l, "wo"));
    const Var a = nn::multi_head_attention(g, x, att, mask_ptr);
    x = g.layer_norm(g.add(x, a), bind(layer_key(l, "ln1.g")), bind(layer_key(l, "ln1.b")));
    const Var hidden = g.relu(g.add_row(g.matmul(x, bind(layer_key(l, "ff1.w"))), bind(layer_key(l, "ff1.b"))));
    const Var ff = g.add_row(g.matmul(hidden, bind(layer_key(l, "ff2.w"))), bind(layer_key(l, "ff2.b")));
    x = g.layer_norm(g.add(x, ff), bind(layer_key(l, "ln2.g")), bind(layer_key(l, "ln2.b")));
  }
  return g.slice_rows(x, c.pooling == Pooling::First ? 0 : active - 1, 1);
}

Var Model::encode_recurrent(Graph& g, Binder& bind, const TokenSequence& seq) const {
  const std::size_t active = seq.active();
  const Var x = g.gather_rows(bind("embed"), std::span<const TokenId>(seq.ids.data(), active));
  const std::span<const std::uint8_t> mask(seq.mask.data(), active);
  if (config_.arch == Architecture::BiLstm) {
    auto vars = [&](const std::string& d) {
      return nn::LstmVars{bind(d + "w_f"), bind(d + "w_u"), bind(d + "w_o"), bind(d + "w_c"),
                          bind(d + "b_f"), bind(d + "b_u"), bind(d + "b_o"), bind(d + "b_c")};
    };
    return nn::bilstm_features(g, x, mask, vars("fwd."), vars("bwd."));
  }
  auto vars = [&](const std::string& d) {
    return nn::GruVars{bind(d + "w_u"), bind(d + "u_u"), bind(d + "w_r"), bind(d + "u_r"), bind(d + "w_h"),
                       bind(d + "u_h"), bind(d + "b_u"), bind(d + "b_r"), bind(d + "b_h")};
  };
  return nn::bigru_features(g, x, mask, vars("fwd."), vars("bwd."));
}

Var Model::forward(Graph& g, Binder& bind, const TokenSequence& seq, Rng* dropout_rng, bool training) const {
  if (seq.length() != config_.max_len || seq.mask.size() != seq.ids.size()) {
    throw Error(Errc::ConfigMismatch, "sequence length differs from max_len");
  }
  const std::size_t active = seq.active();
  if (active == 0) throw Error(Errc::EmptySequence, "sequence has no active positions");
  for (std::size_t i = 0; i < seq.length(); ++i) {
    if (seq.ids[i] >= config_.vocab_size) throw Error(Errc::ConfigMismatch, "token id outside vocabulary", i);
    if ((i < active) != (seq.mask[i] != 0)) throw Error(Errc::ConfigMismatch, "mask is not a prefix", i);
  }
  const Var features =
      config_.arch == Architecture::Transformer ? encode_transformer(g, bind, seq) : encode_recurrent(g, bind, seq);
  const nn::HeadSpec spec = config_.head_spec();
  std::vector<Var> w, b;
  for (std::size_t i = 0; i < spec.linear_shapes().size(); ++i) {
    w.push_back(bind("cls" + std::to_string(i) + ".w"));
    b.push_back(bind("cls" + std::to_string(i) + ".b"));
  }
  return nn::classification_head(g, features, spec, w, b, dropout_rng, training);
}

Tensor Model::logits(const TokenSequence& seq) const {
  Graph g;
  Binder bind(g, params_, nullptr);
  return g.value(forward(g, bind, seq, nullptr, false));
}

std::size_t Model::predict(const TokenSequence& seq) const {
  const Tensor z = logits(seq);
  return static_cast<std::size_t>(std::max_element(z.data.begin(), z.data.end()) - z.data.begin());
}

// ---- checkpoints ----------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "GFCKPT1\n";

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct Reader {
  std::string_view bytes;
  std::size_t pos = 0;

  std::uint64_t u(int width) {
    if (pos + static_cast<std::size_t>(width) > bytes.size()) throw Error(Errc::MalformedRecord, "truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(width);
    return v;
  }
  std::string_view take(std::size_t n) {
    if (pos + n > bytes.size()) throw Error(Errc::MalformedRecord, "truncated checkpoint");
    auto s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string serialize_checkpoint(const Model& model, const std::map<std::string, std::string>& extra) {
  std::string out(kMagic);
  for (const auto& [k, v] : model.config().to_map()) out += k + " = " + v + "\n";
  for (const auto& [k, v] : extra) out += "x." + k + " = " + v + "\n";
  const ParamStore& p = model.params();
  out += "tensors = " + std::to_string(p.size()) + "\n\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Tensor& t = p.tensor(i);
    put_u32(out, static_cast<std::uint32_t>(p.name(i).size()));
    out += p.name(i);
    put_u64(out, t.rows);
    put_u64(out, t.cols);
    for (double v : t.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Model parse_checkpoint(std::string_view bytes, std::map<std::string, std::string>* extra) {
  if (!bytes.starts_with(kMagic)) throw Error(Errc::MalformedRecord, "not a checkpoint (bad magic)");
  const std::size_t end = bytes.find("\n\n", kMagic.size() - 1);
  if (end == std::string_view::npos) throw Error(Errc::MalformedRecord, "checkpoint header not terminated");
  std::map<std::string, std::string> kv;
  std::string_view header = bytes.substr(kMagic.size(), end + 1 - kMagic.size());
  while (!header.empty()) {
    const std::size_t nl = header.find('\n');
    std::string_view line = header.substr(0, nl);
    header.remove_prefix(nl == std::string_view::npos ? header.size() : nl + 1);
    const std::size_t eq = line.find(" = ");
    if (eq == std::string_view::npos) throw Error(Errc::MalformedRecord, "bad checkpoint header line");
    kv.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 3)));
  }
  std::map<std::string, std::string> cfg;
  for (const auto& [k, v] : kv) {
    if (k.starts_with("x.")) {
      if (extra) (*extra)[k.substr(2)] = v;
    } else if (k != "tensors") {
      cfg[k] = v;
    }
  }
  const std::size_t count = get_size(kv, "tensors", 0);
  Reader r{bytes, end + 2};
  ParamStore params;
  for (std::size_t i = 0; i < count; ++i) {
    const auto len = static_cast<std::size_t>(r.u(4));
    std::string name(r.take(len));
    const auto rows = static_cast<std::size_t>(r.u(8));
    const auto cols = static_cast<std::size_t>(r.u(8));
    if (rows * cols > (bytes.size() - r.pos) / 8) throw Error(Errc::MalformedRecord, "truncated checkpoint");
    Tensor t(rows, cols);
    for (double& v : t.data) v = std::bit_cast<double>(r.u(8));
    params.add(std::move(name), std::move(t));
  }
  if (r.pos != bytes.size()) throw Error(Errc::MalformedRecord, "trailing bytes after checkpoint tensors");
  return Model(ModelConfig::from_map(cfg), std::move(params));
}

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::map<std::string, std::string>& extra) {
  write_file_atomic(path, serialize_checkpoint(model, extra));
}

Model load_checkpoint(const std::filesystem::path& path, std::map<std::string, std::string>* extra) {
  return parse_checkpoint(read_file(path), extra);
}

}  // namespace gadgetforge
