// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gadgetforge/graph.hpp"
#include "gadgetforge/nn.hpp"
#include "gadgetforge/tokenizer.hpp"

namespace gadgetforge {

/// Named tensors in insertion order.
class ParamStore {
 public:
  Tensor& add(std::string name, Tensor value);
  Tensor* find(std::string_view name);
  const Tensor* find(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& tensor(std::size_t i) { return values_[i]; }
  const Tensor& tensor(std::size_t i) const { return values_[i]; }
  std::size_t index(std::string_view name) const;
  /// Total number of scalars.
  std::size_t scalar_count() const;
  /// Same names and shapes, all zero.
  ParamStore zeros_like() const;
  void fill(double v);

  bool operator==(const ParamStore& o) const { return names_ == o.names_ && values_ == o.values_; }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Creates graph leaves for parameters on first use; gradients go to the
/// matching tensor of `grads` when it is non-null.
class Binder {
 public:
  Binder(Graph& g, const ParamStore& params, ParamStore* grads) : g_(g), params_(params), grads_(grads) {}
  Var operator()(std::string_view name);

 private:
  Graph& g_;
  const ParamStore& params_;
  ParamStore* grads_;
  std::unordered_map<std::string, Var> bound_;
};

enum class Architecture { Transformer, BiLstm, BiGru };
enum class Pooling { First, Last };

struct ModelConfig {
  Architecture arch = Architecture::Transformer;
  std::size_t vocab_size = 0;
  std::size_t max_len = 128;
  std::size_t d_model = 32;  // embedding width
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t ff_dim = 0;      // 0: 4 * d_model
  std::size_t hidden = 32;     // recurrent units per direction
  std::size_t classes = 2;
  Pooling pooling = Pooling::First;
  std::string head = "bert";
  std::size_t head_width = 0;  // 0: 4 * d_model
  double dropout = 0.1;
  /// Run the encoder over the active prefix only. Equivalent to masking the
  /// PAD positions, and cheaper.
  bool trim_padding = true;

  std::size_t feature_dim() const;
  std::size_t ff() const { return ff_dim ? ff_dim : 4 * d_model; }
  nn::HeadSpec head_spec() const;
  /// Throws Error(ConfigMismatch) or Error(OddModelDim).
  void validate() const;

  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
  bool operator==(const ModelConfig&) const = default;
};

std::string_view to_string(Architecture a);
Architecture parse_architecture(std::string_view s);

class Model {
 public:
  /// Fresh parameters, uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Model(ModelConfig config, std::uint64_t seed);
  /// Existing parameters; names and shapes must match the config.
  Model(ModelConfig config, ParamStore params);

  const ModelConfig& config() const { return config_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  /// 1 x classes logits node. Throws Error(ConfigMismatch) for a sequence
  /// of the wrong length or with out-of-vocabulary ids.
  Var forward(Graph& g, Binder& bind, const TokenSequence& seq, Rng* dropout_rng, bool training) const;
  /// Inference logits (dropout off).
  Tensor logits(const TokenSequence& seq) const;
  std::size_t predict(const TokenSequence& seq) const;

 private:
  Var encode_transformer(Graph& g, Binder& bind, const TokenSequence& seq) const;
  Var encode_recurrent(Graph& g, Binder& bind, const TokenSequence& seq) const;
  ParamStore init_params(std::uint64_t seed) const;

  ModelConfig config_;
  ParamStore params_;
  Tensor pe_;
};

/// "GFCKPT1\n", "key = value" config lines, "tensors = N", a blank line,
/// then per tensor: u32 name length, name, u64 rows, u64 cols, f64 values,
/// all little-endian.
std::string serialize_checkpoint(const Model& model, const std::map<std::string, std::string>& extra = {});
Model parse_checkpoint(std::string_view bytes, std::map<std::string, std::string>* extra = nullptr);
void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const std::map<std::string, std::string>& extra = {});
Model load_checkpoint(const std::filesystem::path& path, std::map<std::string, std::string>* extra = nullptr);

}  // namespace gadgetforge
