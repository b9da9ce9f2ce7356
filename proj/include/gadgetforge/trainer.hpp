// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gadgetforge/evaluator.hpp"
#include "gadgetforge/model.hpp"
#include "gadgetforge/tokenizer.hpp"

namespace gadgetforge {

enum class ScheduleMode { Linear, Stepwise6pct };
enum class OptimizerKind { Sgd, Momentum, AdamW };

struct TrainConfig {
  double learning_rate = 1.0e-5;
  double weight_decay = 0.06;
  std::size_t warmup_steps = 500;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  ScheduleMode schedule = ScheduleMode::Linear;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Per-sample gradients computed on OpenMP threads. The ordered reduction
  /// makes the result identical to the serial path.
  bool parallel = true;

  /// Throws Error(ConfigMismatch).
  void validate() const;
};

std::string_view to_string(ScheduleMode m);
std::string_view to_string(OptimizerKind k);
ScheduleMode parse_schedule(std::string_view s);
OptimizerKind parse_optimizer(std::string_view s);

/// ceil(samples / batch) * epochs.
std::size_t total_iterations(std::size_t samples, std::size_t epochs, std::size_t batch);

/// Linear: lr * step / warmup during warmup, then straight down to 0 at the
/// final step (total - 1). Stepwise6pct: lr * 0.94^floor(step / warmup).
/// Throws Error(StepOutOfRange) unless step < total.
double lr_at(std::size_t step, const TrainConfig& config, std::size_t total);

struct Example {
  TokenSequence seq;
  std::size_t label = 0;
};

struct RunLogRow {
  std::size_t epoch = 0;
  std::size_t step = 0;  // steps taken so far (eval rows: at end of epoch)
  std::optional<double> lr;
  std::optional<double> loss;
  std::optional<MetricSet> eval;
};

struct RunLog {
  std::vector<RunLogRow> rows;

  std::size_t training_steps() const;
  std::size_t eval_rows() const;
  /// epoch,step,lr,loss,eval_fpr,eval_fnr,eval_precision,eval_recall,eval_f1
  std::string csv() const;
};

struct TrainResult {
  RunLog log;
  ParamStore best_params;
  std::size_t best_epoch = 0;
  MetricValue best_f1;
};

/// Vulnerable-class metric for a split: class 1 for binary tasks, the
/// global aggregate over classes 1.. otherwise.
MetricSet split_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                        std::size_t classes);

std::vector<std::size_t> predict_all(const Model& model, std::span<const Example> examples);

/// Trains `model` in place. After every epoch the model is evaluated on
/// `eval`; the parameters with the best F1 are returned (and written to
/// `checkpoint` when given). Throws Error(NonFiniteLoss) with the step.
TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> eval_set,
                  const TrainConfig& config, const std::filesystem::path* checkpoint = nullptr,
                  const std::function<void(const RunLogRow&)>& on_row = {});

}  // namespace gadgetforge
