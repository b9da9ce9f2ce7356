// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>

#include "gadgetforge/error.hpp"
#include "gadgetforge/kernels.hpp"

namespace gadgetforge {

void TrainConfig::validate() const {
  auto bad = [](const char* what) { throw Error(Errc::ConfigMismatch, what); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) bad("learning rate must be finite and >= 0");
  if (!(weight_decay >= 0.0)) bad("weight decay must be >= 0");
  if (warmup_steps == 0) bad("warmup steps must be positive");
  if (batch_size == 0) bad("batch size must be positive");
  if (epochs == 0) bad("epochs must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) bad("momentum must be in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) bad("adam betas must be in [0, 1)");
}

std::string_view to_string(ScheduleMode m) { return m == ScheduleMode::Linear ? "linear" : "stepwise6pct"; }

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::AdamW: return "adamw";
  }
  return "?";
}

ScheduleMode parse_schedule(std::string_view s) {
  if (s == "linear") return ScheduleMode::Linear;
  if (s == "stepwise6pct") return ScheduleMode::Stepwise6pct;
  throw Error(Errc::ConfigMismatch, "unknown schedule: " + std::string(s));
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "momentum") return OptimizerKind::Momentum;
  if (s == "adamw") return OptimizerKind::AdamW;
  throw Error(Errc::ConfigMismatch, "unknown optimizer: " + std::string(s));
}

std::size_t total_iterations(std::size_t samples, std::size_t epochs, std::size_t batch) {
  return (samples + batch - 1) / batch * epochs;
}

double lr_at(std::size_t step, const TrainConfig& config, std::size_t total) {
  if (step >= total) throw Error(Errc::StepOutOfRange, "step beyond the last iteration", step);
  const double lr = config.learning_rate;
  const auto w = static_cast<double>(config.warmup_steps);
  const auto s = static_cast<double>(step);
  if (config.schedule == ScheduleMode::Stepwise6pct) {
    return lr * std::pow(0.94, std::floor(s / w));
  }
  if (step < config.warmup_steps) return lr * s / w;
  const auto last = static_cast<double>(total - 1);
  if (last <= w) return lr;  // run ends inside warmup: no decay phase
  return lr * (last - s) / (last - w);
}

std::size_t RunLog::training_steps() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.eval ? 0 : 1;
  return n;
}

std::size_t RunLog::eval_rows() const { return rows.size() - training_steps(); }

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string metric_cell(const MetricValue& v) { return v.defined ? num(v.value) : ""; }

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined key
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string RunLog::csv() const {
  std::string out = "epoch,step,lr,loss,eval_fpr,eval_fnr,eval_precision,eval_recall,eval_f1\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch) + ',' + std::to_string(r.step) + ',' + (r.lr ? num(*r.lr) : "") + ',' +
           (r.loss ? num(*r.loss) : "");
    if (r.eval) {
      const MetricSet& m = *r.eval;
      out += ',' + metric_cell(m.fpr) + ',' + metric_cell(m.fnr) + ',' + metric_cell(m.precision) + ',' +
             metric_cell(m.recall) + ',' + metric_cell(m.f1);
    } else {
      out += ",,,,,";
    }
    out += '\n';
  }
  return out;
}

MetricSet split_metrics(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                        std::size_t classes) {
  if (classes <= 2) return metrics(confusion(predictions, labels, 1));
  std::vector<ConfusionCounts> counts;
  for (std::size_t c = 1; c < classes; ++c) counts.push_back(confusion(predictions, labels, c));
  return aggregate({}, counts, AggregateMode::Global);
}

std::vector<std::size_t> predict_all(const Model& model, std::span<const Example> examples) {
  std::vector<std::size_t> out(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  std::vector<std::exception_ptr> errors(examples.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = model.predict(examples[k].seq);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

namespace {

void flatten(const ParamStore& p, std::vector<double>& out) {
  out.clear();
  out.reserve(p.scalar_count());
  for (std::size_t i = 0; i < p.size(); ++i) out.insert(out.end(), p.tensor(i).data.begin(), p.tensor(i).data.end());
}

}  // namespace

TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> eval_set,
                  const TrainConfig& config, const std::filesystem::path* checkpoint,
                  const std::function<void(const RunLogRow&)>& on_row) {
  config.validate();
  if (train_set.empty()) throw Error(Errc::TooFewRecords, "empty training set");
  const std::size_t classes = model.config().classes;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (train_set[i].label >= classes) throw Error(Errc::LabelOutOfRange, "training label exceeds class count", i);
  }

  ParamStore& params = model.params();
  const std::size_t scalars = params.scalar_count();
  const std::size_t total = total_iterations(train_set.size(), config.epochs, config.batch_size);

  std::vector<double> m1(config.optimizer == OptimizerKind::Sgd ? 0 : scalars, 0.0);
  std::vector<double> m2(config.optimizer == OptimizerKind::AdamW ? scalars : 0, 0.0);

  TrainResult result;
  result.best_params = params;
  double best = -1.0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.seed);

  std::vector<std::vector<double>> sample_grads(config.batch_size);
  std::vector<double> sample_loss(config.batch_size);
  std::vector<std::exception_ptr> sample_error(config.batch_size);
  std::vector<double> grad(scalars);
  std::size_t step = 0;

  auto emit = [&](RunLogRow row) {
    if (on_row) on_row(row);
    result.log.rows.push_back(std::move(row));
  };

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      const double lr = lr_at(step, config, total);
      const double scale = 1.0 / static_cast<double>(count);
      const auto n = static_cast<std::ptrdiff_t>(count);

#pragma omp parallel for schedule(static) if (config.parallel)
      for (std::ptrdiff_t b = 0; b < n; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        try {
          const Example& ex = train_set[order[start + bi]];
          ParamStore grads = params.zeros_like();
          Graph g;
          Binder bind(g, params, &grads);
          Rng dropout(mix(config.seed, mix(step, bi)));
          const Var loss = g.cross_entropy(model.forward(g, bind, ex.seq, &dropout, true), ex.label);
          sample_loss[bi] = g.value(loss).data[0];
          g.backward(loss, scale);
          flatten(grads, sample_grads[bi]);
        } catch (...) {
          sample_error[bi] = std::current_exception();
        }
      }
      for (auto& e : sample_error) {
        if (e) std::rethrow_exception(e);
      }

      double loss = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        if (!std::isfinite(sample_loss[b])) {
          throw Error(Errc::NonFiniteLoss,
                      "loss " + num(sample_loss[b]) + " at epoch " + std::to_string(epoch) + ", batch offset " +
                          std::to_string(start) + ", lr " + num(lr),
                      step);
        }
        loss += sample_loss[b];
      }
      loss *= scale;

      const std::span<const std::vector<double>> parts(sample_grads.data(), count);
      if (config.parallel) {
        kernels::sum_ordered_parallel(parts, grad);
      } else {
        kernels::sum_ordered_serial(parts, grad);
      }

      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step + 1));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step + 1));
      std::size_t k = 0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        for (double& w : params.tensor(p).data) {
          const double g = grad[k];
          double update = g;
          if (config.optimizer == OptimizerKind::Momentum) {
            m1[k] = config.momentum * m1[k] + g;
            update = m1[k];
          } else if (config.optimizer == OptimizerKind::AdamW) {
            m1[k] = config.beta1 * m1[k] + (1.0 - config.beta1) * g;
            m2[k] = config.beta2 * m2[k] + (1.0 - config.beta2) * g * g;
            update = (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + config.adam_eps);
          }
          w -= lr * config.weight_decay * w;
          w -= lr * update;
          ++k;
        }
      }
      ++step;
      emit({epoch, step, lr, loss, std::nullopt});
    }

    std::vector<std::size_t> labels;
    for (const auto& ex : eval_set) labels.push_back(ex.label);
    MetricSet m;
    if (!eval_set.empty()) {
      const auto preds = predict_all(model, eval_set);
      m = split_metrics(preds, labels, classes);
    }
    emit({epoch, step, std::nullopt, std::nullopt, m});
    const double f1 = m.f1.defined ? m.f1.value : 0.0;
    if (f1 > best) {
      best = f1;
      result.best_epoch = epoch;
      result.best_f1 = m.f1;
      result.best_params = params;
      if (checkpoint) save_checkpoint(*checkpoint, model, {{"epoch", std::to_string(epoch)}});
    }
  }
  return result;
}

}  // namespace gadgetforge
