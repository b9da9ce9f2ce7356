// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gadgetforge/preprocessor.hpp"

namespace gadgetforge {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

/// A metric value; `defined` is false when its denominator was zero (the
/// value is then 0).
struct MetricValue {
  double value = 0.0;
  bool defined = false;
  bool operator==(const MetricValue&) const = default;
};

struct MetricSet {
  MetricValue fpr, fnr, precision, recall, f1;
  bool operator==(const MetricSet&) const = default;
};

/// One-vs-rest counts for `positive`. Throws Error(LengthMismatch).
ConfusionCounts confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                          std::size_t positive);

MetricSet metrics(const ConfusionCounts& c);

enum class AggregateMode { Global, Macro };

/// Global: metrics of the summed counts. Macro: unweighted mean of the
/// per-class P/R/F1 (undefined values count as 0; the mean is defined when
/// every class value is); FPR/FNR are left undefined. Throws
/// Error(NoVulnerableClasses) for empty input.
MetricSet aggregate(std::span<const MetricSet> per_class, std::span<const ConfusionCounts> counts, AggregateMode mode);

/// One row of a results table.
struct ResultRow {
  std::string group;
  std::string model;
  std::string fold;        // "1", "2", ... or "all" for a single split
  std::string class_name;  // class name, "global" or "macro"
  MetricSet metrics;
};

/// Per vulnerable class rows, plus global and macro rows when the scheme
/// has more than one vulnerable class.
std::vector<ResultRow> evaluate_predictions(std::span<const std::size_t> predictions,
                                            std::span<const std::size_t> labels, const LabelScheme& scheme,
                                            const std::string& group, const std::string& model,
                                            const std::string& fold = "all");

/// Long CSV: group,model,fold,class,metric,value,defined.
std::string report_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_report_csv(std::string_view text);

/// One aligned table per (group, class): metric rows FPR, FNR, Precision,
/// Recall, F1; one column per model, or per fold plus "avg" when a model
/// has several folds. Percentages with 2 decimals, "n/a" when undefined.
std::string report_table(const std::vector<ResultRow>& rows);

/// Mean of the defined values; undefined when none is.
MetricValue mean_defined(std::span<const MetricValue> values);

}  // namespace gadgetforge
