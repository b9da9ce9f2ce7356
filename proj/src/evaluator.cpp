// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/evaluator.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <sstream>

#include "gadgetforge/error.hpp"

namespace gadgetforge {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

ConfusionCounts confusion(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                          std::size_t positive) {
  if (predictions.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, "predictions and labels differ in length", predictions.size());
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == positive;
    const bool gold = labels[i] == positive;
    if (pred && gold) {
      ++c.tp;
    } else if (pred) {
      ++c.fp;
    } else if (gold) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

namespace {

MetricValue ratio(std::size_t num, std::size_t den) {
  if (den == 0) return {};
  return {static_cast<double>(num) / static_cast<double>(den), true};
}

MetricValue f1_of(const MetricValue& p, const MetricValue& r) {
  if (!p.defined || !r.defined || p.value + r.value == 0.0) return {};
  return {2.0 * p.value * r.value / (p.value + r.value), true};
}

}  // namespace

MetricSet metrics(const ConfusionCounts& c) {
  MetricSet m;
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.fnr = ratio(c.fn, c.fn + c.tp);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = f1_of(m.precision, m.recall);
  return m;
}

MetricSet aggregate(std::span<const MetricSet> per_class, std::span<const ConfusionCounts> counts, AggregateMode mode) {
  if (mode == AggregateMode::Global) {
    if (counts.empty()) throw Error(Errc::NoVulnerableClasses, "nothing to aggregate");
    ConfusionCounts sum;
    for (const auto& c : counts) sum += c;
    return metrics(sum);
  }
  if (per_class.empty()) throw Error(Errc::NoVulnerableClasses, "nothing to aggregate");
  auto mean = [&](MetricValue MetricSet::*field) {
    MetricValue out{0.0, true};
    for (const auto& m : per_class) {
      out.value += (m.*field).value;
      out.defined = out.defined && (m.*field).defined;
    }
    out.value /= static_cast<double>(per_class.size());
    return out;
  };
  MetricSet m;
  m.precision = mean(&MetricSet::precision);
  m.recall = mean(&MetricSet::recall);
  m.f1 = mean(&MetricSet::f1);
  return m;
}

std::vector<ResultRow> evaluate_predictions(std::span<const std::size_t> predictions,
                                            std::span<const std::size_t> labels, const LabelScheme& scheme,
                                            const std::string& group, const std::string& model,
                                            const std::string& fold) {
  if (scheme.classes() < 2) throw Error(Errc::NoVulnerableClasses, "scheme has no vulnerable class");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= scheme.classes()) throw Error(Errc::LabelOutOfRange, "label outside scheme", i);
  }
  std::vector<ResultRow> rows;
  std::vector<MetricSet> sets;
  std::vector<ConfusionCounts> counts;
  for (std::size_t c = 1; c < scheme.classes(); ++c) {
    counts.push_back(confusion(predictions, labels, c));
    sets.push_back(metrics(counts.back()));
    rows.push_back({group, model, fold, scheme.class_names[c], sets.back()});
  }
  if (sets.size() > 1) {
    rows.push_back({group, model, fold, "global", aggregate(sets, counts, AggregateMode::Global)});
    rows.push_back({group, model, fold, "macro", aggregate(sets, counts, AggregateMode::Macro)});
  }
  return rows;
}

namespace {

constexpr std::array<std::pair<const char*, MetricValue MetricSet::*>, 5> kMetrics{{
    {"FPR", &MetricSet::fpr},
    {"FNR", &MetricSet::fnr},
    {"Precision", &MetricSet::precision},
    {"Recall", &MetricSet::recall},
    {"F1", &MetricSet::f1},
}};

std::string fmt_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string percent(const MetricValue& v) {
  if (!v.defined) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v.value);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string report_csv(const std::vector<ResultRow>& rows) {
  std::string out = "group,model,fold,class,metric,value,defined\n";
  for (const auto& r : rows) {
    for (const auto& [name, field] : kMetrics) {
      const MetricValue& v = r.metrics.*field;
      out += r.group + ',' + r.model + ',' + r.fold + ',' + r.class_name + ',' + name + ',' + fmt_value(v.value) + ',' +
             (v.defined ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::vector<ResultRow> parse_report_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> index;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7) throw Error(Errc::MalformedRecord, "report rows have 7 fields", lineno);
    auto key = std::make_tuple(f[0], f[1], f[2], f[3]);
    auto [it, inserted] = index.try_emplace(key, rows.size());
    if (inserted) rows.push_back({f[0], f[1], f[2], f[3], {}});
    auto field = std::find_if(kMetrics.begin(), kMetrics.end(), [&](const auto& m) { return f[4] == m.first; });
    if (field == kMetrics.end()) throw Error(Errc::MalformedRecord, "unknown metric " + f[4], lineno);
    MetricValue& v = rows[it->second].metrics.*(field->second);
    try {
      v.value = std::stod(f[5]);
    } catch (const std::exception&) {
      throw Error(Errc::MalformedRecord, "bad metric value", lineno);
    }
    v.defined = f[6] == "1";
  }
  return rows;
}

MetricValue mean_defined(std::span<const MetricValue> values) {
  MetricValue out;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (!v.defined) continue;
    out.value += v.value;
    ++n;
  }
  if (n == 0) return {};
  out.value /= static_cast<double>(n);
  out.defined = true;
  return out;
}

std::string report_table(const std::vector<ResultRow>& rows) {
  // Sections keep first-appearance order of (group, class); columns keep
  // first-appearance order of model and fold.
  std::vector<std::pair<std::string, std::string>> sections;
  std::vector<std::string> models;
  std::map<std::string, std::vector<std::string>> folds;
  for (const auto& r : rows) {
    const std::pair key{r.group, r.class_name};
    if (std::find(sections.begin(), sections.end(), key) == sections.end()) sections.push_back(key);
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    auto& f = folds[r.model];
    if (std::find(f.begin(), f.end(), r.fold) == f.end()) f.push_back(r.fold);
  }

  std::string out;
  for (const auto& [group, cls] : sections) {
    std::vector<std::string> header{"Metric"};
    std::vector<std::vector<std::string>> body(kMetrics.size());
    for (std::size_t m = 0; m < kMetrics.size(); ++m) body[m].push_back(kMetrics[m].first);
    for (const auto& model : models) {
      const auto& fl = folds[model];
      std::vector<const ResultRow*> found;
      for (const auto& f : fl) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const ResultRow& r) {
          return r.group == group && r.class_name == cls && r.model == model && r.fold == f;
        });
        found.push_back(it == rows.end() ? nullptr : &*it);
      }
      if (std::all_of(found.begin(), found.end(), [](auto* p) { return p == nullptr; })) continue;
      const bool multi = fl.size() > 1;
      for (std::size_t k = 0; k < fl.size(); ++k) header.push_back(multi ? model + " fold " + fl[k] : model);
      if (multi) header.push_back(model + " avg");
      for (std::size_t m = 0; m < kMetrics.size(); ++m) {
        std::vector<MetricValue> vals;
        for (const ResultRow* r : found) {
          const MetricValue v = r ? r->metrics.*(kMetrics[m].second) : MetricValue{};
          body[m].push_back(percent(v));
          if (r) vals.push_back(v);
        }
        if (multi) body[m].push_back(percent(mean_defined(vals)));
      }
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
      width[c] = header[c].size();
      for (const auto& row : body) width[c] = std::max(width[c], row[c].size());
    }
    auto emit = [&](const std::vector<std::string>& cells) {
      std::string line;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c) line += "  ";
        const std::size_t pad = width[c] - cells[c].size();
        line += c == 0 ? cells[c] + std::string(pad, ' ') : std::string(pad, ' ') + cells[c];
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out += line + '\n';
    };
    out += "[" + group + " / " + cls + "]\n";
    emit(header);
    for (const auto& row : body) emit(row);
    out += '\n';
  }
  return out;
}

}  // namespace gadgetforge
