// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "gadgetforge/error.hpp"
#include "gadgetforge/evaluator.hpp"
#include "gadgetforge/rng.hpp"
#include "oracles.hpp"

using namespace gadgetforge;

namespace {

// Predictions/labels realizing the given binary counts.
void realize(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn, std::vector<std::size_t>& p,
             std::vector<std::size_t>& l) {
  p.clear();
  l.clear();
  auto push = [&](std::size_t n, std::size_t pred, std::size_t label) {
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(pred);
      l.push_back(label);
    }
  };
  push(tp, 1, 1);
  push(fp, 1, 0);
  push(tn, 0, 0);
  push(fn, 0, 1);
}

MetricSet with_f1(double f1) {
  MetricSet m;
  m.f1 = {f1, true};
  return m;
}

}  // namespace

TEST_CASE("confusion is one-vs-rest") {
  const std::vector<std::size_t> p = {1, 0, 1}, l = {1, 0, 1};
  CHECK(confusion(p, l, 1) == ConfusionCounts{2, 0, 1, 0});
  const std::vector<std::size_t> z(4, 0), o(4, 1);
  CHECK(confusion(z, o, 1).fn == 4);
  const std::vector<std::size_t> p3 = {0, 1, 2, 2}, l3 = {1, 0, 2, 1};
  CHECK(confusion(p3, l3, 2) == ConfusionCounts{1, 1, 2, 0});
  const std::vector<std::size_t> shorter = {1};
  CHECK_THROWS_AS(confusion(shorter, l, 1), Error);
}

TEST_CASE("worked example") {
  const auto m = metrics({9, 1, 7, 3});
  CHECK(m.precision.value == doctest::Approx(0.9));
  CHECK(m.recall.value == doctest::Approx(0.75));
  CHECK(m.f1.value == doctest::Approx(0.818181818).epsilon(1e-8));
  CHECK(m.fpr.value == doctest::Approx(0.125));
  CHECK(m.fnr.value == doctest::Approx(0.25));

  const auto perfect = metrics({4, 0, 3, 0});
  CHECK(perfect.fpr.value == 0.0);
  CHECK(perfect.f1.value == 1.0);

  const auto none = metrics({0, 0, 5, 2});
  CHECK_FALSE(none.precision.defined);
  CHECK(none.precision.value == 0.0);
}

TEST_CASE("all 1296 confusion matrices with entries 0..5 match the rational oracle") {
  std::vector<std::size_t> p, l;
  int cases = 0;
  for (std::size_t tp = 0; tp <= 5; ++tp)
    for (std::size_t fp = 0; fp <= 5; ++fp)
      for (std::size_t tn = 0; tn <= 5; ++tn)
        for (std::size_t fn = 0; fn <= 5; ++fn) {
          ++cases;
          realize(tp, fp, tn, fn, p, l);
          const auto c = confusion(p, l, 1);
          REQUIRE(c == ConfusionCounts{tp, fp, tn, fn});
          const auto got = metrics(c);
          const auto want = oracle::metrics(static_cast<long long>(tp), static_cast<long long>(fp),
                                            static_cast<long long>(tn), static_cast<long long>(fn));
          CHECK(oracle::matches(want.fpr, got.fpr));
          CHECK(oracle::matches(want.fnr, got.fnr));
          CHECK(oracle::matches(want.precision, got.precision));
          CHECK(oracle::matches(want.recall, got.recall));
          CHECK(oracle::matches(want.f1, got.f1));
          if (got.recall.defined) CHECK(std::abs(got.recall.value + got.fnr.value - 1.0) < 1e-15);
          if (got.f1.defined) {
            CHECK(got.f1.value > 0.0);
            CHECK(got.f1.value <= 1.0);
          }
        }
  CHECK(cases == 1296);
}

TEST_CASE("macro and global aggregation") {
  const std::vector<ConfusionCounts> counts = {{1, 0, 0, 1}, {3, 1, 0, 0}};
  const std::vector<MetricSet> sets = {metrics(counts[0]), metrics(counts[1])};
  const auto macro = aggregate(sets, counts, AggregateMode::Macro);
  const auto global = aggregate(sets, counts, AggregateMode::Global);
  CHECK(macro.precision.value == doctest::Approx(0.875));
  CHECK(global.precision.value == doctest::Approx(0.8));
  CHECK_FALSE(macro.fpr.defined);

  // single class: both modes equal the class
  CHECK(aggregate(std::span(sets).first(1), std::span(counts).first(1), AggregateMode::Global) == sets[0]);
  CHECK(aggregate(std::span(sets).first(1), std::span(counts).first(1), AggregateMode::Macro).f1 == sets[0].f1);

  // order invariance
  const std::vector<ConfusionCounts> rc = {counts[1], counts[0]};
  const std::vector<MetricSet> rs = {sets[1], sets[0]};
  CHECK(aggregate(rs, rc, AggregateMode::Macro).f1.value == doctest::Approx(macro.f1.value));
  CHECK(aggregate(rs, rc, AggregateMode::Global) == global);

  // an undefined class value counts as 0 and makes the mean undefined
  const std::vector<MetricSet> gap = {metrics({0, 0, 4, 0}), metrics({2, 0, 2, 0})};
  const auto m = aggregate(gap, {}, AggregateMode::Macro);
  CHECK_FALSE(m.precision.defined);
  CHECK(m.precision.value == doctest::Approx(0.5));

  CHECK_THROWS_AS(aggregate({}, {}, AggregateMode::Macro), Error);
  CHECK_THROWS_AS(aggregate({}, {}, AggregateMode::Global), Error);
}

TEST_CASE("evaluate_predictions rows") {
  const std::vector<std::size_t> p = {0, 1, 2, 2, 1}, l = {0, 1, 2, 1, 0};
  const auto rows = evaluate_predictions(p, l, LabelScheme::multiclass({"BE", "RME"}), "group3", "bilstm");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].class_name == "BE");
  CHECK(rows[1].class_name == "RME");
  CHECK(rows[2].class_name == "global");
  CHECK(rows[3].class_name == "macro");
  CHECK(rows[0].fold == "all");
  CHECK(evaluate_predictions(p, std::vector<std::size_t>{0, 1, 1, 1, 0}, LabelScheme::binary("BE"), "g", "m").size() == 1);
}

TEST_CASE("csv round-trip keeps undefined flags") {
  const std::vector<std::size_t> p = {0, 0, 2, 2}, l = {0, 1, 2, 1};
  const auto rows = evaluate_predictions(p, l, LabelScheme::multiclass({"BE", "RME"}), "g", "m", "2");
  const std::string csv = report_csv(rows);
  CHECK(csv.starts_with("group,model,fold,class,metric,value,defined\n"));
  const auto back = parse_report_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].class_name == rows[i].class_name);
    CHECK(back[i].metrics == rows[i].metrics);
  }
  CHECK(report_csv(back) == csv);
}

TEST_CASE("text table: fold average and n/a") {
  std::vector<ResultRow> rows;
  const double f1s[] = {0.93, 0.94, 0.95};
  for (int k = 0; k < 3; ++k) rows.push_back({"group1", "gpt2", std::to_string(k + 1), "BE", with_f1(f1s[k])});
  const std::string table = report_table(rows);
  CHECK(table.find("[group1 / BE]") != std::string::npos);
  CHECK(table.find("gpt2 avg") != std::string::npos);
  CHECK(table.find("94.00%") != std::string::npos);
  CHECK(table.find("93.00%") != std::string::npos);
  CHECK(table.find("n/a") != std::string::npos);
  CHECK(table.find("0.00%") == std::string::npos);

  std::size_t lines = 0;
  for (char c : report_table({{"g", "m", "all", "BE", metrics({9, 1, 7, 3})}})) lines += c == '\n';
  CHECK(lines == 1 + 1 + 5 + 1);  // section, header, 5 metrics, blank

  const std::vector<MetricValue> vals = {{0.5, true}, {0.0, false}, {1.0, true}};
  CHECK(mean_defined(vals).value == doctest::Approx(0.75));
  CHECK_FALSE(mean_defined(std::span(vals).subspan(1, 1)).defined);
}
