// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <map>

#include "gadgetforge/cleaner.hpp"
#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/error.hpp"
#include "gadgetforge/synthetic.hpp"
#include "gadgetforge/tokenizer.hpp"
#include "gadgetforge/trainer.hpp"

using namespace gadgetforge;

namespace {

struct Outcome {
  double accuracy = 0;
  double majority = 0;
};

// Trains a small BiGRU on 80% of the records and scores the rest.
Outcome fit_and_score(const std::vector<GadgetRecord>& records) {
  std::vector<std::string> texts;
  for (const auto& r : records) texts.push_back(gadget_text(r));
  const auto vocab = build_word_vocab(texts, 400);

  std::vector<Example> train_set, test_set;
  for (std::size_t i = 0; i < records.size(); ++i) {
    Example ex{encode(texts[i], vocab, 64), *records[i].label};
    (i % 5 == 4 ? test_set : train_set).push_back(ex);
  }

  ModelConfig mc;
  mc.arch = Architecture::BiGru;
  mc.vocab_size = vocab.size();
  mc.max_len = 64;
  mc.d_model = 8;
  mc.hidden = 8;
  mc.dropout = 0.0;
  Model model(mc, 1);
  TrainConfig tc;
  tc.learning_rate = 0.01;
  tc.weight_decay = 0.0;
  tc.warmup_steps = 5;
  tc.batch_size = 16;
  tc.epochs = 4;
  tc.optimizer = OptimizerKind::AdamW;
  train(model, train_set, {}, tc);

  const auto preds = predict_all(model, test_set);
  std::map<std::size_t, std::size_t> label_count;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    hits += preds[i] == test_set[i].label;
    ++label_count[test_set[i].label];
  }
  std::size_t majority = 0;
  for (const auto& [l, n] : label_count) majority = std::max(majority, n);
  const auto n = static_cast<double>(test_set.size());
  return {static_cast<double>(hits) / n, static_cast<double>(majority) / n};
}

}  // namespace

TEST_CASE("balanced and deterministic") {
  GeneratorSpec spec;
  spec.seed = 4;
  const auto a = generate(spec);
  REQUIRE(a.size() == 20);
  std::map<unsigned, int> per;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++per[*a[i].label];
    CHECK(a[i].id == i + 1);
    CHECK(a[i].origin == Origin::Synthetic);
  }
  CHECK(per[0] == 10);
  CHECK(per[1] == 10);
  CHECK(generate(spec) == a);
  spec.seed = 5;
  CHECK(generate(spec) != a);
}

TEST_CASE("categories") {
  CHECK(synthetic_category(1) == "BE");
  CHECK(synthetic_category(2) == "RME");
  CHECK(max_synthetic_classes() == 6);
  CHECK_THROWS_AS(synthetic_category(0), Error);
  GeneratorSpec spec;
  spec.classes = 7;
  CHECK_THROWS_AS(generate(spec), Error);
  spec.classes = 2;
  spec.min_noise = 9;
  CHECK_THROWS_AS(generate(spec), Error);
}

TEST_CASE("multiclass corpora survive IO and cleaning untouched") {
  for (std::size_t classes = 2; classes <= max_synthetic_classes(); ++classes) {
    GeneratorSpec spec;
    spec.classes = classes;
    spec.per_class = 60;
    spec.seed = classes;
    const auto recs = generate(spec);
    ParseOptions po;
    po.label_classes = static_cast<unsigned>(classes);
    po.origin = Origin::Synthetic;
    auto back = parse_gadget_corpus(write_gadget_corpus(recs), po);
    for (std::size_t i = 0; i < back.size(); ++i) back[i].category = recs[i].category;
    CHECK(back == recs);
    const auto cleaned = clean_corpus(recs);
    CHECK(cleaned.kept.size() == recs.size());
    CHECK(cleaned.report.totals().conflicting == 0);
    CHECK(cleaned.report.totals().redundant == 0);
  }
}

TEST_CASE("NV records rotate through the categories") {
  GeneratorSpec spec;
  spec.classes = 3;
  spec.per_class = 6;
  std::map<std::string, int> nv;
  for (const auto& r : generate(spec)) {
    if (*r.label == 0) ++nv[r.category];
  }
  CHECK(nv["BE"] == 3);
  CHECK(nv["RME"] == 3);
}

TEST_CASE("motifs make the task learnable; removing them drops to chance") {
  GeneratorSpec spec;
  spec.per_class = 300;
  spec.seed = 2;
  const auto with = fit_and_score(generate(spec));
  CHECK(with.accuracy >= 0.95);

  spec.include_motif = false;
  const auto ablated = generate(spec);
  for (const auto& r : ablated) {
    for (const auto& line : r.body) {
      CHECK(line.find("strcpy") == std::string::npos);
      CHECK(line.find("strncpy") == std::string::npos);
    }
  }
  const auto without = fit_and_score(ablated);
  MESSAGE("accuracy with motif ", with.accuracy, ", without ", without.accuracy, ", majority ", without.majority);
  CHECK(without.accuracy <= without.majority + 0.15);
}
