// SPDX-License-Identifier: Apache-2.0
// Runs the nine acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "gadgetforge/cleaner.hpp"
#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/evaluator.hpp"
#include "gadgetforge/extractor.hpp"
#include "gadgetforge/model.hpp"
#include "gadgetforge/nn.hpp"
#include "gadgetforge/preprocessor.hpp"
#include "gadgetforge/rng.hpp"
#include "gadgetforge/synthetic.hpp"
#include "gadgetforge/tokenizer.hpp"
#include "gadgetforge/trainer.hpp"
#include "oracles.hpp"
#include "pipeline_run.hpp"

using namespace gadgetforge;
namespace fs = std::filesystem;

namespace {

const fs::path kData = GADGETFORGE_TEST_DATA;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1 ---------------------------------------------------------------------------

std::optional<fs::path> find_corpus_file(const fs::path& dir, const std::string& cwe) {
  if (!fs::is_directory(dir)) return std::nullopt;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.find(cwe) != std::string::npos &&
        (e.path().extension() == ".txt" || e.path().extension() == ".cgd")) {
      return e.path();
    }
  }
  return std::nullopt;
}

struct Expected {
  std::size_t vuln = 0, nv = 0;
};

Verdict clean_released_corpus(const fs::path& dir) {
  const auto be_path = find_corpus_file(dir, "119"), rme_path = find_corpus_file(dir, "399");
  if (!be_path || !rme_path) return {false, "corpus directory lacks CWE-119/CWE-399 files"};
  const auto t0 = std::chrono::steady_clock::now();
  const auto be = parse_gadget_corpus(read_file(*be_path));
  const auto rme = parse_gadget_corpus(read_file(*rme_path));
  auto merged = be;
  merged.insert(merged.end(), rme.begin(), rme.end());

  auto run = [&](const CanonOptions& canon) {
    CleanOptions o;
    o.canon = canon;
    const auto a = clean_corpus(be, o).report, b = clean_corpus(rme, o).report, m = clean_corpus(merged, o).report;
    auto cleaned = [](const CleanReport& r, unsigned l) {
      auto it = r.classes.find(l);
      return it == r.classes.end() ? std::size_t{0} : it->second.cleaned;
    };
    const auto t = m.totals();
    const bool exact = cleaned(a, 1) == 7649 && cleaned(a, 0) == 12262 && cleaned(b, 1) == 2757 &&
                       cleaned(b, 0) == 5010 && cleaned(m, 1) == 10395 && cleaned(m, 0) == 17197 &&
                       t.conflicting == 741 && t.redundant == 33050 && t.both == 257;
    const std::string got =
        fmt("BE %zu/%zu RME %zu/%zu merged %zu/%zu conf %zu red %zu both %zu", cleaned(a, 1), cleaned(a, 0),
            cleaned(b, 1), cleaned(b, 0), cleaned(m, 1), cleaned(m, 0), t.conflicting, t.redundant, t.both);
    return std::pair{exact, got};
  };

  const auto [exact, got] = run(CanonOptions{});
  const double secs = seconds_since(t0);
  if (exact) return {secs < 120.0, "released corpus, default canonicalization: " + got + fmt(" (%.1fs)", secs)};
  for (int flag = 0; flag < 2; ++flag) {
    CanonOptions c;
    (flag == 0 ? c.strip_trailing_whitespace : c.drop_edge_blank_lines) = false;
    const auto [ok, alt] = run(c);
    if (ok) {
      return {true, std::string("released corpus exact only with ") +
                        (flag == 0 ? "--keep-trailing-whitespace" : "--keep-edge-blank-lines") + "; default gave " +
                        got};
    }
  }
  return {false, "released corpus not reproduced by any single flag change; default gave " + got};
}

Verdict criterion_cleaning() {
  if (const char* dir = std::getenv("GADGETFORGE_VULDEEPECKER_DIR"); dir && *dir) return clean_released_corpus(dir);

  const auto t0 = std::chrono::steady_clock::now();
  const auto records = parse_gadget_corpus(read_file(kData / "clean_fixture.cgd"));
  const auto report = clean_corpus(records).report;
  const auto brute = oracle::clean_counts(records);
  if (report.classes != brute) return {false, "fixture counts differ from the pairwise oracle"};

  const std::string text = report_text(report);
  std::istringstream expected(read_file(kData / "clean_fixture.expected"));
  std::string line;
  while (std::getline(expected, line)) {
    if (!line.empty() && text.find(line + "\n") == std::string::npos) return {false, "fixture mismatch: " + line};
  }
  const auto t = report.totals();
  return {true, fmt("200-record fixture (released corpus not configured): cleaned %zu, conf %zu, red %zu, both %zu "
                    "match pairwise oracle and checked-in counts (%.2fs)",
                    t.cleaned, t.conflicting, t.redundant, t.both, seconds_since(t0))};
}

// ---- 2 ---------------------------------------------------------------------------

Verdict criterion_metrics() {
  std::size_t cases = 0, bad = 0;
  for (std::size_t tp = 0; tp <= 5; ++tp)
    for (std::size_t fp = 0; fp <= 5; ++fp)
      for (std::size_t tn = 0; tn <= 5; ++tn)
        for (std::size_t fn = 0; fn <= 5; ++fn) {
          std::vector<std::size_t> p, l;
          for (std::size_t i = 0; i < tp; ++i) p.push_back(1), l.push_back(1);
          for (std::size_t i = 0; i < fp; ++i) p.push_back(1), l.push_back(0);
          for (std::size_t i = 0; i < tn; ++i) p.push_back(0), l.push_back(0);
          for (std::size_t i = 0; i < fn; ++i) p.push_back(0), l.push_back(1);
          const auto got = metrics(confusion(p, l, 1));
          const auto want = oracle::metrics(static_cast<long long>(tp), static_cast<long long>(fp),
                                            static_cast<long long>(tn), static_cast<long long>(fn));
          ++cases;
          if (!oracle::matches(want.fpr, got.fpr) || !oracle::matches(want.fnr, got.fnr) ||
              !oracle::matches(want.precision, got.precision) || !oracle::matches(want.recall, got.recall) ||
              !oracle::matches(want.f1, got.f1)) {
            ++bad;
          }
        }
  return {cases == 1296 && bad == 0, fmt("%zu confusion matrices, %zu mismatches against rational oracle", cases, bad)};
}

// ---- 3 ---------------------------------------------------------------------------

Verdict criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string where;
  std::size_t scalars = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed * 7919);
    for (auto arch : {Architecture::BiLstm, Architecture::BiGru, Architecture::Transformer}) {
      ModelConfig c;
      c.arch = arch;
      c.vocab_size = 10;
      c.dropout = 0.0;
      c.classes = 2 + rng.below(2);
      if (arch == Architecture::Transformer) {
        c.layers = 1;
        c.heads = 2;
        c.d_model = 8;
        c.max_len = 6;
      } else {
        c.hidden = 4;
        c.d_model = 3;
        c.max_len = 3;
      }
      Model model(c, seed);
      TokenSequence seq;
      for (std::size_t i = 0; i < c.max_len; ++i) {
        seq.ids.push_back(static_cast<TokenId>(rng.below(c.vocab_size)));
        seq.mask.push_back(1);
      }
      const auto check = oracle::check_model_gradients(model, seq, rng.below(c.classes));
      scalars += check.checked;
      if (check.worst > worst) {
        worst = check.worst;
        where = std::string(to_string(arch)) + " seed " + std::to_string(seed) + " " + check.worst_param;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 30.0,
          fmt("60 models, %zu parameters, worst relative error %.2e (%s), %.1fs", scalars, worst, where.c_str(), secs)};
}

// ---- 4 ---------------------------------------------------------------------------

Verdict criterion_oracles() {
  Rng rng(2024);
  double worst = 0, worst_sum = 0;
  std::size_t between_fail = 0;
  auto diff = [](const Tensor& t, const oracle::Mat& m) {
    double d = 0;
    for (std::size_t r = 0; r < t.rows; ++r)
      for (std::size_t c = 0; c < t.cols; ++c) d = std::max(d, std::abs(t(r, c) - m[r][c]));
    return d;
  };
  auto vdiff = [](const Tensor& t, const std::vector<double>& v) {
    double d = 0;
    for (std::size_t i = 0; i < v.size(); ++i) d = std::max(d, std::abs(t.data[i] - v[i]));
    return d;
  };
  auto rand_t = [&](std::size_t r, std::size_t c, double s) {
    Tensor t(r, c);
    for (auto& x : t.data) x = rng.uniform(-s, s);
    return t;
  };
  for (int i = 0; i < 100; ++i) {
    const std::size_t t = 1 + rng.below(6), d = 1 + rng.below(6);
    const Tensor q = rand_t(t, d, 2), k = rand_t(t, d, 2), v = rand_t(t, 1 + rng.below(4), 1);
    worst = std::max(worst, diff(nn::scaled_dot_attention(q, k, v),
                                 oracle::attention(oracle::to_mat(q), oracle::to_mat(k), oracle::to_mat(v))));

    const std::size_t dm = 2 * (1 + rng.below(4));
    const Tensor x = rand_t(t, dm, 1);
    const auto ap = nn::AttentionParams::random(dm, 2, rng);
    worst = std::max(worst, diff(nn::multi_head_attention(x, ap), oracle::multi_head(oracle::to_mat(x), ap)));

    const std::size_t in = 1 + rng.below(5), h = 1 + rng.below(5);
    const Tensor xi = rand_t(1, in, 2);
    const auto lp = nn::LstmParams::random(in, h, rng);
    const nn::LstmState s{rand_t(1, h, 1), rand_t(1, h, 1)};
    const auto got = nn::lstm_step(xi, s, lp);
    const auto want = oracle::lstm_step(xi.data, s.c.data, s.a.data, lp);
    worst = std::max({worst, vdiff(got.c, want.c), vdiff(got.a, want.a)});

    const auto gp = nn::GruParams::random(in, h, rng);
    const Tensor c_prev = rand_t(1, h, 1);
    const Tensor c = nn::gru_step(xi, c_prev, gp);
    const auto gw = oracle::gru_step(xi.data, c_prev.data, gp);
    worst = std::max(worst, vdiff(c, gw.c));
    for (std::size_t j = 0; j < h; ++j) {
      const double lo = std::min(c_prev.data[j], gw.candidate[j]), hi = std::max(c_prev.data[j], gw.candidate[j]);
      if (c.data[j] < lo - 1e-15 || c.data[j] > hi + 1e-15) ++between_fail;
    }

    Graph g;
    const Tensor& sm = g.value(g.softmax_rows(g.constant(rand_t(3, 1 + rng.below(8), 20))));
    for (std::size_t r = 0; r < sm.rows; ++r) {
      double sum = 0;
      for (double vv : sm.row_span(r)) sum += vv;
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  return {worst <= 1e-9 && worst_sum <= 1e-12 && between_fail == 0,
          fmt("100 instances each: max deviation %.2e, softmax row-sum error %.2e, GRU betweenness violations %zu",
              worst, worst_sum, between_fail)};
}

// ---- 5 ---------------------------------------------------------------------------

Verdict criterion_learning() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorSpec gs;
  gs.per_class = 500;
  gs.seed = 1;
  auto records = generate(gs);
  for (auto& r : records) r = symbolize(r);
  const auto groups = build_groups(records, {{"synthetic", {"BE"}}});
  const auto& group = groups.front();
  const auto split = split_train_test(group, 7);
  std::map<std::uint64_t, const GadgetRecord*> by_id;
  for (const auto& r : group.records) by_id[r.id] = &r;

  std::vector<std::string> texts;
  for (auto id : split.train) texts.push_back(gadget_text(*by_id.at(id)));
  const auto vocab = build_word_vocab(texts, 5000);
  const std::size_t max_len = 96;
  auto examples = [&](const std::vector<std::uint64_t>& ids) {
    std::vector<Example> out;
    for (auto id : ids) out.push_back({encode(gadget_text(*by_id.at(id)), vocab, max_len), *by_id.at(id)->label});
    return out;
  };
  const auto train_set = examples(split.train), test_set = examples(split.test);

  std::string detail = fmt("train %zu / test %zu;", train_set.size(), test_set.size());
  bool pass = true;
  for (auto arch : {Architecture::Transformer, Architecture::BiLstm, Architecture::BiGru}) {
    const auto ta = std::chrono::steady_clock::now();
    ModelConfig mc;
    mc.arch = arch;
    mc.vocab_size = vocab.size();
    mc.max_len = max_len;
    mc.d_model = 32;
    mc.layers = 2;
    mc.heads = 2;
    mc.hidden = 32;
    Model model(mc, 3);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.warmup_steps = 50;
    tc.epochs = 10;
    tc.batch_size = 16;
    tc.optimizer = OptimizerKind::AdamW;
    tc.seed = 5;
    const auto result = train(model, train_set, test_set, tc);
    // score the kept (best) parameters on the held-out split
    const Model best(mc, result.best_params);
    std::vector<std::size_t> labels;
    for (const auto& ex : test_set) labels.push_back(ex.label);
    const auto m = split_metrics(predict_all(best, test_set), labels, 2);
    const double need = arch == Architecture::Transformer ? 0.95 : 0.90;
    const bool ok = m.f1.defined && m.f1.value >= need;
    pass = pass && ok;
    detail += fmt(" %s F1 %.4f (need %.2f, %.0fs);", std::string(to_string(arch)).c_str(), m.f1.value, need,
                  seconds_since(ta));
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 300.0;
  return {pass, detail + fmt(" total %.0fs", secs)};
}

// ---- 6 ---------------------------------------------------------------------------

Verdict criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "gadgetforge_acceptance_determinism";
  std::string detail;
  bool pass = true;
  for (const char* arch : {"transformer", "bigru"}) {
    const auto a = testing_cli::full_pipeline(kData / "src_tree", base / "a", "5", arch);
    const auto b = testing_cli::full_pipeline(kData / "src_tree", base / "b", "5", arch);
    if (a.code != 0 || b.code != 0) return {false, std::string(arch) + " pipeline failed: " + a.err + b.err};
    for (const char* f : {"clean.csv", "results.csv", "report.txt", "preds.csv", "train_log.csv", "model.ckpt"}) {
      if (read_file(base / "a" / f) != read_file(base / "b" / f)) {
        pass = false;
        detail += std::string(" ") + arch + "/" + f + " differs;";
      }
    }
  }
  fs::remove_all(base);
  return {pass, pass ? "extract->clean->prepare->tokenize->train->eval->report twice per architecture "
                       "(transformer, bigru): reports, predictions, logs and checkpoints byte-identical"
                     : detail};
}

// ---- 7 ---------------------------------------------------------------------------

Verdict criterion_splits() {
  Rng rng(77);
  std::size_t failures = 0;
  std::string first;
  for (int round = 0; round < 50; ++round) {
    DatasetGroup g;
    const std::size_t classes = 2 + rng.below(3), n = 3 + rng.below(500);
    for (std::size_t i = 0; i < n; ++i) {
      GadgetRecord r;
      r.id = i + 1;
      r.header = std::to_string(i + 1) + " f.c strcpy 1";
      r.body = {"x;"};
      r.label = static_cast<unsigned>(rng.below(4) == 0 ? 0 : rng.below(classes));
      g.records.push_back(r);
    }
    const auto split = split_train_test(g, rng.next());
    auto err = oracle::check_split(g, split, 0.8);
    if (err.empty()) err = oracle::check_folds(g, make_folds(g, 3, rng.next()), 3);
    if (!err.empty()) {
      if (!failures) first = err;
      ++failures;
    }
  }
  return {failures == 0, failures ? first : "50 random corpora: 80:20 within one record overall and per class; "
                                            "3 folds partition the ids and keep the label multiset"};
}

// ---- 8 ---------------------------------------------------------------------------

Verdict criterion_schedule() {
  Rng rng(8);
  std::size_t bad_count = 0, bad_lr = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 1 + rng.below(20000), e = 1 + rng.below(20), b = 1 + rng.below(128);
    if (total_iterations(n, e, b) != oracle::count_iterations(n, e, b)) ++bad_count;

    TrainConfig c;
    c.learning_rate = rng.uniform(1e-6, 1e-2);
    const std::size_t total = total_iterations(n, e, b);
    if (total < 8) continue;
    c.warmup_steps = 2 + rng.below(total / 2 - 1);
    const std::size_t w = c.warmup_steps;
    // each piece extrapolated linearly onto the boundary must meet lr_at(w)
    const double left = 2 * lr_at(w - 1, c, total) - lr_at(w - 2, c, total);
    const double right = 2 * lr_at(w + 1, c, total) - lr_at(w + 2, c, total);
    const double at = lr_at(w, c, total);
    const double tol = 1e-12 * c.learning_rate;
    if (std::abs(left - at) >= tol || std::abs(right - at) >= tol || lr_at(total - 1, c, total) != 0.0) ++bad_lr;
  }
  return {bad_count == 0 && bad_lr == 0,
          fmt("100 random (N, epochs, batch): %zu iteration mismatches, %zu schedule violations", bad_count, bad_lr)};
}

// ---- 9 ---------------------------------------------------------------------------

Verdict criterion_extraction() {
  std::vector<SourceUnit> units;
  units.push_back(make_unit("fixture.c", normalize_source(oracle::kTwoFunctionFixture)));
  const ProgramIndex index(std::move(units));
  const auto calls = find_api_calls(index.units()[0], default_api_list());
  if (calls.size() != 1) return {false, "expected exactly one API call in the fixture"};
  std::set<std::size_t> got;
  for (const auto& s : backtrack_slice(calls[0], index)) got.insert(s.line);
  const auto want = oracle::two_function_slice(calls[0].line);

  Rng rng(31337);
  std::size_t bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto c = oracle::normalize_case(rng);
    const std::string once = normalize_source(c.input);
    if (once != c.expected || normalize_source(once) != once) ++bad;
  }
  std::string lines;
  for (auto l : got) lines += " " + std::to_string(l);
  return {got == want && bad == 0,
          fmt("slice lines {%s } %s oracle; %zu/1000 normalize fuzz failures", lines.c_str(),
              got == want ? "equal" : "differ from", bad)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"cleaning reproduction", criterion_cleaning},
      {"metric oracle", criterion_metrics},
      {"gradient checks", criterion_gradients},
      {"attention/cell oracles", criterion_oracles},
      {"desk-scale learning", criterion_learning},
      {"pipeline determinism", criterion_determinism},
      {"split/fold properties", criterion_splits},
      {"schedule/iteration accounting", criterion_schedule},
      {"extraction fixtures", criterion_extraction},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  %zu. %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
