// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "gadgetforge/cleaner.hpp"
#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/error.hpp"
#include "gadgetforge/rng.hpp"
#include "oracles.hpp"

using namespace gadgetforge;

namespace {

GadgetRecord rec(std::uint64_t id, std::vector<std::string> body, unsigned label) {
  GadgetRecord r;
  r.id = id;
  r.header = std::to_string(id) + " f.c strcpy 1";
  r.body = std::move(body);
  r.label = label;
  return r;
}

std::vector<GadgetRecord> fixture() {
  return parse_gadget_corpus(read_file(std::string(GADGETFORGE_TEST_DATA) + "/clean_fixture.cgd"));
}

}  // namespace

TEST_CASE("canonical body ignores trailing blanks and edge blank lines") {
  const auto a = rec(1, {"x = 1;", "y = 2;"}, 0);
  const auto b = rec(2, {"", "x = 1;  ", "y = 2;\t", "  "}, 0);
  CHECK(canonicalize_body(a) == "x = 1;\ny = 2;");
  CHECK(gadget_hash(a).digest == gadget_hash(b).digest);
  CHECK(gadget_hash(a).digest.size() == 64);
  CHECK(gadget_hash(rec(3, {"  x = 1;", "y = 2;"}, 0)).digest != gadget_hash(a).digest);

  CanonOptions raw{false, false};
  CHECK(canonicalize_body(b, raw) == "\nx = 1;  \ny = 2;\t\n  ");
}

TEST_CASE("three-record conflict example") {
  const std::vector<GadgetRecord> in = {rec(1, {"a;"}, 1), rec(2, {"a;"}, 0), rec(3, {"b;"}, 0)};
  const auto out = clean_corpus(in);
  REQUIRE(out.kept.size() == 1);
  CHECK(out.kept[0].id == 3);
  const auto t = out.report.totals();
  CHECK(t.original == 3);
  CHECK(t.cleaned == 1);
  CHECK(t.conflicting == 2);
  CHECK(t.redundant == 0);
  CHECK(t.both == 0);
}

TEST_CASE("removal columns partition the removed records") {
  const std::vector<GadgetRecord> in = {rec(1, {"a;"}, 1), rec(2, {"a;"}, 0), rec(3, {"a;"}, 1),
                                        rec(4, {"b;"}, 0), rec(5, {"b;"}, 0), rec(6, {"c;"}, 1)};
  const auto out = clean_corpus(in);
  CHECK(out.report.classes.at(1) == ClassCounts{3, 1, 1, 0, 1});
  CHECK(out.report.classes.at(0) == ClassCounts{3, 1, 1, 1, 0});
  CHECK(out.kept.size() == 2);
}

TEST_CASE("unlabeled records are rejected") {
  auto r = rec(1, {"a;"}, 0);
  r.label.reset();
  CHECK_THROWS_AS(clean_corpus({r}), Error);
}

TEST_CASE("checked-in fixture matches the generator's counts and the pairwise oracle") {
  const auto records = fixture();
  REQUIRE(records.size() == 200);
  const auto out = clean_corpus(records);

  const auto brute = oracle::clean_counts(records);
  CHECK(out.report.classes == brute);

  const std::string text = report_text(out.report);
  std::istringstream expected(read_file(std::string(GADGETFORGE_TEST_DATA) + "/clean_fixture.expected"));
  std::string line;
  int lines = 0;
  while (std::getline(expected, line)) {
    if (line.empty()) continue;
    ++lines;
    CHECK_MESSAGE(text.find(line + "\n") != std::string::npos, line);
  }
  CHECK(lines == 10);
}

TEST_CASE("serial and parallel hashing agree; cleaning is idempotent") {
  const auto records = fixture();
  CleanOptions serial;
  serial.parallel = false;
  const auto a = clean_corpus(records);
  const auto b = clean_corpus(records, serial);
  CHECK(a.kept == b.kept);
  CHECK(a.report == b.report);
  const auto again = clean_corpus(a.kept);
  CHECK(again.kept == a.kept);
  CHECK(again.report.totals().cleaned == a.kept.size());
}

TEST_CASE("random corpora agree with the pairwise oracle") {
  Rng rng(5);
  for (int round = 0; round < 40; ++round) {
    std::vector<GadgetRecord> in;
    const std::size_t n = 1 + rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> body = {"v" + std::to_string(rng.below(8)) + ";"};
      if (rng.below(3) == 0) body.back() += " ";
      if (rng.below(4) == 0) body.insert(body.begin(), "");
      in.push_back(rec(i + 1, body, static_cast<unsigned>(rng.below(3))));
    }
    const auto out = clean_corpus(in);
    CHECK(out.report.classes == oracle::clean_counts(in));
  }
}

TEST_CASE("csv report") {
  const auto out = clean_corpus({rec(1, {"a;"}, 1), rec(2, {"a;"}, 0), rec(3, {"b;"}, 0)});
  CHECK(report_csv(out.report, {"NV", "BE"}) ==
        "class,original,cleaned,confliction,redundancy,both\nNV,2,1,1,0,0\nBE,1,0,1,0,0\n");
}
