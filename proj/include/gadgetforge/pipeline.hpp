// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gadgetforge/model.hpp"
#include "gadgetforge/preprocessor.hpp"
#include "gadgetforge/synthetic.hpp"
#include "gadgetforge/trainer.hpp"

// The stages behind the command-line subcommands. Each stage writes its
// outputs atomically and records a stamp (input digest plus output digests);
// a re-run with the same inputs and intact outputs is skipped unless forced.
namespace gadgetforge::pipeline {

namespace fs = std::filesystem;

struct Outcome {
  bool skipped = false;
  std::string message;
};

struct ExtractArgs {
  fs::path src;
  fs::path out;
  fs::path api;         // optional API list file
  fs::path vuln_sites;  // optional "path:line" list
  std::string category = "BE";
  std::size_t max_depth = 8;
  bool permissive = false;
  bool force = false;
};
Outcome extract(const ExtractArgs& a);

struct CleanArgs {
  fs::path in;
  fs::path out;
  fs::path report;  // optional CSV
  unsigned label_classes = 2;
  bool keep_trailing_whitespace = false;
  bool keep_edge_blank_lines = false;
  bool force = false;
};
Outcome clean(const CleanArgs& a);

struct PrepareArgs {
  std::vector<std::pair<std::string, fs::path>> inputs;  // category, cleaned corpus
  std::string group;
  fs::path groups_file;  // optional; default group1..group8
  std::string split = "80:20";
  std::size_t folds = 0;  // > 0 replaces the train/test split
  bool stratified = true;
  bool symbolize = true;
  fs::path api;
  std::uint64_t seed = 0;
  fs::path out_dir;
  bool force = false;
};
/// Writes corpus.cgd (+ .manifest), scheme.txt, clean_report.csv and
/// train.ids/test.ids or fold<k>.ids.
Outcome prepare(const PrepareArgs& a);

struct TokenizeArgs {
  fs::path corpus;
  fs::path ids;  // records the vocabulary is built from (usually train.ids)
  fs::path out_dir;
  std::string kind = "word";
  std::size_t vocab_size = 10000;
  std::size_t min_freq = 1;
  std::size_t merges = 8000;
  std::size_t max_len = 128;
  std::string truncation = "head";
  bool force = false;
};
/// Writes vocab.tsv (+ merges.txt for BPE) and tokens.tsv.
Outcome tokenize(const TokenizeArgs& a);

struct TrainArgs {
  fs::path tokens;
  fs::path vocab;
  fs::path scheme;
  fs::path train_ids;
  fs::path eval_ids;
  fs::path out;  // best checkpoint
  fs::path log;  // run log CSV
  ModelConfig model;
  TrainConfig train;
  bool force = false;
};
Outcome train(const TrainArgs& a);

struct EvalArgs {
  // Model mode.
  fs::path model;
  fs::path tokens;
  fs::path ids;
  // Prediction-file mode.
  fs::path preds;
  fs::path labels;
  /// A scheme.txt path, or "binary" / "multiclass<N>".
  std::string scheme = "binary";
  std::string group = "group";
  std::string name = "model";
  std::string fold = "all";
  fs::path out;        // results CSV
  fs::path preds_out;  // predictions CSV (model mode)
  bool force = false;
};
/// Message holds the rendered table.
Outcome eval(const EvalArgs& a);

struct ReportArgs {
  std::vector<fs::path> results;
  fs::path out;      // text tables; empty: message only
  fs::path csv_out;  // merged CSV
};
Outcome report(const ReportArgs& a);

struct GenerateArgs {
  GeneratorSpec spec;
  fs::path out_dir;
  bool force = false;
};
/// One raw corpus per vulnerable category, <out_dir>/<CAT>.cgd, labels 0/1.
Outcome generate(const GenerateArgs& a);

// ---- shared file formats -------------------------------------------------------

/// "mode = binary|multiclass" and "classes = NV,BE,...".
std::string write_scheme(const LabelScheme& scheme);
LabelScheme parse_scheme(std::string_view text);
/// A scheme file path, or "binary" / "multiclass<N>".
LabelScheme resolve_scheme(const std::string& spec);

struct TokenRow {
  std::uint64_t id = 0;
  std::size_t label = 0;
  TokenSequence seq;
};
/// "id<TAB>label<TAB>space-separated ids" lines; PAD ids are the mask's zeros.
std::string write_token_table(const std::vector<TokenRow>& rows);
std::vector<TokenRow> parse_token_table(std::string_view text);

/// "id,value" CSV with a header line.
std::string write_id_values(const std::vector<std::pair<std::uint64_t, std::size_t>>& rows, std::string_view column);
std::vector<std::pair<std::uint64_t, std::size_t>> parse_id_values(std::string_view text);

}  // namespace gadgetforge::pipeline
