// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "gadgetforge/cleaner.hpp"
#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/error.hpp"
#include "gadgetforge/evaluator.hpp"
#include "gadgetforge/extractor.hpp"
#include "gadgetforge/sha256.hpp"
#include "gadgetforge/tokenizer.hpp"

namespace gadgetforge::pipeline {

namespace {

// ---- memoization ------------------------------------------------------------

class StageKey {
 public:
  explicit StageKey(std::string_view stage) { text_ = "stage=" + std::string(stage) + "\n"; }
  void add(std::string_view key, std::string_view value) {
    text_ += std::string(key) + "=" + std::string(value) + "\n";
  }
  void add(std::string_view key, std::size_t value) { add(key, std::to_string(value)); }
  /// Content digest only: moving a checkout does not invalidate stamps.
  void add_file(std::string_view key, const fs::path& path) {
    if (!path.empty()) add(key, sha256_hex(read_file(path)));
  }
  std::string digest() const { return sha256_hex(text_); }

 private:
  std::string text_;
};

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Stamp {
  std::string inputs;
  std::map<std::string, std::string> outputs;  // path -> digest
};

std::string write_stamp(const Stamp& s) {
  std::string out = "inputs = " + s.inputs + "\n";
  for (const auto& [p, d] : s.outputs) out += "output " + p + " = " + d + "\n";
  return out;
}

Stamp parse_stamp(std::string_view text) {
  Stamp s;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.rfind(" = ");
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "inputs") {
      s.inputs = value;
    } else if (key.starts_with("output ")) {
      s.outputs[key.substr(7)] = value;
    }
  }
  return s;
}

/// True when `stamp_path` records `key` and every recorded output still has
/// its recorded digest.
bool up_to_date(const fs::path& stamp_path, const std::string& key, bool force) {
  if (force || !fs::exists(stamp_path)) return false;
  const Stamp s = parse_stamp(read_file(stamp_path));
  if (s.inputs != key || s.outputs.empty()) return false;
  for (const auto& [p, d] : s.outputs) {
    if (!fs::exists(p) || sha256_hex(read_file(p)) != d) return false;
  }
  return true;
}

/// Writes every output atomically, then the stamp.
void commit(const fs::path& stamp_path, const std::string& key,
            const std::vector<std::pair<fs::path, std::string>>& outputs) {
  Stamp s;
  s.inputs = key;
  for (const auto& [path, bytes] : outputs) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, bytes);
    s.outputs[path.string()] = sha256_hex(bytes);
  }
  write_file_atomic(stamp_path, write_stamp(s));
}

fs::path stamp_for(const fs::path& primary) { return fs::path(primary.string() + ".stamp"); }

Outcome skipped(const fs::path& what) { return {true, what.string() + " is up to date"}; }

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(Errc::MalformedRecord, "bad " + std::string(what) + ": " + std::string(s));
  }
  return v;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::set<std::string, std::less<>> parse_sites(std::string_view text) {
  std::set<std::string, std::less<>> out;
  for (const auto& raw : split_on(text, '\n')) {
    std::string line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.rfind(':') == std::string::npos) throw Error(Errc::MalformedRecord, "vulnerable site must be path:line");
    out.insert(line);
  }
  return out;
}

ApiList load_api(const fs::path& p) { return p.empty() ? default_api_list() : parse_api_list(read_file(p)); }

std::pair<double, double> parse_split(std::string_view s) {
  const auto parts = split_on(s, ':');
  if (parts.size() != 2) throw Error(Errc::Usage, "split must look like 80:20");
  const double a = static_cast<double>(parse_u64(parts[0], "split"));
  const double b = static_cast<double>(parse_u64(parts[1], "split"));
  if (a + b == 0) throw Error(Errc::Usage, "split parts must not both be 0");
  return {a, b};
}

}  // namespace

// ---- shared formats -------------------------------------------------------------

std::string write_scheme(const LabelScheme& scheme) {
  std::string out = std::string("mode = ") + (scheme.mode == LabelMode::Binary ? "binary" : "multiclass") + "\n";
  out += "classes = ";
  for (std::size_t i = 0; i < scheme.class_names.size(); ++i) out += (i ? "," : "") + scheme.class_names[i];
  return out + "\n";
}

LabelScheme parse_scheme(std::string_view text) {
  LabelScheme s;
  bool have_classes = false;
  for (const auto& raw : split_on(text, '\n')) {
    const auto eq = raw.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(std::string_view(raw).substr(0, eq));
    const std::string value = trim(std::string_view(raw).substr(eq + 1));
    if (key == "mode") {
      if (value != "binary" && value != "multiclass") throw Error(Errc::MalformedRecord, "bad scheme mode " + value);
      s.mode = value == "binary" ? LabelMode::Binary : LabelMode::Multiclass;
    } else if (key == "classes") {
      s.class_names.clear();
      for (const auto& c : split_on(value, ',')) s.class_names.push_back(trim(c));
      have_classes = true;
    }
  }
  if (!have_classes || s.class_names.size() < 2) throw Error(Errc::MalformedRecord, "scheme needs at least 2 classes");
  return s;
}

LabelScheme resolve_scheme(const std::string& spec) {
  if (spec == "binary") return LabelScheme{};
  if (spec.starts_with("multiclass")) {
    const std::size_t n = parse_u64(std::string_view(spec).substr(10), "class count");
    if (n < 2) throw Error(Errc::Usage, "multiclass needs at least 2 classes");
    LabelScheme s;
    s.mode = LabelMode::Multiclass;
    s.class_names = {"NV"};
    for (std::size_t c = 1; c < n; ++c) s.class_names.push_back("class" + std::to_string(c));
    return s;
  }
  return parse_scheme(read_file(spec));
}

std::string write_token_table(const std::vector<TokenRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += std::to_string(r.id) + '\t' + std::to_string(r.label) + '\t';
    for (std::size_t i = 0; i < r.seq.ids.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(r.seq.ids[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<TokenRow> parse_token_table(std::string_view text) {
  std::vector<TokenRow> out;
  std::size_t lineno = 0;
  for (const auto& line : split_on(text, '\n')) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_on(line, '\t');
    if (f.size() != 3) throw Error(Errc::MalformedRecord, "token rows have 3 TAB-separated fields", lineno);
    TokenRow r;
    r.id = parse_u64(f[0], "record id");
    r.label = parse_u64(f[1], "label");
    for (const auto& t : split_on(f[2], ' ')) {
      const auto id = static_cast<TokenId>(parse_u64(t, "token id"));
      r.seq.ids.push_back(id);
      r.seq.mask.push_back(id == Vocabulary::kPad ? 0 : 1);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string write_id_values(const std::vector<std::pair<std::uint64_t, std::size_t>>& rows, std::string_view column) {
  std::string out = "id," + std::string(column) + "\n";
  for (const auto& [id, v] : rows) out += std::to_string(id) + ',' + std::to_string(v) + '\n';
  return out;
}

std::vector<std::pair<std::uint64_t, std::size_t>> parse_id_values(std::string_view text) {
  std::vector<std::pair<std::uint64_t, std::size_t>> out;
  std::size_t lineno = 0;
  for (auto line : split_on(text, '\n')) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || lineno == 1) continue;
    const auto f = split_on(line, ',');
    if (f.size() != 2) throw Error(Errc::MalformedRecord, "expected id,value", lineno);
    out.emplace_back(parse_u64(trim(f[0]), "id"), parse_u64(trim(f[1]), "value"));
  }
  return out;
}

// ---- stages ---------------------------------------------------------------------

Outcome extract(const ExtractArgs& a) {
  const auto files = ingest_source_tree(a.src, {a.permissive});
  StageKey key("extract");
  for (const auto& f : files) key.add("file " + f.path.generic_string(), sha256_hex(f.text));
  key.add_file("api", a.api);
  key.add_file("sites", a.vuln_sites);
  key.add("category", a.category);
  key.add("max_depth", a.max_depth);
  const std::string k = key.digest();
  if (up_to_date(stamp_for(a.out), k, a.force)) return skipped(a.out);

  ExtractOptions opt;
  opt.slice.max_depth = a.max_depth;
  if (!a.vuln_sites.empty()) opt.vulnerable_sites = parse_sites(read_file(a.vuln_sites));
  auto records = extract_gadgets(files, load_api(a.api), opt);
  for (auto& r : records) r.category = a.category;
  const std::string corpus = write_gadget_corpus(records);
  const auto manifest = make_manifest(a.out.filename().string(), Stage::Raw, records);
  commit(stamp_for(a.out), k, {{a.out, corpus}, {fs::path(a.out.string() + ".manifest"), write_manifest(manifest)}});
  return {false, "extracted " + std::to_string(records.size()) + " gadgets from " + std::to_string(files.size()) +
                     " files"};
}

Outcome clean(const CleanArgs& a) {
  StageKey key("clean");
  key.add_file("in", a.in);
  key.add("label_classes", a.label_classes);
  key.add("keep_trailing_whitespace", a.keep_trailing_whitespace ? "1" : "0");
  key.add("keep_edge_blank_lines", a.keep_edge_blank_lines ? "1" : "0");
  key.add("report", a.report.empty() ? "" : "csv");
  const std::string k = key.digest();
  if (up_to_date(stamp_for(a.out), k, a.force)) return skipped(a.out);

  ParseOptions po;
  po.label_classes = a.label_classes;
  const auto records = parse_gadget_corpus(read_file(a.in), po);
  CleanOptions co;
  co.canon.strip_trailing_whitespace = !a.keep_trailing_whitespace;
  co.canon.drop_edge_blank_lines = !a.keep_edge_blank_lines;
  const CleanResult res = clean_corpus(records, co);
  std::vector<std::pair<fs::path, std::string>> outputs{
      {a.out, write_gadget_corpus(res.kept)},
      {fs::path(a.out.string() + ".manifest"),
       write_manifest(make_manifest(a.out.filename().string(), Stage::Cleaned, res.kept))}};
  if (!a.report.empty()) outputs.emplace_back(a.report, report_csv(res.report));
  commit(stamp_for(a.out), k, outputs);
  return {false, report_text(res.report)};
}

Outcome prepare(const PrepareArgs& a) {
  if (a.inputs.empty()) throw Error(Errc::Usage, "prepare needs at least one --input CAT=path");
  StageKey key("prepare");
  for (const auto& [cat, path] : a.inputs) key.add_file("input " + cat, path);
  key.add("group", a.group);
  key.add_file("groups", a.groups_file);
  key.add("split", a.split);
  key.add("folds", a.folds);
  key.add("stratified", a.stratified ? "1" : "0");
  key.add("symbolize", a.symbolize ? "1" : "0");
  key.add_file("api", a.api);
  key.add("seed", std::to_string(a.seed));
  const std::string k = key.digest();
  const fs::path stamp = a.out_dir / ".stamp";
  if (up_to_date(stamp, k, a.force)) return skipped(a.out_dir);

  const auto specs = a.groups_file.empty() ? default_group_specs() : parse_group_specs(read_file(a.groups_file));
  auto spec = std::find_if(specs.begin(), specs.end(), [&](const GroupSpec& g) { return g.name == a.group; });
  if (spec == specs.end()) throw Error(Errc::Usage, "unknown group " + a.group);

  std::vector<GadgetRecord> all;
  for (const auto& [cat, path] : a.inputs) {
    ParseOptions po;
    po.category = cat;
    auto recs = parse_gadget_corpus(read_file(path), po);
    all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
  }
  auto groups = build_groups(all, {*spec});
  DatasetGroup& group = groups.front();

  // Records cleaned per category can still collide across categories.
  const CleanResult cleaned = clean_corpus(group.records);
  group.records.clear();
  const ApiList api = load_api(a.api);
  for (const auto& r : cleaned.kept) {
    GadgetRecord rec = a.symbolize ? symbolize(r, api) : r;
    group.records.push_back(with_id(std::move(rec), group.records.size() + 1));
  }
  if (group.records.empty()) throw Error(Errc::EmptyGroup, "group " + a.group + " is empty after cleaning");

  std::vector<std::pair<fs::path, std::string>> outputs;
  const fs::path corpus = a.out_dir / "corpus.cgd";
  outputs.emplace_back(corpus, write_gadget_corpus(group.records));
  outputs.emplace_back(a.out_dir / "corpus.cgd.manifest",
                       write_manifest(make_manifest(a.group, Stage::Split, group.records)));
  outputs.emplace_back(a.out_dir / "scheme.txt", write_scheme(group.scheme));
  outputs.emplace_back(a.out_dir / "clean_report.csv", report_csv(cleaned.report, group.scheme.class_names));
  std::string summary;
  if (a.folds > 0) {
    const Split s = make_folds(group, a.folds, a.seed, a.stratified);
    for (std::size_t f = 0; f < s.folds.size(); ++f) {
      outputs.emplace_back(a.out_dir / ("fold" + std::to_string(f + 1) + ".ids"), write_id_list(s.folds[f]));
    }
    summary = std::to_string(s.folds.size()) + " folds";
  } else {
    const auto [tr, te] = parse_split(a.split);
    SplitOptions so;
    so.train_fraction = tr / (tr + te);
    so.stratified = a.stratified;
    const Split s = split_train_test(group, a.seed, so);
    outputs.emplace_back(a.out_dir / "train.ids", write_id_list(s.train));
    outputs.emplace_back(a.out_dir / "test.ids", write_id_list(s.test));
    summary = std::to_string(s.train.size()) + " train / " + std::to_string(s.test.size()) + " test";
  }
  commit(stamp, k, outputs);
  return {false, a.group + ": " + std::to_string(group.records.size()) + " records, " + summary};
}

Outcome tokenize(const TokenizeArgs& a) {
  StageKey key("tokenize");
  key.add_file("corpus", a.corpus);
  key.add_file("ids", a.ids);
  key.add("kind", a.kind);
  key.add("vocab_size", a.vocab_size);
  key.add("min_freq", a.min_freq);
  key.add("merges", a.merges);
  key.add("max_len", a.max_len);
  key.add("truncation", a.truncation);
  const std::string k = key.digest();
  const fs::path stamp = a.out_dir / ".stamp";
  if (up_to_date(stamp, k, a.force)) return skipped(a.out_dir);

  if (a.kind != "word" && a.kind != "bpe") throw Error(Errc::Usage, "vocabulary kind is word or bpe");
  if (a.truncation != "head" && a.truncation != "tail") throw Error(Errc::Usage, "truncation is head or tail");
  ParseOptions po;
  po.label_classes = 0;
  const auto records = parse_gadget_corpus(read_file(a.corpus), po);
  std::set<std::uint64_t> vocab_ids;
  if (!a.ids.empty()) {
    for (auto id : parse_id_list(read_file(a.ids))) vocab_ids.insert(id);
  }
  std::vector<std::string> texts;
  for (const auto& r : records) {
    if (vocab_ids.empty() || vocab_ids.contains(r.id)) texts.push_back(gadget_text(r));
  }
  const Vocabulary vocab =
      a.kind == "word" ? build_word_vocab(texts, a.vocab_size, a.min_freq) : train_bpe(texts, a.merges);
  const Truncation trunc = a.truncation == "head" ? Truncation::KeepHead : Truncation::KeepTail;
  std::vector<TokenRow> rows;
  for (const auto& r : records) {
    rows.push_back({r.id, *r.label, encode(gadget_text(r), vocab, a.max_len, trunc)});
  }
  std::vector<std::pair<fs::path, std::string>> outputs{{a.out_dir / "vocab.tsv", write_vocab(vocab)},
                                                        {a.out_dir / "tokens.tsv", write_token_table(rows)}};
  if (vocab.kind() == VocabKind::Bpe) outputs.emplace_back(a.out_dir / "merges.txt", write_merges(vocab));
  commit(stamp, k, outputs);
  return {false, std::to_string(rows.size()) + " sequences, vocabulary " + std::to_string(vocab.size())};
}

namespace {

Vocabulary load_vocab(const fs::path& vocab_path) {
  const fs::path merges = vocab_path.parent_path() / "merges.txt";
  return parse_vocab(read_file(vocab_path), fs::exists(merges) ? read_file(merges) : std::string());
}

std::vector<Example> select(const std::vector<TokenRow>& rows, const fs::path& ids_path) {
  std::map<std::uint64_t, const TokenRow*> by_id;
  for (const auto& r : rows) by_id[r.id] = &r;
  std::vector<Example> out;
  for (auto id : parse_id_list(read_file(ids_path))) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(Errc::MalformedRecord, "id not in token table: " + std::to_string(id));
    out.push_back({it->second->seq, it->second->label});
  }
  return out;
}

}  // namespace

Outcome train(const TrainArgs& a) {
  StageKey key("train");
  key.add_file("tokens", a.tokens);
  key.add_file("vocab", a.vocab);
  key.add_file("scheme", a.scheme);
  key.add_file("train_ids", a.train_ids);
  key.add_file("eval_ids", a.eval_ids);
  for (const auto& [k, v] : a.model.to_map()) key.add("model." + k, v);
  const TrainConfig& t = a.train;
  key.add("lr", number(t.learning_rate));
  key.add("weight_decay", number(t.weight_decay));
  key.add("warmup", t.warmup_steps);
  key.add("batch", t.batch_size);
  key.add("epochs", t.epochs);
  key.add("seed", std::to_string(t.seed));
  key.add("schedule", to_string(t.schedule));
  key.add("optimizer", to_string(t.optimizer));
  key.add("momentum", number(t.momentum));
  key.add("betas", number(t.beta1) + "," + number(t.beta2) + "," + number(t.adam_eps));
  const std::string k = key.digest();
  if (up_to_date(stamp_for(a.out), k, a.force)) return skipped(a.out);

  const auto rows = parse_token_table(read_file(a.tokens));
  if (rows.empty()) throw Error(Errc::TooFewRecords, "token table is empty");
  const LabelScheme scheme = parse_scheme(read_file(a.scheme));
  ModelConfig mc = a.model;
  mc.vocab_size = load_vocab(a.vocab).size();
  mc.max_len = rows.front().seq.length();
  mc.classes = scheme.classes();
  const auto train_set = select(rows, a.train_ids);
  const auto eval_set = a.eval_ids.empty() ? std::vector<Example>{} : select(rows, a.eval_ids);

  Model model(mc, t.seed);
  const TrainResult res = gadgetforge::train(model, train_set, eval_set, t);
  const Model best(mc, res.best_params);
  std::vector<std::pair<fs::path, std::string>> outputs{
      {a.out, serialize_checkpoint(best, {{"epoch", std::to_string(res.best_epoch)}})}};
  if (!a.log.empty()) outputs.emplace_back(a.log, res.log.csv());
  commit(stamp_for(a.out), k, outputs);
  return {false, "best epoch " + std::to_string(res.best_epoch) + ", eval F1 " +
                     (res.best_f1.defined ? number(res.best_f1.value) : std::string("n/a"))};
}

Outcome eval(const EvalArgs& a) {
  const bool model_mode = !a.model.empty();
  if (model_mode == !a.preds.empty()) throw Error(Errc::Usage, "eval takes either --model or --preds");
  LabelScheme scheme = resolve_scheme(a.scheme);

  std::vector<std::size_t> preds, labels;
  std::vector<std::pair<std::uint64_t, std::size_t>> pred_rows;
  if (model_mode) {
    if (a.tokens.empty() || a.ids.empty()) throw Error(Errc::Usage, "model evaluation needs --tokens and --ids");
    const Model model = load_checkpoint(a.model);
    const auto rows = parse_token_table(read_file(a.tokens));
    const auto examples = select(rows, a.ids);
    preds = predict_all(model, examples);
    const auto ids = parse_id_list(read_file(a.ids));
    for (std::size_t i = 0; i < examples.size(); ++i) {
      labels.push_back(examples[i].label);
      pred_rows.emplace_back(ids[i], preds[i]);
    }
  } else {
    if (a.labels.empty()) throw Error(Errc::Usage, "eval --preds needs --labels");
    const auto p = parse_id_values(read_file(a.preds));
    const auto g = parse_id_values(read_file(a.labels));
    std::map<std::uint64_t, std::size_t> gold(g.begin(), g.end());
    if (p.size() != g.size()) throw Error(Errc::LengthMismatch, "prediction and label files differ in length");
    for (const auto& [id, v] : p) {
      auto it = gold.find(id);
      if (it == gold.end()) throw Error(Errc::LengthMismatch, "no label for id " + std::to_string(id));
      preds.push_back(v);
      labels.push_back(it->second);
    }
  }
  const auto rows = evaluate_predictions(preds, labels, scheme, a.group, a.name, a.fold);
  std::vector<std::pair<fs::path, std::string>> outputs;
  if (!a.out.empty()) outputs.emplace_back(a.out, report_csv(rows));
  if (!a.preds_out.empty()) outputs.emplace_back(a.preds_out, write_id_values(pred_rows, "prediction"));
  for (const auto& [path, bytes] : outputs) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, bytes);
  }
  return {false, report_table(rows)};
}

Outcome report(const ReportArgs& a) {
  if (a.results.empty()) throw Error(Errc::Usage, "report needs at least one results file");
  std::vector<ResultRow> rows;
  for (const auto& p : a.results) {
    auto r = parse_report_csv(read_file(p));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (rows.empty()) throw Error(Errc::MalformedRecord, "results files hold no rows");
  const std::string table = report_table(rows);
  if (!a.out.empty()) write_file_atomic(a.out, table);
  if (!a.csv_out.empty()) write_file_atomic(a.csv_out, report_csv(rows));
  return {false, table};
}

Outcome generate(const GenerateArgs& a) {
  const GeneratorSpec& s = a.spec;
  StageKey key("generate");
  key.add("classes", s.classes);
  key.add("per_class", s.per_class);
  key.add("noise", std::to_string(s.min_noise) + "-" + std::to_string(s.max_noise));
  key.add("seed", std::to_string(s.seed));
  key.add("motif", s.include_motif ? "1" : "0");
  const std::string k = key.digest();
  const fs::path stamp = a.out_dir / ".stamp";
  if (up_to_date(stamp, k, a.force)) return skipped(a.out_dir);

  const auto records = generate(s);
  std::map<std::string, std::vector<GadgetRecord>> by_category;
  for (const auto& r : records) {
    GadgetRecord raw = r;
    raw.label = *r.label == 0 ? 0u : 1u;
    auto& bucket = by_category[r.category];
    by_category[r.category].push_back(with_id(std::move(raw), bucket.size() + 1));
  }
  std::vector<std::pair<fs::path, std::string>> outputs;
  for (const auto& [cat, recs] : by_category) {
    outputs.emplace_back(a.out_dir / (cat + ".cgd"), write_gadget_corpus(recs));
  }
  commit(stamp, k, outputs);
  return {false, std::to_string(records.size()) + " records in " + std::to_string(by_category.size()) + " files"};
}

}  // namespace gadgetforge::pipeline
