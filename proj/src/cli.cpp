// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <optional>

#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/error.hpp"
#include "gadgetforge/pipeline.hpp"

namespace gadgetforge::cli {

namespace pl = gadgetforge::pipeline;

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string env_name(std::string_view sub, std::string_view key) {
  std::string out = "GADGETFORGE_";
  if (!sub.empty()) out += std::string(sub) + "_";
  out += key;
  for (char& ch : out) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

bool truthy(std::string_view v) { return v == "1" || v == "true" || v == "yes" || v == "on"; }

/// Everything the subcommands bind to.
struct Bindings {
  pl::ExtractArgs extract;
  pl::CleanArgs clean;
  pl::PrepareArgs prepare;
  std::vector<std::string> prepare_inputs;
  bool prepare_no_symbolize = false;
  bool prepare_unstratified = false;
  pl::TokenizeArgs tokenize;
  pl::TrainArgs train;
  std::string arch = "transformer";
  std::string pooling = "first";
  std::string schedule = "linear";
  std::string optimizer = "sgd";
  bool train_serial = false;
  pl::EvalArgs eval;
  pl::ReportArgs report;
  pl::GenerateArgs generate;
  bool generate_no_motif = false;
  std::string config;
  int jobs = 0;
};

void build(CLI::App& app, Bindings& b) {
  app.require_subcommand(1);
  app.add_option("--config", b.config, "Configuration file (key = value, [section] headers)");
  app.add_option("--jobs", b.jobs, "Thread cap for parallel kernels (0: all cores)")->check(CLI::NonNegativeNumber);

  auto* ex = app.add_subcommand("extract", "Slice API call sites of a C/C++ tree into code gadgets");
  ex->add_option("--src", b.extract.src, "Source tree")->required()->check(CLI::ExistingDirectory);
  ex->add_option("--out", b.extract.out, "Output corpus")->required();
  ex->add_option("--api", b.extract.api, "API list file (one name per line)")->check(CLI::ExistingFile);
  ex->add_option("--vuln-sites", b.extract.vuln_sites, "File of path:line vulnerable call sites")
      ->check(CLI::ExistingFile);
  ex->add_option("--category", b.extract.category, "Category tag of the gadgets");
  ex->add_option("--max-depth", b.extract.max_depth, "Caller back-tracking depth limit");
  ex->add_flag("--permissive", b.extract.permissive, "Skip unreadable files");
  ex->add_flag("--force", b.extract.force, "Ignore the stage stamp");

  auto* cl = app.add_subcommand("clean", "Remove label conflicts and duplicate gadgets");
  cl->add_option("--in", b.clean.in, "Input corpus")->required()->check(CLI::ExistingFile);
  cl->add_option("--out", b.clean.out, "Cleaned corpus")->required();
  cl->add_option("--report", b.clean.report, "Per-class count CSV");
  cl->add_option("--label-classes", b.clean.label_classes, "Raw label domain size (0: unchecked)");
  cl->add_flag("--keep-trailing-whitespace", b.clean.keep_trailing_whitespace, "Hash lines verbatim");
  cl->add_flag("--keep-edge-blank-lines", b.clean.keep_edge_blank_lines, "Keep leading/trailing blank lines");
  cl->add_flag("--force", b.clean.force, "Ignore the stage stamp");

  auto* pr = app.add_subcommand("prepare", "Build a dataset group, symbolize and split it");
  pr->add_option("--input", b.prepare_inputs, "CATEGORY=cleaned corpus (repeatable)")->required();
  pr->add_option("--group", b.prepare.group, "Group name")->required();
  pr->add_option("--groups", b.prepare.groups_file, "Group definition file")->check(CLI::ExistingFile);
  pr->add_option("--split", b.prepare.split, "train:test ratio");
  pr->add_option("--folds", b.prepare.folds, "k-fold split instead of train/test");
  pr->add_flag("--unstratified", b.prepare_unstratified, "Split without per-class balancing");
  pr->add_flag("--no-symbolize", b.prepare_no_symbolize, "Keep identifiers as written");
  pr->add_option("--api", b.prepare.api, "API list file kept through symbolization")->check(CLI::ExistingFile);
  pr->add_option("--seed", b.prepare.seed, "Random seed");
  pr->add_option("--out-dir", b.prepare.out_dir, "Output directory")->required();
  pr->add_flag("--force", b.prepare.force, "Ignore the stage stamp");

  auto* tk = app.add_subcommand("tokenize", "Build a vocabulary and encode gadgets");
  tk->add_option("--corpus", b.tokenize.corpus, "Prepared corpus")->required()->check(CLI::ExistingFile);
  tk->add_option("--ids", b.tokenize.ids, "Ids the vocabulary is built from")->check(CLI::ExistingFile);
  tk->add_option("--out-dir", b.tokenize.out_dir, "Output directory")->required();
  tk->add_option("--kind", b.tokenize.kind, "word or bpe")->check(CLI::IsMember({"word", "bpe"}));
  tk->add_option("--vocab-size", b.tokenize.vocab_size, "Word vocabulary size including specials");
  tk->add_option("--min-freq", b.tokenize.min_freq, "Minimum word frequency");
  tk->add_option("--merges", b.tokenize.merges, "BPE merge count");
  tk->add_option("--max-len", b.tokenize.max_len, "Sequence length including <s> and </s>");
  tk->add_option("--truncation", b.tokenize.truncation, "Keep the head or the tail of long gadgets")
      ->check(CLI::IsMember({"head", "tail"}));
  tk->add_flag("--force", b.tokenize.force, "Ignore the stage stamp");

  auto* tr = app.add_subcommand("train", "Train a classifier");
  auto& ta = b.train;
  tr->add_option("--tokens", ta.tokens, "Token table")->required()->check(CLI::ExistingFile);
  tr->add_option("--vocab", ta.vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  tr->add_option("--scheme", ta.scheme, "scheme.txt from prepare")->required()->check(CLI::ExistingFile);
  tr->add_option("--train-ids", ta.train_ids, "Training ids")->required()->check(CLI::ExistingFile);
  tr->add_option("--eval-ids", ta.eval_ids, "Per-epoch evaluation ids")->check(CLI::ExistingFile);
  tr->add_option("--out", ta.out, "Best checkpoint")->required();
  tr->add_option("--log", ta.log, "Run log CSV");
  tr->add_option("--arch", b.arch, "transformer, bilstm or bigru")->check(CLI::IsMember({"transformer", "bilstm", "bigru"}));
  tr->add_option("--d-model", ta.model.d_model, "Embedding width");
  tr->add_option("--layers", ta.model.layers, "Encoder layers");
  tr->add_option("--heads", ta.model.heads, "Attention heads");
  tr->add_option("--ff-dim", ta.model.ff_dim, "Feed-forward width (0: 4 * d-model)");
  tr->add_option("--hidden", ta.model.hidden, "Recurrent units per direction");
  tr->add_option("--pooling", b.pooling, "first or last")->check(CLI::IsMember({"first", "last"}));
  tr->add_option("--head", ta.model.head, "Head preset: bert, distilbert, roberta, gpt2, gptj");
  tr->add_option("--head-width", ta.model.head_width, "Inner head width (0: 4 * d-model)");
  tr->add_option("--dropout", ta.model.dropout, "Head dropout rate");
  tr->add_option("--lr", ta.train.learning_rate, "Peak learning rate");
  tr->add_option("--weight-decay", ta.train.weight_decay, "Decoupled weight decay");
  tr->add_option("--warmup", ta.train.warmup_steps, "Warmup steps (schedule period in stepwise mode)");
  tr->add_option("--batch-size", ta.train.batch_size, "Batch size");
  tr->add_option("--epochs", ta.train.epochs, "Epochs");
  tr->add_option("--seed", ta.train.seed, "Random seed");
  tr->add_option("--schedule", b.schedule, "linear or stepwise6pct")->check(CLI::IsMember({"linear", "stepwise6pct"}));
  tr->add_option("--optimizer", b.optimizer, "sgd, momentum or adamw")->check(CLI::IsMember({"sgd", "momentum", "adamw"}));
  tr->add_option("--momentum", ta.train.momentum, "Momentum coefficient");
  tr->add_flag("--serial", b.train_serial, "Compute per-sample gradients on one thread");
  tr->add_flag("--force", ta.force, "Ignore the stage stamp");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint or a prediction file");
  auto& ea = b.eval;
  ev->add_option("--model", ea.model, "Checkpoint")->check(CLI::ExistingFile);
  ev->add_option("--tokens", ea.tokens, "Token table")->check(CLI::ExistingFile);
  ev->add_option("--ids", ea.ids, "Ids to evaluate")->check(CLI::ExistingFile);
  ev->add_option("--preds", ea.preds, "id,prediction CSV")->check(CLI::ExistingFile);
  ev->add_option("--labels", ea.labels, "id,label CSV")->check(CLI::ExistingFile);
  ev->add_option("--scheme", ea.scheme, "scheme.txt, binary or multiclass<N>");
  ev->add_option("--group", ea.group, "Group name in the results");
  ev->add_option("--name", ea.name, "Model name in the results");
  ev->add_option("--fold", ea.fold, "Fold label in the results");
  ev->add_option("--out", ea.out, "Results CSV");
  ev->add_option("--preds-out", ea.preds_out, "Write predictions (model mode)");
  ev->add_flag("--force", ea.force, "Accepted for symmetry; eval always runs");

  auto* rp = app.add_subcommand("report", "Render results CSVs as tables");
  rp->add_option("--results", b.report.results, "Results CSV files")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", b.report.out, "Text tables");
  rp->add_option("--csv", b.report.csv_out, "Merged results CSV");

  auto* gn = app.add_subcommand("generate", "Write a synthetic labeled corpus");
  auto& gs = b.generate.spec;
  gn->add_option("--classes", gs.classes, "Class count including non-vulnerable");
  gn->add_option("--per-class", gs.per_class, "Records per class");
  gn->add_option("--min-noise", gs.min_noise, "Minimum filler lines");
  gn->add_option("--max-noise", gs.max_noise, "Maximum filler lines");
  gn->add_option("--seed", gs.seed, "Random seed");
  gn->add_flag("--no-motif", b.generate_no_motif, "Drop motif lines (ablation)");
  gn->add_option("--out-dir", b.generate.out_dir, "Output directory")->required();
  gn->add_flag("--force", b.generate.force, "Ignore the stage stamp");
}

/// Position of the subcommand name in args, skipping global options.
std::optional<std::size_t> find_subcommand(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" || a == "--jobs") {
      ++i;
      continue;
    }
    if (!a.starts_with("-")) return i;
  }
  return std::nullopt;
}

std::optional<std::string> find_config(const std::vector<std::string>& args, std::size_t end) {
  for (std::size_t i = 1; i < end; ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  if (const char* e = std::getenv("GADGETFORGE_CONFIG")) return std::string(e);
  return std::nullopt;
}

bool given_on_command_line(const std::vector<std::string>& args, std::size_t from, const std::string& lname) {
  const std::string flag = "--" + lname;
  for (std::size_t i = from; i < args.size(); ++i) {
    if (args[i] == flag || args[i].starts_with(flag + "=")) return true;
  }
  return false;
}

/// Values from env and config for options absent on the command line.
std::vector<std::string> injected_args(CLI::App& sub, const std::vector<std::string>& args, std::size_t sub_pos,
                                       const ConfigFile& file) {
  const std::string name = sub.get_name();
  std::vector<std::string> out;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& lname = opt->get_lnames().front();
    if (lname == "help" || given_on_command_line(args, sub_pos + 1, lname)) continue;

    std::optional<std::string> value;
    if (const char* e = std::getenv(env_name(name, lname).c_str())) {
      value = e;
    } else if (const char* g = std::getenv(env_name("", lname).c_str())) {
      value = g;
    } else {
      for (const std::string& section : {name, std::string(), std::string("global")}) {
        auto s = file.find(section);
        if (s == file.end()) continue;
        // Config keys may use '-' or '_'.
        std::string alt = lname;
        std::replace(alt.begin(), alt.end(), '-', '_');
        for (const std::string& k : {lname, alt}) {
          auto it = s->second.find(k);
          if (it != s->second.end()) {
            value = it->second;
            break;
          }
        }
        if (value) break;
      }
    }
    if (!value) continue;
    if (opt->get_type_size() == 0) {
      if (truthy(*value)) out.push_back("--" + lname);
    } else if (opt->get_items_expected_max() > 1) {
      std::istringstream items(*value);
      std::string item;
      while (std::getline(items, item, ',')) {
        if (!trim(item).empty()) {
          out.push_back("--" + lname);
          out.push_back(trim(item));
        }
      }
    } else {
      out.push_back("--" + lname);
      out.push_back(*value);
    }
  }
  return out;
}

pl::Outcome dispatch(const std::string& name, Bindings& b) {
  if (name == "extract") return pl::extract(b.extract);
  if (name == "clean") return pl::clean(b.clean);
  if (name == "prepare") {
    for (const auto& in : b.prepare_inputs) {
      const auto eq = in.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(Errc::Usage, "--input takes CATEGORY=path, got " + in);
      b.prepare.inputs.emplace_back(in.substr(0, eq), in.substr(eq + 1));
    }
    b.prepare.symbolize = !b.prepare_no_symbolize;
    b.prepare.stratified = !b.prepare_unstratified;
    return pl::prepare(b.prepare);
  }
  if (name == "tokenize") return pl::tokenize(b.tokenize);
  if (name == "train") {
    b.train.model.arch = parse_architecture(b.arch);
    b.train.model.pooling = b.pooling == "first" ? Pooling::First : Pooling::Last;
    b.train.train.schedule = parse_schedule(b.schedule);
    b.train.train.optimizer = parse_optimizer(b.optimizer);
    b.train.train.parallel = !b.train_serial;
    return pl::train(b.train);
  }
  if (name == "eval") return pl::eval(b.eval);
  if (name == "report") return pl::report(b.report);
  b.generate.spec.include_motif = !b.generate_no_motif;
  return pl::generate(b.generate);
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::Usage, "unterminated section header", lineno);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::Usage, "config line without '='", lineno);
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else {
      // trailing comment: '#' or ';' after whitespace
      for (std::size_t i = 1; i < value.size(); ++i) {
        if ((value[i] == '#' || value[i] == ';') && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
          value = trim(std::string_view(value).substr(0, i));
          break;
        }
      }
    }
    out[section][trim(std::string_view(line).substr(0, eq))] = value;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Bindings b;
  CLI::App app("gadgetforge: code gadget extraction, cleaning and vulnerability classifiers", "gadgetforge");
  build(app, b);

  try {
    std::vector<std::string> full = args;
    if (const auto pos = find_subcommand(args)) {
      CLI::App* sub = nullptr;
      try {
        sub = app.get_subcommand(args[*pos]);
      } catch (const CLI::OptionNotFound&) {
      }
      if (sub) {
        ConfigFile file;
        if (const auto cfg = find_config(args, *pos)) file = parse_config(read_file(*cfg));
        const auto extra = injected_args(*sub, args, *pos, file);
        full.insert(full.begin() + static_cast<std::ptrdiff_t>(*pos) + 1, extra.begin(), extra.end());
      }
    }
    std::vector<std::string> reversed(full.begin() + 1, full.end());
    std::reverse(reversed.begin(), reversed.end());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (b.jobs > 0) omp_set_num_threads(b.jobs);
    const std::string name = app.get_subcommands().front()->get_name();
    const pl::Outcome o = dispatch(name, b);
    out << o.message;
    if (!o.message.empty() && o.message.back() != '\n') out << '\n';
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (e.where()) err << " (at " << e.where() << ")";
    err << "\n";
    if (e.code() == Errc::Usage || e.code() == Errc::OddModelDim) return kUsage;
    return is_data_error(e.code()) ? kDataError : kInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace gadgetforge::cli
