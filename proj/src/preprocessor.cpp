// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/preprocessor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <map>
#include <set>
#include <unordered_map>

#include "gadgetforge/error.hpp"
#include "gadgetforge/lexer.hpp"
#include "gadgetforge/rng.hpp"

namespace gadgetforge {

LabelScheme LabelScheme::binary(std::string category) {
  return {LabelMode::Binary, {"NV", std::move(category)}};
}

LabelScheme LabelScheme::multiclass(const std::vector<std::string>& categories) {
  LabelScheme s{LabelMode::Multiclass, {"NV"}};
  s.class_names.insert(s.class_names.end(), categories.begin(), categories.end());
  return s;
}

GadgetRecord symbolize(const GadgetRecord& record, const ApiList& api) {
  std::unordered_map<std::string, std::string> mapping;
  std::size_t functions = 0;
  std::size_t variables = 0;

  GadgetRecord out = record;
  for (auto& line : out.body) {
    const auto tokens = lex(line);
    std::string rewritten;
    std::size_t copied = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const Token& t = tokens[i];
      if (t.kind != TokenKind::Ident || is_library_name(t.text) || api.contains(t.text)) continue;
      auto it = mapping.find(t.text);
      if (it == mapping.end()) {
        const bool call = i + 1 < tokens.size() && tokens[i + 1].text == "(";
        std::string symbol = call ? "FUNC_" + std::to_string(++functions) : "VAR_" + std::to_string(++variables);
        it = mapping.emplace(t.text, std::move(symbol)).first;
      }
      rewritten.append(line, copied, t.offset - copied);
      rewritten += it->second;
      copied = t.offset + t.text.size();
    }
    if (copied == 0) continue;
    rewritten.append(line, copied, std::string::npos);
    line = std::move(rewritten);
  }
  return out;
}

std::vector<GadgetRecord> assign_labels(std::vector<GadgetRecord> records, const LabelScheme& scheme) {
  for (auto& rec : records) {
    if (!rec.label) throw Error(Errc::UnlabeledRecord, "record " + std::to_string(rec.id) + " has no label", rec.id);
    if (*rec.label == 0) continue;
    if (scheme.mode == LabelMode::Binary) {
      rec.label = 1;
      continue;
    }
    const auto it = std::find(scheme.class_names.begin() + 1, scheme.class_names.end(), rec.category);
    if (it == scheme.class_names.end()) {
      throw Error(Errc::UnknownCategory, "category '" + rec.category + "' not in scheme", rec.id);
    }
    rec.label = static_cast<unsigned>(it - scheme.class_names.begin());
  }
  return records;
}

std::vector<GroupSpec> parse_group_specs(std::string_view text) {
  std::vector<GroupSpec> specs;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto trim = [](std::string_view s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return std::string_view{};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::MalformedRecord, "group spec line without '='", line_no);
    GroupSpec spec{std::string(trim(line.substr(0, eq))), {}};
    std::string_view cats = line.substr(eq + 1);
    while (!cats.empty()) {
      const std::size_t sep = cats.find_first_of(",+");
      const std::string_view cat = trim(cats.substr(0, sep));
      if (!cat.empty()) spec.categories.emplace_back(cat);
      if (sep == std::string_view::npos) break;
      cats = cats.substr(sep + 1);
    }
    if (spec.name.empty() || spec.categories.empty()) {
      throw Error(Errc::MalformedRecord, "group spec needs a name and at least one category", line_no);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

const std::vector<GroupSpec>& default_group_specs() {
  static const std::vector<GroupSpec> kSpecs = {
      {"group1", {"BE"}}, {"group2", {"RME"}}, {"group3", {"BE", "RME"}}, {"group4", {"AFC"}},
      {"group5", {"AE"}}, {"group6", {"AU"}},  {"group7", {"PU"}},        {"group8", {"AFC", "AE", "AU", "PU"}}};
  return kSpecs;
}

std::vector<DatasetGroup> build_groups(const std::vector<GadgetRecord>& records, const std::vector<GroupSpec>& specs) {
  std::vector<DatasetGroup> groups;
  for (const auto& spec : specs) {
    DatasetGroup g;
    g.name = spec.name;
    g.scheme = spec.categories.size() == 1 ? LabelScheme::binary(spec.categories.front())
                                           : LabelScheme::multiclass(spec.categories);
    for (const auto& rec : records) {
      if (std::find(spec.categories.begin(), spec.categories.end(), rec.category) != spec.categories.end()) {
        g.records.push_back(rec);
      }
    }
    if (g.records.empty()) throw Error(Errc::EmptyGroup, "group '" + spec.name + "' matched no records");
    g.records = assign_labels(std::move(g.records), g.scheme);
    for (std::size_t i = 0; i < g.records.size(); ++i) g.records[i] = with_id(std::move(g.records[i]), i + 1);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<std::uint64_t> Split::fold_train(std::size_t i) const {
  std::vector<std::uint64_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != i) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

/// Record ids bucketed by label (a single bucket when not stratified),
/// each bucket shuffled with the shared generator in label order.
std::vector<std::vector<std::uint64_t>> shuffled_buckets(const DatasetGroup& group, Rng& rng, bool stratified) {
  std::map<unsigned, std::vector<std::uint64_t>> by_label;
  for (const auto& rec : group.records) by_label[stratified ? rec.label.value_or(0) : 0].push_back(rec.id);
  std::vector<std::vector<std::uint64_t>> buckets;
  for (auto& [label, ids] : by_label) {
    rng.shuffle(std::span<std::uint64_t>(ids));
    buckets.push_back(std::move(ids));
  }
  return buckets;
}

}  // namespace

Split split_train_test(const DatasetGroup& group, std::uint64_t seed, const SplitOptions& options) {
  Rng rng(seed);
  Split split;
  split.seed = seed;
  const std::size_t n = group.records.size();
  if (n == 0) return split;
  auto buckets = shuffled_buckets(group, rng, options.stratified);

  const auto target = static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> take(buckets.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const double exact = options.train_fraction * static_cast<double>(buckets[b].size());
    take[b] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[b];
    remainders.emplace_back(exact - std::floor(exact), b);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < target && r < remainders.size(); ++r) {
    const std::size_t b = remainders[r].second;
    if (take[b] < buckets[b].size()) {
      ++take[b];
      ++assigned;
    }
  }
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    split.train.insert(split.train.end(), buckets[b].begin(), buckets[b].begin() + static_cast<std::ptrdiff_t>(take[b]));
    split.test.insert(split.test.end(), buckets[b].begin() + static_cast<std::ptrdiff_t>(take[b]), buckets[b].end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  if (split.test.empty()) std::cerr << "warning: split of " << n << " record(s) leaves an empty test set\n";
  return split;
}

Split make_folds(const DatasetGroup& group, std::size_t k, std::uint64_t seed, bool stratified) {
  if (k == 0 || group.records.size() < k) {
    throw Error(Errc::TooFewRecords,
                "group '" + group.name + "' has " + std::to_string(group.records.size()) + " records for " +
                    std::to_string(k) + " folds");
  }
  Rng rng(seed);
  Split split;
  split.seed = seed;
  split.folds.resize(k);
  std::size_t position = 0;
  for (const auto& bucket : shuffled_buckets(group, rng, stratified)) {
    for (std::uint64_t id : bucket) split.folds[position++ % k].push_back(id);
  }
  for (auto& f : split.folds) std::sort(f.begin(), f.end());
  return split;
}

std::string write_id_list(const std::vector<std::uint64_t>& ids) {
  std::string out;
  for (auto id : ids) {
    out += std::to_string(id);
    out += '\n';
  }
  return out;
}

std::vector<std::uint64_t> parse_id_list(std::string_view text) {
  std::vector<std::uint64_t> ids;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    std::uint64_t id = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), id);
    if (ec != std::errc{} || ptr != line.data() + line.size()) {
      throw Error(Errc::MalformedRecord, "bad id '" + std::string(line) + "'", line_no);
    }
    ids.push_back(id);
  }
  return ids;
}

}  // namespace gadgetforge
