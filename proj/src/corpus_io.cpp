// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gadgetforge/error.hpp"
#include "gadgetforge/extractor.hpp"
#include "gadgetforge/sha256.hpp"

namespace gadgetforge {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kDelimiter = "---------------------------------";

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_unsigned(std::string_view text) {
  T value{};
  if (text.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void malformed(std::size_t block, const std::string& reason) {
  throw Error(Errc::MalformedRecord, "block " + std::to_string(block) + ": " + reason, block);
}

}  // namespace

std::string_view to_string(Origin origin) {
  switch (origin) {
    case Origin::NVD: return "NVD";
    case Origin::SARD: return "SARD";
    case Origin::Extracted: return "extracted";
    case Origin::Synthetic: return "synthetic";
  }
  return "extracted";
}

bool is_delimiter_line(std::string_view line) {
  line = trim(line);
  return line.size() >= 30 && std::all_of(line.begin(), line.end(), [](char c) { return c == '-'; });
}

GadgetRecord with_id(GadgetRecord record, std::uint64_t id) {
  record.id = id;
  std::string_view header = record.header;
  std::size_t start = header.find_first_not_of(" \t");
  if (start == std::string_view::npos) start = header.size();
  std::size_t end = header.find_first_of(" \t", start);
  if (end == std::string_view::npos) end = header.size();
  record.header = std::string(header.substr(0, start)) + std::to_string(id) + std::string(header.substr(end));
  return record;
}

std::vector<GadgetRecord> parse_gadget_corpus(std::string_view bytes, const ParseOptions& options) {
  std::vector<GadgetRecord> records;
  std::vector<std::string_view> block;
  std::size_t block_index = 0;

  auto finish_block = [&]() {
    if (block.size() < 3) malformed(block_index, "block needs a header, a body and a label line");
    GadgetRecord rec;
    rec.header = std::string(block.front());
    const auto tokens = split_ws(block.front());
    if (tokens.size() < 4) malformed(block_index, "header has fewer than 4 tokens");
    const auto id = parse_unsigned<std::uint64_t>(tokens.front());
    if (!id) malformed(block_index, "header id is not an unsigned integer");
    rec.id = *id;
    const auto label = parse_unsigned<unsigned>(trim(block.back()));
    if (!label) malformed(block_index, "missing label line");
    if (options.label_classes != 0 && *label >= options.label_classes) {
      malformed(block_index, "label " + std::to_string(*label) + " out of domain");
    }
    rec.label = *label;
    for (std::size_t i = 1; i + 1 < block.size(); ++i) rec.body.emplace_back(block[i]);
    rec.origin = options.origin;
    rec.category = options.category;
    records.push_back(std::move(rec));
    block.clear();
    ++block_index;
  };

  std::size_t pos = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? bytes.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (is_delimiter_line(line)) {
      finish_block();
    } else if (block.empty() && trim(line).empty()) {
      continue;  // blank lines between blocks
    } else {
      block.push_back(line);
    }
  }
  if (!block.empty()) malformed(block_index, "missing delimiter line");
  return records;
}

std::string write_gadget_corpus(const std::vector<GadgetRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    out += rec.header;
    out += '\n';
    for (const auto& line : rec.body) {
      out += line;
      out += '\n';
    }
    out += std::to_string(rec.label.value_or(0));
    out += '\n';
    out += kDelimiter;
    out += '\n';
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoFailure, "read failed for " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoFailure, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Raw: return "raw";
    case Stage::Cleaned: return "cleaned";
    case Stage::Symbolized: return "symbolized";
    case Stage::Split: return "split";
  }
  return "raw";
}

Stage stage_from_string(std::string_view text) {
  if (text == "raw") return Stage::Raw;
  if (text == "cleaned") return Stage::Cleaned;
  if (text == "symbolized") return Stage::Symbolized;
  if (text == "split") return Stage::Split;
  throw Error(Errc::MalformedRecord, "unknown stage '" + std::string(text) + "'");
}

std::size_t CorpusManifest::total() const {
  std::size_t n = 0;
  for (const auto& [label, count] : counts) n += count;
  return n;
}

CorpusManifest make_manifest(std::string name, Stage stage, const std::vector<GadgetRecord>& records) {
  CorpusManifest m;
  m.name = std::move(name);
  m.stage = stage;
  m.digest = sha256_hex(write_gadget_corpus(records));
  for (const auto& rec : records) ++m.counts[rec.label.value_or(0)];
  return m;
}

std::string write_manifest(const CorpusManifest& manifest) {
  std::ostringstream out;
  out << "name = " << manifest.name << '\n';
  out << "stage = " << to_string(manifest.stage) << '\n';
  out << "digest = " << manifest.digest << '\n';
  for (const auto& [label, count] : manifest.counts) out << "count." << label << " = " << count << '\n';
  return out.str();
}

CorpusManifest parse_manifest(std::string_view text) {
  CorpusManifest m;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() : nl + 1;
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::MalformedRecord, "manifest line without '='", line_no);
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "name") {
      m.name = value;
    } else if (key == "stage") {
      m.stage = stage_from_string(value);
    } else if (key == "digest") {
      m.digest = value;
    } else if (key.starts_with("count.")) {
      const auto label = parse_unsigned<unsigned>(key.substr(6));
      const auto count = parse_unsigned<std::size_t>(value);
      if (!label || !count) throw Error(Errc::MalformedRecord, "bad count entry", line_no);
      m.counts[*label] = *count;
    }
  }
  return m;
}

std::vector<SourceFile> ingest_source_tree(const fs::path& root, const IngestOptions& options) {
  static constexpr std::string_view kExtensions[] = {".c", ".cc", ".cpp", ".h", ".hpp"};
  if (!fs::is_directory(root)) throw Error(Errc::IoFailure, "not a directory: " + root.string());

  std::vector<fs::path> paths;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (std::find(std::begin(kExtensions), std::end(kExtensions), ext) == std::end(kExtensions)) continue;
    paths.push_back(fs::relative(entry.path(), root));
  }
  std::sort(paths.begin(), paths.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  std::vector<SourceFile> files;
  files.reserve(paths.size());
  for (const auto& rel : paths) {
    std::string text;
    try {
      text = read_file(root / rel);
    } catch (const Error&) {
      if (options.permissive) continue;
      throw Error(Errc::IoFailure, "cannot read " + (root / rel).string());
    }
    files.push_back({fs::path(rel.generic_string()), normalize_source(text)});
  }
  return files;
}

}  // namespace gadgetforge
