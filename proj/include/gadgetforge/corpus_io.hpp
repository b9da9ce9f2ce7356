// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gadgetforge {

enum class Origin { NVD, SARD, Extracted, Synthetic };

std::string_view to_string(Origin origin);

/// One code gadget.
///
/// `header` is the raw first line of the block ("<id> <path> <function>
/// <line>", possibly with extra tokens); `id` is its first token. `category`
/// is the collection the record came from (e.g. "BE" for the CWE-119 file)
/// and is not part of the on-disk block.
struct GadgetRecord {
  std::uint64_t id = 0;
  std::string header;
  std::vector<std::string> body;
  std::optional<unsigned> label;
  Origin origin = Origin::Extracted;
  std::string category;

  bool operator==(const GadgetRecord&) const = default;
};

/// True for a line made only of '-' characters, at least 30 of them.
bool is_delimiter_line(std::string_view line);

/// Returns the record with `id` replaced, rewriting the header's first token.
GadgetRecord with_id(GadgetRecord record, std::uint64_t id);

struct ParseOptions {
  /// Labels must be < this many classes; 0 disables the domain check.
  unsigned label_classes = 2;
  Origin origin = Origin::Extracted;
  std::string category;
};

/// Parses a whole corpus. Throws Error(MalformedRecord) with the zero-based
/// block index on the first bad block.
std::vector<GadgetRecord> parse_gadget_corpus(std::string_view bytes, const ParseOptions& options = {});

/// Serializes records; every record must carry a label.
std::string write_gadget_corpus(const std::vector<GadgetRecord>& records);

/// Reads a file fully. Throws Error(IoFailure).
std::string read_file(const std::filesystem::path& path);

/// Writes `bytes` to `<path>.tmp` then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

enum class Stage { Raw, Cleaned, Symbolized, Split };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

struct CorpusManifest {
  std::string name;
  Stage stage = Stage::Raw;
  std::string digest;
  std::map<unsigned, std::size_t> counts;

  std::size_t total() const;
  bool operator==(const CorpusManifest&) const = default;
};

/// Manifest over the serialized corpus; the digest covers headers, bodies and labels.
CorpusManifest make_manifest(std::string name, Stage stage, const std::vector<GadgetRecord>& records);
std::string write_manifest(const CorpusManifest& manifest);
CorpusManifest parse_manifest(std::string_view text);

struct SourceFile {
  std::filesystem::path path;
  std::string text;
};

struct IngestOptions {
  /// Skip unreadable files instead of failing.
  bool permissive = false;
};

/// Loads every .c/.cc/.cpp/.h/.hpp file under `root` (recursively, sorted by
/// path) and passes its text through normalize_source.
std::vector<SourceFile> ingest_source_tree(const std::filesystem::path& root, const IngestOptions& options = {});

}  // namespace gadgetforge
