// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gadgetforge/corpus_io.hpp"

namespace gadgetforge {

/// Knobs for the text that gets hashed.
struct CanonOptions {
  bool strip_trailing_whitespace = true;
  bool drop_edge_blank_lines = true;
};

/// Body lines joined with LF; header and id never take part.
std::string canonicalize_body(const GadgetRecord& record, const CanonOptions& options = {});

struct GadgetDigest {
  std::string digest;  // 64 hex chars
  std::optional<unsigned> label;

  bool operator==(const GadgetDigest&) const = default;
};

GadgetDigest gadget_hash(const GadgetRecord& record, const CanonOptions& options = {});

/// Removal counts. The three removal columns partition the removed records:
///  - conflicting: the first record of each (digest, label) pair whose digest
///    carries two or more labels,
///  - both: further copies of such a pair (conflicting and redundant),
///  - redundant: later copies of a non-conflicting digest.
struct ClassCounts {
  std::size_t original = 0;
  std::size_t cleaned = 0;
  std::size_t conflicting = 0;
  std::size_t redundant = 0;
  std::size_t both = 0;

  bool operator==(const ClassCounts&) const = default;
};

struct CleanReport {
  std::map<unsigned, ClassCounts> classes;

  ClassCounts totals() const;
  bool operator==(const CleanReport&) const = default;
};

struct CleanOptions {
  CanonOptions canon;
  bool parallel = true;
};

struct CleanResult {
  std::vector<GadgetRecord> kept;
  CleanReport report;
};

/// Drops every record whose body digest carries more than one label, then
/// keeps only the first record of each remaining digest. Input order is
/// otherwise preserved. Throws Error(UnlabeledRecord).
CleanResult clean_corpus(const std::vector<GadgetRecord>& records, const CleanOptions& options = {});

/// "key = value" block: totals then per-class counts.
std::string report_text(const CleanReport& report);

/// Header plus one row per class: class,original,cleaned,confliction,redundancy,both.
std::string report_csv(const CleanReport& report, const std::vector<std::string>& class_names = {});

}  // namespace gadgetforge
