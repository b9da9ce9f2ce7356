// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/cleaner.hpp"

#include <set>
#include <sstream>
#include <unordered_map>

#include "gadgetforge/error.hpp"
#include "gadgetforge/kernels.hpp"
#include "gadgetforge/sha256.hpp"

namespace gadgetforge {

std::string canonicalize_body(const GadgetRecord& record, const CanonOptions& options) {
  std::vector<std::string_view> lines;
  lines.reserve(record.body.size());
  for (const auto& l : record.body) {
    std::string_view v = l;
    if (!v.empty() && v.back() == '\r') v.remove_suffix(1);
    if (options.strip_trailing_whitespace) {
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    }
    lines.push_back(v);
  }
  std::size_t begin = 0;
  std::size_t end = lines.size();
  if (options.drop_edge_blank_lines) {
    auto blank = [](std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; };
    while (begin < end && blank(lines[begin])) ++begin;
    while (end > begin && blank(lines[end - 1])) --end;
  }
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back('\n');
    out.append(lines[i]);
  }
  return out;
}

GadgetDigest gadget_hash(const GadgetRecord& record, const CanonOptions& options) {
  return {sha256_hex(canonicalize_body(record, options)), record.label};
}

ClassCounts CleanReport::totals() const {
  ClassCounts t;
  for (const auto& [label, c] : classes) {
    t.original += c.original;
    t.cleaned += c.cleaned;
    t.conflicting += c.conflicting;
    t.redundant += c.redundant;
    t.both += c.both;
  }
  return t;
}

CleanResult clean_corpus(const std::vector<GadgetRecord>& records, const CleanOptions& options) {
  std::vector<std::string> canon(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) {
      throw Error(Errc::UnlabeledRecord, "record " + std::to_string(records[i].id) + " has no label", records[i].id);
    }
    canon[i] = canonicalize_body(records[i], options.canon);
  }
  const auto digests = options.parallel ? kernels::sha256_all_parallel(canon) : kernels::sha256_all_serial(canon);

  std::unordered_map<std::string_view, std::set<unsigned>> labels_of;
  for (std::size_t i = 0; i < records.size(); ++i) labels_of[digests[i]].insert(*records[i].label);

  CleanResult result;
  std::set<std::pair<std::string_view, unsigned>> seen_pair;
  std::set<std::string_view> seen_digest;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const unsigned label = *records[i].label;
    ClassCounts& counts = result.report.classes[label];
    ++counts.original;
    const std::string_view d = digests[i];
    if (labels_of[d].size() > 1) {
      if (seen_pair.insert({d, label}).second) {
        ++counts.conflicting;
      } else {
        ++counts.both;
      }
      continue;
    }
    if (!seen_digest.insert(d).second) {
      ++counts.redundant;
      continue;
    }
    ++counts.cleaned;
    result.kept.push_back(records[i]);
  }
  return result;
}

std::string report_text(const CleanReport& report) {
  const ClassCounts t = report.totals();
  std::ostringstream out;
  out << "original = " << t.original << '\n'
      << "cleaned = " << t.cleaned << '\n'
      << "confliction = " << t.conflicting << '\n'
      << "redundancy = " << t.redundant << '\n'
      << "both = " << t.both << '\n';
  for (const auto& [label, c] : report.classes) {
    out << "class." << label << ".original = " << c.original << '\n'
        << "class." << label << ".cleaned = " << c.cleaned << '\n'
        << "class." << label << ".confliction = " << c.conflicting << '\n'
        << "class." << label << ".redundancy = " << c.redundant << '\n'
        << "class." << label << ".both = " << c.both << '\n';
  }
  return out.str();
}

std::string report_csv(const CleanReport& report, const std::vector<std::string>& class_names) {
  std::ostringstream out;
  out << "class,original,cleaned,confliction,redundancy,both\n";
  for (const auto& [label, c] : report.classes) {
    if (label < class_names.size()) {
      out << class_names[label];
    } else {
      out << label;
    }
    out << ',' << c.original << ',' << c.cleaned << ',' << c.conflicting << ',' << c.redundant << ',' << c.both
        << '\n';
  }
  return out.str();
}

}  // namespace gadgetforge
