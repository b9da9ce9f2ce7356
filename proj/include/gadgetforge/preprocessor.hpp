// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/extractor.hpp"

namespace gadgetforge {

enum class LabelMode { Binary, Multiclass };

/// Class names by label id; index 0 is always the non-vulnerable class.
struct LabelScheme {
  LabelMode mode = LabelMode::Binary;
  std::vector<std::string> class_names{"NV", "V"};

  static LabelScheme binary(std::string category);
  static LabelScheme multiclass(const std::vector<std::string>& categories);

  std::size_t classes() const { return class_names.size(); }
  bool operator==(const LabelScheme&) const = default;
};

/// Renames user functions to FUNC_n and user variables to VAR_n in order of
/// first appearance within the gadget. Keywords, literals, library names and
/// `api` functions are kept. Idempotent.
GadgetRecord symbolize(const GadgetRecord& record, const ApiList& api = default_api_list());

/// Non-zero labels mean "vulnerable in the record's category". Binary maps
/// them to 1; multiclass maps them to the category's index in the scheme.
/// Throws Error(UnknownCategory) for a vulnerable record whose category is
/// not in a multiclass scheme.
std::vector<GadgetRecord> assign_labels(std::vector<GadgetRecord> records, const LabelScheme& scheme);

struct GroupSpec {
  std::string name;
  std::vector<std::string> categories;

  bool operator==(const GroupSpec&) const = default;
};

/// "name = CAT[,CAT...]" lines; '#' comments.
std::vector<GroupSpec> parse_group_specs(std::string_view text);

/// group1..group8: BE, RME, BE+RME, AFC, AE, AU, PU, AFC+AE+AU+PU.
const std::vector<GroupSpec>& default_group_specs();

struct DatasetGroup {
  std::string name;
  LabelScheme scheme;
  std::vector<GadgetRecord> records;
};

/// One group per spec: every record whose category matches, relabeled under
/// the group's scheme (binary for one category, multiclass otherwise) and
/// renumbered 1..N. Throws Error(EmptyGroup).
std::vector<DatasetGroup> build_groups(const std::vector<GadgetRecord>& records, const std::vector<GroupSpec>& specs);

/// Record ids of a partition. For k-fold splits `folds` holds the k test
/// sets and train/test are empty.
struct Split {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> test;
  std::vector<std::vector<std::uint64_t>> folds;
  std::uint64_t seed = 0;

  /// Every id not in fold i, ascending.
  std::vector<std::uint64_t> fold_train(std::size_t i) const;
};

struct SplitOptions {
  double train_fraction = 0.8;
  bool stratified = true;
};

/// round(fraction * N) records go to train; per class the counts are within
/// one record of the exact proportion (largest-remainder apportionment).
Split split_train_test(const DatasetGroup& group, std::uint64_t seed, const SplitOptions& options = {});

/// k near-equal folds dealt round-robin over the per-class shuffled records.
/// Throws Error(TooFewRecords) when the group has fewer than k records.
Split make_folds(const DatasetGroup& group, std::size_t k, std::uint64_t seed, bool stratified = true);

/// One id per line.
std::string write_id_list(const std::vector<std::uint64_t>& ids);
std::vector<std::uint64_t> parse_id_list(std::string_view text);

}  // namespace gadgetforge
