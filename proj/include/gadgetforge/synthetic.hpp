// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gadgetforge/corpus_io.hpp"

namespace gadgetforge {

/// Toy corpus description. Class 0 carries a bounds-checked copy; vulnerable
/// classes carry BE (unchecked strcpy into a fixed buffer), RME (double
/// free), then further motifs for larger class counts.
struct GeneratorSpec {
  std::size_t classes = 2;
  std::size_t per_class = 10;
  std::size_t min_noise = 2;
  std::size_t max_noise = 6;
  std::uint64_t seed = 0;
  /// false: emit the same records without their motif lines (ablation).
  bool include_motif = true;
};

/// Highest supported class count.
std::size_t max_synthetic_classes();

/// Category tag of vulnerable class c >= 1 ("BE", "RME", ...).
std::string synthetic_category(std::size_t c);

/// Records ordered class by class, ids 1..N, raw label = class index.
/// Non-vulnerable records are tagged with the vulnerable categories in turn
/// so each category has its own NV share. A pure function of the spec.
std::vector<GadgetRecord> generate(const GeneratorSpec& spec);

}  // namespace gadgetforge
