// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gadgetforge/corpus_io.hpp"
#include "gadgetforge/lexer.hpp"

namespace gadgetforge {

/// Strips // and /* */ comments (string and character literals are left
/// alone) and every byte >= 0x80. Newlines inside block comments are kept so
/// line numbers survive. Idempotent and never lengthens the text.
/// Throws Error(UnterminatedComment) with the line of the opening "/*".
std::string normalize_source(std::string_view text);

struct SourceUnit {
  std::string path;
  std::vector<std::string> lines;  // lines[0] is line 1
  std::vector<Token> tokens;
};

/// Tokenizes already-normalized text.
SourceUnit make_unit(std::string path, std::string_view normalized_text);

enum class DefinitionKind { Function, Variable };

struct Definition {
  std::string name;
  DefinitionKind kind = DefinitionKind::Variable;
  std::size_t decl_line = 0;
  std::vector<std::size_t> uses;  // ascending, deduplicated

  std::size_t scope = 0;   // 0 is file scope
  std::string function;    // enclosing function of a variable, empty at file scope
  bool is_parameter = false;
  std::size_t parameter_index = 0;
  std::size_t decl_token = 0;
};

/// Function definitions and variable/parameter declarations with their uses.
/// Shadowed names resolve to the innermost enclosing declaration.
std::vector<Definition> extract_definitions(const SourceUnit& unit);

struct CallSite {
  std::string callee;
  std::string path;
  std::size_t line = 0;
  std::vector<std::string> arguments;  // identifiers in argument order, deduplicated
  std::string function;                // enclosing function, empty at file scope
  std::size_t token = 0;               // index of the callee token in the unit
};

/// Calls to functions in `api`, in token order. Nested callees and member
/// names are not arguments.
std::vector<CallSite> find_api_calls(const SourceUnit& unit, const std::set<std::string, std::less<>>& api);

struct SliceLine {
  std::string path;
  std::size_t line = 0;

  bool operator==(const SliceLine&) const = default;
  auto operator<=>(const SliceLine&) const = default;
};

/// Definitions, scopes and line-level def/use facts for a set of units.
/// Immutable after construction.
class ProgramIndex {
 public:
  explicit ProgramIndex(std::vector<SourceUnit> units);
  ~ProgramIndex();
  ProgramIndex(ProgramIndex&&) noexcept;
  ProgramIndex& operator=(ProgramIndex&&) noexcept;

  const std::vector<SourceUnit>& units() const;
  const std::vector<Definition>& definitions(std::size_t unit) const;
  std::size_t unit_index(std::string_view path) const;
  const std::string& line_text(const SliceLine& where) const;

  struct Impl;
  const Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

struct SliceOptions {
  std::size_t max_depth = 8;
};

/// Backward data-dependence slice from an API call: declaration and
/// assignment lines feeding the call's arguments within the enclosing
/// function, preceded by the slices of every caller when an argument flows
/// in through a parameter. Throws Error(RecursionLimit) past max_depth;
/// call-graph cycles are cut silently.
std::vector<SliceLine> backtrack_slice(const CallSite& site, const ProgramIndex& index, const SliceOptions& options = {});

/// Header "<id> <path> <callee> <line>"; body is the sliced lines, trimmed,
/// grouped by file in first-appearance order. Label is left unset.
GadgetRecord assemble_gadget(const std::vector<SliceLine>& slice, const CallSite& site, const ProgramIndex& index,
                             std::uint64_t id);

using ApiList = std::set<std::string, std::less<>>;

/// One identifier per line; '#' starts a comment.
ApiList parse_api_list(std::string_view text);

/// C standard library memory and string functions.
const ApiList& default_api_list();

struct ExtractOptions {
  SliceOptions slice;
  /// Call sites "<path>:<line>" known to be vulnerable; those gadgets get label 1, all others 0.
  std::set<std::string, std::less<>> vulnerable_sites;
  Origin origin = Origin::Extracted;
};

/// Whole extraction: index the files, find API calls, slice, assemble.
/// Gadget ids are 1-based in (path, call token) order.
std::vector<GadgetRecord> extract_gadgets(const std::vector<SourceFile>& files, const ApiList& api,
                                          const ExtractOptions& options = {});

}  // namespace gadgetforge
