// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gadgetforge {

enum class Errc {
  MalformedRecord,
  IoFailure,
  UnterminatedComment,
  RecursionLimit,
  UnlabeledRecord,
  UnknownCategory,
  EmptyGroup,
  TooFewRecords,
  OddModelDim,
  ShapeMismatch,
  EmptySequence,
  ConfigMismatch,
  LabelOutOfRange,
  StepOutOfRange,
  NonFiniteLoss,
  LengthMismatch,
  NoVulnerableClasses,
  Usage,
};

std::string_view to_string(Errc code);

/// Errors caused by the input data (as opposed to misuse or internal faults).
bool is_data_error(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, std::size_t where = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), where_(where) {}

  Errc code() const noexcept { return code_; }
  /// Block index, line number or step, depending on the error kind.
  std::size_t where() const noexcept { return where_; }

 private:
  Errc code_;
  std::size_t where_;
};

}  // namespace gadgetforge
