// SPDX-License-Identifier: Apache-2.0
#include "gadgetforge/error.hpp"

namespace gadgetforge {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::IoFailure: return "IoFailure";
    case Errc::UnterminatedComment: return "UnterminatedComment";
    case Errc::RecursionLimit: return "RecursionLimit";
    case Errc::UnlabeledRecord: return "UnlabeledRecord";
    case Errc::UnknownCategory: return "UnknownCategory";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::TooFewRecords: return "TooFewRecords";
    case Errc::OddModelDim: return "OddModelDim";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptySequence: return "EmptySequence";
    case Errc::ConfigMismatch: return "ConfigMismatch";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::NoVulnerableClasses: return "NoVulnerableClasses";
    case Errc::Usage: return "Usage";
  }
  return "Unknown";
}

bool is_data_error(Errc code) {
  switch (code) {
    case Errc::MalformedRecord:
    case Errc::IoFailure:
    case Errc::UnterminatedComment:
    case Errc::RecursionLimit:
    case Errc::UnlabeledRecord:
    case Errc::UnknownCategory:
    case Errc::EmptyGroup:
    case Errc::TooFewRecords:
    case Errc::LabelOutOfRange:
    case Errc::LengthMismatch:
    case Errc::NoVulnerableClasses:
    case Errc::ConfigMismatch:
    case Errc::NonFiniteLoss:
      return true;
    default:
      return false;
  }
}

}  // namespace gadgetforge
