#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace opstat {

enum class Errc {
  EmptyOperation,
  DuplicateOutcomeInOperation,
  RedundantOperation,
  UnknownOutcome,
  NewIdCollision,
  PackedNotSubset,
  MergeCollapsesOperation,
  BadOperationIndex,
  EventCapExceeded,
  MissingOutcome,
  ValueOutOfRange,
  OperationSumViolation,
  ManualMismatch,
  NotOrthogonal,
  ZeroVector,
  NotInFrame,
  NotHermitian,
  NotPositive,
  BadTrace,
  ShapeMismatch,
  Underdetermined,
  ParamOutOfRange,
  EmptyCell,
  BadCount,
  ParseError,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyOperation: return "EmptyOperation";
    case Errc::DuplicateOutcomeInOperation: return "DuplicateOutcomeInOperation";
    case Errc::RedundantOperation: return "RedundantOperation";
    case Errc::UnknownOutcome: return "UnknownOutcome";
    case Errc::NewIdCollision: return "NewIdCollision";
    case Errc::PackedNotSubset: return "PackedNotSubset";
    case Errc::MergeCollapsesOperation: return "MergeCollapsesOperation";
    case Errc::BadOperationIndex: return "BadOperationIndex";
    case Errc::EventCapExceeded: return "EventCapExceeded";
    case Errc::MissingOutcome: return "MissingOutcome";
    case Errc::ValueOutOfRange: return "ValueOutOfRange";
    case Errc::OperationSumViolation: return "OperationSumViolation";
    case Errc::ManualMismatch: return "ManualMismatch";
    case Errc::NotOrthogonal: return "NotOrthogonal";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::NotInFrame: return "NotInFrame";
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NotPositive: return "NotPositive";
    case Errc::BadTrace: return "BadTrace";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::Underdetermined: return "Underdetermined";
    case Errc::ParamOutOfRange: return "ParamOutOfRange";
    case Errc::EmptyCell: return "EmptyCell";
    case Errc::BadCount: return "BadCount";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Domain error: the input is well-formed but violates a mathematical
/// precondition of the requested construction.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace opstat
