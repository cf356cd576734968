#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace esp {

enum class ErrorCode {
  // input errors
  InvalidArgument,
  Io,
  UnbalancedRingClosure,
  UnbalancedParenthesis,
  UnknownElement,
  ValenceOverflow,
  SmilesSyntax,
  EmptyMolecule,
  NegativeIntensity,
  PeakCountMismatch,
  MalformedPeakLine,
  MalformedRecord,
  FormulaMismatch,
  DimensionMismatch,
  PrecursorOutOfRange,
  TooFewDocuments,
  EmptyVocabulary,
  EmptyCandidateSet,
  TargetIndexOutOfRange,
  NoInformativeExamples,
  FewerMoleculesThanClusters,
  BadMagic,
  VersionMismatch,
  BadConfig,
  // numerical failures
  DivergedLoss,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `offset()` carries a byte offset
/// (SMILES) or a 1-based line number (text formats) when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

  /// True for failures of the optimisation itself rather than bad input.
  bool is_numerical() const noexcept { return code_ == ErrorCode::DivergedLoss; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace esp
