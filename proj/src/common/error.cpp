#include "esp/common/error.hpp"

namespace esp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::UnbalancedRingClosure: return "UnbalancedRingClosure";
    case ErrorCode::UnbalancedParenthesis: return "UnbalancedParenthesis";
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::ValenceOverflow: return "ValenceOverflow";
    case ErrorCode::SmilesSyntax: return "SmilesSyntax";
    case ErrorCode::EmptyMolecule: return "EmptyMolecule";
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::PeakCountMismatch: return "PeakCountMismatch";
    case ErrorCode::MalformedPeakLine: return "MalformedPeakLine";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::FormulaMismatch: return "FormulaMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PrecursorOutOfRange: return "PrecursorOutOfRange";
    case ErrorCode::TooFewDocuments: return "TooFewDocuments";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::TargetIndexOutOfRange: return "TargetIndexOutOfRange";
    case ErrorCode::NoInformativeExamples: return "NoInformativeExamples";
    case ErrorCode::FewerMoleculesThanClusters: return "FewerMoleculesThanClusters";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> offset) {
  std::string out(to_string(code));
  out += ": ";
  out += message;
  if (offset) {
    out += " (at ";
    out += std::to_string(*offset);
    out += ")";
  }
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> offset)
    : std::runtime_error(decorate(code, message, offset)), code_(code), offset_(offset) {}

}  // namespace esp
