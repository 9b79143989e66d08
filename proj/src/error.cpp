#include "frbmed/error.hpp"

namespace frbmed {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::NoMediatorTerm: return "NoMediatorTerm";
    case ErrorKind::MultipleMediatorTerms: return "MultipleMediatorTerms";
    case ErrorKind::DuplicateVariable: return "DuplicateVariable";
    case ErrorKind::SerialArityError: return "SerialArityError";
    case ErrorKind::MethodModelMismatch: return "MethodModelMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::NonNumericColumn: return "NonNumericColumn";
    case ErrorKind::EmptyAfterDrop: return "EmptyAfterDrop";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NoHeader: return "NoHeader";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::MissingReplicates: return "MissingReplicates";
    case ErrorKind::UnknownRegressor: return "UnknownRegressor";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::AllSubsamplesSingular: return "AllSubsamplesSingular";
    case ErrorKind::SingularWeightedDesign: return "SingularWeightedDesign";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::DegenerateMoments: return "DegenerateMoments";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::TooManyDiscardedReplicates: return "TooManyDiscardedReplicates";
    case ErrorKind::ZeroStandardError: return "ZeroStandardError";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotRobustFit: return "NotRobustFit";
    case ErrorKind::InsufficientWeight: return "InsufficientWeight";
    case ErrorKind::ZeroWeightedVariance: return "ZeroWeightedVariance";
    case ErrorKind::DegenerateDistribution: return "DegenerateDistribution";
    case ErrorKind::TooFewPaths: return "TooFewPaths";
    case ErrorKind::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

ErrorCategory category(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError:
    case ErrorKind::NoMediatorTerm:
    case ErrorKind::MultipleMediatorTerms:
    case ErrorKind::DuplicateVariable:
    case ErrorKind::SerialArityError:
    case ErrorKind::MethodModelMismatch:
    case ErrorKind::InvalidArgument:
      return ErrorCategory::Usage;
    case ErrorKind::UnknownColumn:
    case ErrorKind::NonNumericColumn:
    case ErrorKind::EmptyAfterDrop:
    case ErrorKind::ParseError:
    case ErrorKind::NoHeader:
    case ErrorKind::RaggedRows:
    case ErrorKind::TooFewRows:
    case ErrorKind::IoError:
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptFile:
    case ErrorKind::MissingReplicates:
    case ErrorKind::UnknownRegressor:
      return ErrorCategory::Data;
    default:
      return ErrorCategory::Numeric;
  }
}

int exit_code(ErrorKind kind) {
  switch (category(kind)) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 4;
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace frbmed
