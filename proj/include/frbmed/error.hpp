#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frbmed {

/// Every failure the library reports. The category of a kind decides the
/// CLI exit code (usage = 2, data = 3, numeric = 4).
enum class ErrorKind {
  // formula and configuration
  SyntaxError,
  NoMediatorTerm,
  MultipleMediatorTerms,
  DuplicateVariable,
  SerialArityError,
  MethodModelMismatch,
  InvalidArgument,
  // data
  UnknownColumn,
  NonNumericColumn,
  EmptyAfterDrop,
  ParseError,
  NoHeader,
  RaggedRows,
  TooFewRows,
  IoError,
  VersionMismatch,
  CorruptFile,
  MissingReplicates,
  UnknownRegressor,
  // numerics
  RankDeficient,
  AllSubsamplesSingular,
  SingularWeightedDesign,
  SingularCovariance,
  DegenerateMoments,
  NoConvergence,
  TooManyDiscardedReplicates,
  ZeroStandardError,
  NotPositiveDefinite,
  NotRobustFit,
  InsufficientWeight,
  ZeroWeightedVariance,
  DegenerateDistribution,
  TooFewPaths,
  NumericFailure,
};

enum class ErrorCategory { Usage, Data, Numeric };

std::string_view to_string(ErrorKind kind);
ErrorCategory category(ErrorKind kind);
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace frbmed
