#pragma once

#include <stdexcept>
#include <string>

namespace rddmk {

enum class ErrorCode {
  InvalidArgument,
  NotPD,
  NotCorrelation,
  AntipodalPoint,
  NoConvergence,
  DegenerateMean,
  SingularSystem,
  Overflow,
  DegenerateInput,
  DisconnectedGraph,
  PartitionInfeasible,
  NoPairs,
  FitFailed,
  AggregationFailure,
  PreconditionViolation,
  InvalidMatrix,
  RowCountMismatch,
  ParseError,
  ValidationError,
  FactorizationFailure,
  IoError,
};

const char* error_code_name(ErrorCode code);

// Single exception type carrying a machine-readable code plus optional
// context (site id, tile index, offending key, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string context = {})
      : std::runtime_error(message), code_(code), context_(std::move(context)) {}

  ErrorCode code() const { return code_; }
  const std::string& context() const { return context_; }

 private:
  ErrorCode code_;
  std::string context_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string context = {}) {
  throw Error(code, message, std::move(context));
}

}  // namespace rddmk
