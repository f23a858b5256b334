#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guiagent {

enum class ErrorCode {
  // action grammar
  Syntax,
  UnknownAction,
  Arity,
  Range,
  Platform,
  // agent loop
  MissingAction,
  // simulator
  UnknownTask,
  UnknownApp,
  UnknownGoal,
  NoOracle,
  Precondition,
  // trace store
  NotFound,
  SchemaVersionMismatch,
  CorruptRecord,
  UnmappableAction,
  MissingScreenDims,
  DanglingCorrection,
  // augmentation / filtering / pairs
  AnnotatorFailure,
  ReplayMismatch,
  ScorerFailure,
  IndexOutOfBounds,
  IdenticalPair,
  // preference optimization
  ActionNotInCatalog,
  EmptyDataset,
  // orchestration and transport
  CorruptCheckpoint,
  EnvError,
  Io,
  Transport,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is an Error carrying a code, so
// callers can branch on the code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace guiagent
