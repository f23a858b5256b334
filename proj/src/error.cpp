#include "guiagent/error.hpp"

namespace guiagent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "SyntaxError";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::Arity: return "ArityError";
    case ErrorCode::Range: return "RangeError";
    case ErrorCode::Platform: return "PlatformError";
    case ErrorCode::MissingAction: return "MissingAction";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::UnknownApp: return "UnknownApp";
    case ErrorCode::UnknownGoal: return "UnknownGoal";
    case ErrorCode::NoOracle: return "NoOracle";
    case ErrorCode::Precondition: return "PreconditionViolation";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::UnmappableAction: return "UnmappableAction";
    case ErrorCode::MissingScreenDims: return "MissingScreenDims";
    case ErrorCode::DanglingCorrection: return "DanglingCorrection";
    case ErrorCode::AnnotatorFailure: return "AnnotatorFailure";
    case ErrorCode::ReplayMismatch: return "ReplayMismatch";
    case ErrorCode::ScorerFailure: return "ScorerFailure";
    case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::IdenticalPair: return "IdenticalPair";
    case ErrorCode::ActionNotInCatalog: return "ActionNotInCatalog";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorCode::EnvError: return "EnvError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Transport: return "TransportError";
  }
  return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace guiagent
