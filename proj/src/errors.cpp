#include "l2t/errors.hpp"

namespace l2t {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidTask: return "InvalidTask";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::StaleNode: return "StaleNode";
    case ErrorCode::AlreadyLabeled: return "AlreadyLabeled";
    case ErrorCode::RootBacktrack: return "RootBacktrack";
    case ErrorCode::IllegalExpansion: return "IllegalExpansion";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::MalformedProviderReply: return "MalformedProviderReply";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace l2t
