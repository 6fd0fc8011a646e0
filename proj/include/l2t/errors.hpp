#ifndef L2T_ERRORS_HPP_
#define L2T_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace l2t {

enum class ErrorCode {
  InvalidTask,
  UnknownNode,
  StaleNode,
  AlreadyLabeled,
  RootBacktrack,
  IllegalExpansion,
  MissingPlaceholder,
  ShapeError,
  NumericalError,
  EmptyBuffer,
  Transport,
  RateLimited,
  MalformedProviderReply,
  InvalidArgument,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace l2t

#endif  // L2T_ERRORS_HPP_
