#pragma once

#include <stdexcept>
#include <string>

namespace shotmix {

enum class ErrorCode {
  InvalidArgument,  // caller violated a precondition or invariant
  ParseError,       // malformed input document
  IoError,          // filesystem failure
  Internal,         // bug or unexpected state
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_invalid(const std::string& message) {
  throw Error(ErrorCode::InvalidArgument, message);
}

[[noreturn]] inline void fail_parse(const std::string& message) {
  throw Error(ErrorCode::ParseError, message);
}

[[noreturn]] inline void fail_io(const std::string& message) {
  throw Error(ErrorCode::IoError, message);
}

}  // namespace shotmix
