#pragma once

#include <stdexcept>
#include <string>

namespace crossrank {

// Error classes map 1:1 onto CLI exit codes.
enum class ErrorCode {
  Io = 3,          // missing or unreadable files
  Format = 4,      // malformed manifests, payload size mismatch, bad CSV
  Validation = 5,  // contract violations (duplicate ids, bad config, ...)
  Dimension = 6,   // incompatible shapes
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail_io(const std::string& msg) {
  throw Error(ErrorCode::Io, msg);
}
[[noreturn]] inline void fail_format(const std::string& msg) {
  throw Error(ErrorCode::Format, msg);
}
[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw Error(ErrorCode::Validation, msg);
}
[[noreturn]] inline void fail_dimension(const std::string& msg) {
  throw Error(ErrorCode::Dimension, msg);
}

}  // namespace crossrank
