#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcn {

enum class ErrorCode {
  InvalidInput,
  MalformedBlock,
  ShapeError,
  InvalidLabel,
  EmptyEvaluation,
  EmptyClass,
  DegenerateMarginals,
  BadMagic,
  TruncatedPayload,
  DimOverflow,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the toolkit. The code is stable and machine
/// parsable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pcn
