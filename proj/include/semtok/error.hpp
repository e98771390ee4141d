#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semtok {

// Every failure raised by the library carries one of these codes. The CLI
// maps them onto process exit codes through error_category().
enum class ErrorCode {
  // configuration / caller mistakes
  InvalidArgument,
  OutOfRange,
  ConfigError,
  // data problems
  Io,
  MalformedHeader,
  MalformedLine,
  NonFiniteValue,
  DuplicateToken,
  DimensionMismatch,
  RowCountMismatch,
  EmptyVocabulary,
  InvalidToken,
  UnknownToken,
  MissingUnkToken,
  // numeric problems
  ZeroVector,
  NumericFailure,
};

enum class ErrorCategory { Config, Data, Numeric };

ErrorCategory error_category(ErrorCode code) noexcept;
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semtok
