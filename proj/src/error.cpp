#include "semtok/error.hpp"

namespace semtok {

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::OutOfRange:
    case ErrorCode::ConfigError:
      return ErrorCategory::Config;
    case ErrorCode::ZeroVector:
    case ErrorCode::NumericFailure:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateToken: return "DuplicateToken";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::InvalidToken: return "InvalidToken";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::MissingUnkToken: return "MissingUnkToken";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

}  // namespace semtok
