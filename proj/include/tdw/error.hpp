#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tdw {

/// Machine-readable failure categories. The names double as the wire-level
/// error identifiers returned by the query service.
enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kParse,
  kIo,
  kMissingFile,
  kBadInput,
  kDuplicateKey,
  kDuplicateOpening,
  kOpeningAfterMovement,
  kDateOutOfTable,
  kUnknownAccount,
  kNoRate,
  kStarInvalid,
  kCorruptStore,
  kMalformedQuery,
  kMixedCurrency,
  kInapplicableOp,
  kWrongSampleSize,
  kUnsupportedDf,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace tdw
