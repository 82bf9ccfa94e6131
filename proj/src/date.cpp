#include "tdw/date.hpp"

#include <fmt/format.h>

#include "tdw/error.hpp"

namespace tdw {

namespace {

bool parse_digits(std::string_view s, int& out) {
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return !s.empty();
}

}  // namespace

bool Date::try_parse(std::string_view text, Date& out) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
  int y = 0, m = 0, d = 0;
  if (!parse_digits(text.substr(0, 4), y) || !parse_digits(text.substr(5, 2), m) ||
      !parse_digits(text.substr(8, 2), d)) {
    return false;
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return false;
  out = Date(std::chrono::sys_days{ymd});
  return true;
}

Date Date::parse(std::string_view text) {
  Date out;
  if (!try_parse(text, out)) {
    throw Error(ErrorCode::kParse, fmt::format("invalid ISO date '{}'", text));
  }
  return out;
}

std::string Date::iso() const {
  auto v = ymd();
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(v.year()),
                     static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
}

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kOutOfRange: return "OUT_OF_RANGE";
    case ErrorCode::kParse: return "PARSE_ERROR";
    case ErrorCode::kIo: return "IO_ERROR";
    case ErrorCode::kMissingFile: return "MISSING_FILE";
    case ErrorCode::kBadInput: return "BAD_INPUT";
    case ErrorCode::kDuplicateKey: return "DUPLICATE_KEY";
    case ErrorCode::kDuplicateOpening: return "DUPLICATE_OPENING";
    case ErrorCode::kOpeningAfterMovement: return "OPENING_AFTER_MOVEMENT";
    case ErrorCode::kDateOutOfTable: return "DATE_OUT_OF_TABLE";
    case ErrorCode::kUnknownAccount: return "UNKNOWN_ACCOUNT";
    case ErrorCode::kNoRate: return "NO_RATE";
    case ErrorCode::kStarInvalid: return "STAR_INVALID";
    case ErrorCode::kCorruptStore: return "CORRUPT_STORE";
    case ErrorCode::kMalformedQuery: return "MALFORMED_QUERY";
    case ErrorCode::kMixedCurrency: return "MIXED_CURRENCY";
    case ErrorCode::kInapplicableOp: return "INAPPLICABLE_OP";
    case ErrorCode::kWrongSampleSize: return "WRONG_SAMPLE_SIZE";
    case ErrorCode::kUnsupportedDf: return "UNSUPPORTED_DF";
  }
  return "UNKNOWN";
}

}  // namespace tdw
