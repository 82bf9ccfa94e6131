#include "tdw/money.hpp"

#include <fmt/format.h>

#include <limits>

#include "tdw/error.hpp"

namespace tdw {

bool CurrencyCode::valid(std::string_view code) {
  if (code.size() != 3) return false;
  for (char c : code) {
    if (c < 'A' || c > 'Z') return false;
  }
  return true;
}

CurrencyCode::CurrencyCode(std::string_view code) {
  if (!valid(code)) {
    throw Error(ErrorCode::kParse, fmt::format("invalid currency code '{}'", code));
  }
  chars_ = {code[0], code[1], code[2]};
}

namespace {

// Parses [sign] digits [. frac] with frac length <= max_frac, scaled to max_frac digits.
std::optional<int64_t> parse_fixed(std::string_view text, int max_frac, bool allow_sign) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  size_t pos = 0;
  if (allow_sign && (text[0] == '-' || text[0] == '+')) {
    negative = text[0] == '-';
    pos = 1;
  }
  constexpr int64_t kMax = std::numeric_limits<int64_t>::max() / 10;
  int64_t value = 0;
  size_t int_digits = 0;
  for (; pos < text.size() && text[pos] != '.'; ++pos) {
    char c = text[pos];
    if (c < '0' || c > '9') return std::nullopt;
    if (value > kMax) return std::nullopt;
    value = value * 10 + (c - '0');
    ++int_digits;
  }
  if (int_digits == 0) return std::nullopt;
  int frac_digits = 0;
  if (pos < text.size()) {
    ++pos;  // '.'
    if (pos == text.size()) return std::nullopt;
    for (; pos < text.size(); ++pos) {
      char c = text[pos];
      if (c < '0' || c > '9') return std::nullopt;
      if (++frac_digits > max_frac) return std::nullopt;
      if (value > kMax) return std::nullopt;
      value = value * 10 + (c - '0');
    }
  }
  for (; frac_digits < max_frac; ++frac_digits) {
    if (value > kMax) return std::nullopt;
    value *= 10;
  }
  return negative ? -value : value;
}

}  // namespace

std::optional<int64_t> parse_amount_minor(std::string_view text) {
  return parse_fixed(text, kMinorUnitScale, true);
}

std::string format_amount_minor(int64_t minor) {
  // Avoid negating INT64_MIN.
  uint64_t mag = minor < 0 ? 0 - static_cast<uint64_t>(minor) : static_cast<uint64_t>(minor);
  return fmt::format("{}{}.{:02d}", minor < 0 ? "-" : "", mag / 100, mag % 100);
}

std::optional<RateMicro> parse_rate(std::string_view text) {
  auto v = parse_fixed(text, 6, false);
  if (!v || *v <= 0) return std::nullopt;
  return RateMicro{*v};
}

std::string format_rate(RateMicro rate) {
  return fmt::format("{}.{:06d}", rate.micro / RateMicro::kOne, rate.micro % RateMicro::kOne);
}

int64_t div_round_half_even(Int128 numerator, int64_t denominator) {
  if (denominator <= 0) throw Error(ErrorCode::kInvalidArgument, "non-positive divisor");
  Int128 q = numerator / denominator;
  Int128 r = numerator % denominator;  // same sign as numerator
  Int128 twice = (r < 0 ? -r : r) * 2;
  if (twice > denominator || (twice == denominator && (q % 2 != 0))) {
    q += numerator < 0 ? -1 : 1;
  }
  return static_cast<int64_t>(q);
}

}  // namespace tdw
