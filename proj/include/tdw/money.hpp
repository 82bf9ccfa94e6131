#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tdw {

/// ISO-4217 alphabetic code, three upper-case ASCII letters.
class CurrencyCode {
 public:
  constexpr CurrencyCode() = default;
  /// Throws Error(kParse) unless `code` is exactly three letters A-Z.
  explicit CurrencyCode(std::string_view code);

  static bool valid(std::string_view code);

  std::string str() const { return std::string(chars_.data(), chars_.size()); }
  std::string_view view() const { return {chars_.data(), chars_.size()}; }

  constexpr auto operator<=>(const CurrencyCode&) const = default;

 private:
  std::array<char, 3> chars_{'X', 'X', 'X'};
};

inline const CurrencyCode kEur{"EUR"};

/// Signed amount in minor units (cents). All supported currencies have scale 2.
struct MoneyMinor {
  int64_t amount_minor = 0;
  CurrencyCode currency;

  constexpr auto operator<=>(const MoneyMinor&) const = default;
};

inline constexpr int kMinorUnitScale = 2;

/// Exchange rate to EUR in millionths (six fractional digits, exact).
struct RateMicro {
  int64_t micro = 0;

  static constexpr int64_t kOne = 1'000'000;
  constexpr auto operator<=>(const RateMicro&) const = default;
};

/// Parses dot-decimal text with at most two fractional digits ("-1234.56",
/// "100", "0.5") into minor units. Returns nullopt on any malformed input.
std::optional<int64_t> parse_amount_minor(std::string_view text);

/// Renders minor units as dot-decimal text with two fractional digits.
std::string format_amount_minor(int64_t minor);

/// Parses a positive rate with at most six fractional digits.
std::optional<RateMicro> parse_rate(std::string_view text);
std::string format_rate(RateMicro rate);

/// Wide accumulator for sums of minor units.
__extension__ using Int128 = __int128;

/// numerator / denominator rounded half-to-even. denominator must be > 0.
int64_t div_round_half_even(Int128 numerator, int64_t denominator);

/// amount_minor x rate, rounded half-even back to minor units.
inline int64_t convert_minor(int64_t amount_minor, RateMicro rate) {
  return div_round_half_even(static_cast<Int128>(amount_minor) * rate.micro, RateMicro::kOne);
}

}  // namespace tdw
