#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace tdw {

/// Calendar date stored as days since 1970-01-01 (proleptic Gregorian).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
  constexpr Date(int y, unsigned m, unsigned d)
      : Date(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

  static constexpr Date from_serial(int32_t days) {
    Date out;
    out.days_ = days;
    return out;
  }

  /// Strict ISO-8601 `YYYY-MM-DD`; throws Error(kParse) otherwise.
  static Date parse(std::string_view text);
  /// Non-throwing variant of parse().
  static bool try_parse(std::string_view text, Date& out);

  constexpr int32_t serial() const { return days_; }
  constexpr std::chrono::sys_days sys() const {
    return std::chrono::sys_days{std::chrono::days{days_}};
  }
  constexpr std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{sys()}; }

  constexpr int year() const { return static_cast<int>(ymd().year()); }
  constexpr unsigned month() const { return static_cast<unsigned>(ymd().month()); }
  constexpr unsigned day() const { return static_cast<unsigned>(ymd().day()); }

  std::string iso() const;

  constexpr Date operator+(int n) const { return from_serial(days_ + n); }
  constexpr Date operator-(int n) const { return from_serial(days_ - n); }
  constexpr int operator-(Date other) const { return days_ - other.days_; }
  constexpr Date& operator++() {
    ++days_;
    return *this;
  }

  constexpr auto operator<=>(const Date&) const = default;

 private:
  int32_t days_ = 0;
};

constexpr Date first_of_year(int year) { return Date(year, 1, 1); }
constexpr Date last_of_year(int year) { return Date(year, 12, 31); }

}  // namespace tdw

template <>
struct std::hash<tdw::Date> {
  size_t operator()(tdw::Date d) const noexcept { return std::hash<int32_t>{}(d.serial()); }
};
