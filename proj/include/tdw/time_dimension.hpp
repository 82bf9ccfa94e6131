#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdw/date.hpp"

namespace tdw {

inline constexpr int kMinSupportedYear = 1900;
inline constexpr int kMaxSupportedYear = 2199;

enum class Period { kWeek, kMonth, kQuarter, kSemester, kYear };

/// Calendar attributes of one day. Weeks follow ISO-8601 (Monday to Sunday),
/// so the week pairs with its ISO week-year rather than the calendar year.
struct TimeRecord {
  Date date;
  int iso_week_year = 0;
  int iso_week_no = 0;
  int month = 0;
  int quarter = 0;
  int semester = 0;
  int year = 0;
  bool is_last_day_of_week = false;
  bool is_last_day_of_month = false;
  bool is_last_day_of_quarter = false;
  bool is_last_day_of_semester = false;
  bool is_last_day_of_year = false;

  bool is_last_day_of(Period p) const;

  bool operator==(const TimeRecord&) const = default;
};

/// Throws Error(kOutOfRange) outside years 1900..2199.
TimeRecord time_attributes(Date date);

/// Gap-free, ascending run of days.
class TimeTable {
 public:
  TimeTable() = default;

  /// Validates contiguity and that every record matches time_attributes().
  static TimeTable from_records(std::vector<TimeRecord> records);
  /// Any contiguous date interval; first <= last.
  static TimeTable for_range(Date first, Date last);

  std::span<const TimeRecord> records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  Date first_date() const { return records_.front().date; }
  Date last_date() const { return records_.back().date; }

  bool contains(Date d) const {
    return !records_.empty() && d >= first_date() && d <= last_date();
  }
  std::optional<size_t> index_of(Date d) const {
    if (!contains(d)) return std::nullopt;
    return static_cast<size_t>(d - first_date());
  }
  const TimeRecord& operator[](size_t i) const { return records_[i]; }

  bool operator==(const TimeTable&) const = default;

 private:
  std::vector<TimeRecord> records_;

  friend TimeTable extend_time_table(const TimeTable& table, int new_last_year);
};

/// Jan 1 of first_year through Dec 31 of last_year.
TimeTable build_time_table(int first_year, int last_year);

/// Appends whole days through Dec 31 of new_last_year; existing records are
/// untouched and the call is a no-op if the table already reaches that year.
TimeTable extend_time_table(const TimeTable& table, int new_last_year);

std::string time_table_to_csv(const TimeTable& table);
TimeTable time_table_from_csv(std::string_view text, std::string_view source = "time_table.csv");

TimeTable load_time_table(const std::filesystem::path& path);
void save_time_table(const std::filesystem::path& path, const TimeTable& table);

}  // namespace tdw
