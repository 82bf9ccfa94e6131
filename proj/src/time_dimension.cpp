#include "tdw/time_dimension.hpp"

#include <fmt/format.h>

#include <charconv>

#include "tdw/csv.hpp"
#include "tdw/error.hpp"

namespace tdw {

namespace {

using namespace std::chrono;

void check_year(int year) {
  if (year < kMinSupportedYear || year > kMaxSupportedYear) {
    throw Error(ErrorCode::kOutOfRange,
                fmt::format("year {} outside supported range {}..{}", year, kMinSupportedYear,
                            kMaxSupportedYear));
  }
}

}  // namespace

bool TimeRecord::is_last_day_of(Period p) const {
  switch (p) {
    case Period::kWeek: return is_last_day_of_week;
    case Period::kMonth: return is_last_day_of_month;
    case Period::kQuarter: return is_last_day_of_quarter;
    case Period::kSemester: return is_last_day_of_semester;
    case Period::kYear: return is_last_day_of_year;
  }
  return false;
}

TimeRecord time_attributes(Date date) {
  check_year(date.year());

  TimeRecord r;
  r.date = date;
  r.year = date.year();
  r.month = static_cast<int>(date.month());
  r.quarter = (r.month + 2) / 3;
  r.semester = r.month <= 6 ? 1 : 2;

  // ISO week: the week belongs to the year containing its Thursday.
  const unsigned iso_dow = weekday{date.sys()}.iso_encoding();  // Mon=1 .. Sun=7
  const sys_days thursday = date.sys() + days{4 - static_cast<int>(iso_dow)};
  const year_month_day thu_ymd{thursday};
  r.iso_week_year = static_cast<int>(thu_ymd.year());
  const sys_days jan1{thu_ymd.year() / January / 1};
  r.iso_week_no = static_cast<int>((thursday - jan1).count() / 7 + 1);

  const year_month_day next{date.sys() + days{1}};
  r.is_last_day_of_week = iso_dow == 7;
  r.is_last_day_of_month = next.month() != date.ymd().month();
  r.is_last_day_of_quarter = r.is_last_day_of_month && r.month % 3 == 0;
  r.is_last_day_of_semester = r.is_last_day_of_month && r.month % 6 == 0;
  r.is_last_day_of_year = r.is_last_day_of_month && r.month == 12;
  return r;
}

TimeTable TimeTable::from_records(std::vector<TimeRecord> records) {
  for (size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].date != records[i - 1].date + 1) {
      throw Error(ErrorCode::kBadInput,
                  fmt::format("time table not contiguous at {}", records[i].date.iso()));
    }
    if (records[i] != time_attributes(records[i].date)) {
      throw Error(ErrorCode::kBadInput,
                  fmt::format("time table attributes inconsistent at {}", records[i].date.iso()));
    }
  }
  TimeTable t;
  t.records_ = std::move(records);
  return t;
}

TimeTable TimeTable::for_range(Date first, Date last) {
  if (first > last) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("inverted date range {}..{}", first.iso(), last.iso()));
  }
  check_year(first.year());
  check_year(last.year());
  TimeTable t;
  t.records_.reserve(static_cast<size_t>(last - first + 1));
  for (Date d = first; d <= last; ++d) t.records_.push_back(time_attributes(d));
  return t;
}

TimeTable build_time_table(int first_year, int last_year) {
  if (first_year > last_year) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("inverted year range {}..{}", first_year, last_year));
  }
  return TimeTable::for_range(first_of_year(first_year), last_of_year(last_year));
}

TimeTable extend_time_table(const TimeTable& table, int new_last_year) {
  if (table.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot extend an empty time table");
  TimeTable out = table;
  const Date target = last_of_year(new_last_year);
  if (target <= table.last_date()) return out;
  check_year(new_last_year);
  out.records_.reserve(static_cast<size_t>(target - table.first_date() + 1));
  for (Date d = table.last_date() + 1; d <= target; ++d) out.records_.push_back(time_attributes(d));
  return out;
}

std::string time_table_to_csv(const TimeTable& table) {
  std::string out = "date,iso_week_year,iso_week_no,month,quarter,semester,year,eow,eom,eoq,eos,eoy\n";
  out.reserve(out.size() + table.size() * 40);
  for (const auto& r : table.records()) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{:d},{:d},{:d},{:d},{:d}\n",
                   r.date.iso(), r.iso_week_year, r.iso_week_no, r.month, r.quarter, r.semester,
                   r.year, r.is_last_day_of_week, r.is_last_day_of_month, r.is_last_day_of_quarter,
                   r.is_last_day_of_semester, r.is_last_day_of_year);
  }
  return out;
}

TimeTable time_table_from_csv(std::string_view text, std::string_view source) {
  auto csv = parse_csv(text);
  auto cols = csv.require_columns({"date", "iso_week_year", "iso_week_no", "month", "quarter",
                                   "semester", "year", "eow", "eom", "eoq", "eos", "eoy"},
                                  source);
  auto bad = [&](const CsvRow& row, std::string_view what) {
    return Error(ErrorCode::kBadInput, fmt::format("{}:{}: bad {}", source, row.line, what));
  };
  auto to_int = [&](const CsvRow& row, int col) {
    if (static_cast<size_t>(col) >= row.fields.size()) throw bad(row, "column count");
    const auto& f = row.fields[static_cast<size_t>(col)];
    int v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) throw bad(row, "integer field");
    return v;
  };
  auto to_flag = [&](const CsvRow& row, int col) {
    int v = to_int(row, col);
    if (v != 0 && v != 1) throw bad(row, "flag");
    return v == 1;
  };

  std::vector<TimeRecord> records;
  records.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    TimeRecord r;
    if (row.fields.size() != csv.header.size() ||
        !Date::try_parse(row.fields[static_cast<size_t>(cols[0])], r.date)) {
      throw bad(row, "date");
    }
    r.iso_week_year = to_int(row, cols[1]);
    r.iso_week_no = to_int(row, cols[2]);
    r.month = to_int(row, cols[3]);
    r.quarter = to_int(row, cols[4]);
    r.semester = to_int(row, cols[5]);
    r.year = to_int(row, cols[6]);
    r.is_last_day_of_week = to_flag(row, cols[7]);
    r.is_last_day_of_month = to_flag(row, cols[8]);
    r.is_last_day_of_quarter = to_flag(row, cols[9]);
    r.is_last_day_of_semester = to_flag(row, cols[10]);
    r.is_last_day_of_year = to_flag(row, cols[11]);
    records.push_back(r);
  }
  return TimeTable::from_records(std::move(records));
}

TimeTable load_time_table(const std::filesystem::path& path) {
  return time_table_from_csv(read_file(path), path.string());
}

void save_time_table(const std::filesystem::path& path, const TimeTable& table) {
  write_file_atomic(path, time_table_to_csv(table));
}

}  // namespace tdw
