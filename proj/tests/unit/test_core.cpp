#include <doctest.h>

#include "tdw/csv.hpp"
#include "tdw/date.hpp"
#include "tdw/error.hpp"
#include "tdw/kv_config.hpp"
#include "tdw/money.hpp"
#include "tdw/time_dimension.hpp"
#include "test_support.hpp"

using namespace tdw;

TEST_CASE("half-even division") {
  CHECK(div_round_half_even(5, 2) == 2);
  CHECK(div_round_half_even(7, 2) == 4);
  CHECK(div_round_half_even(-5, 2) == -2);
  CHECK(div_round_half_even(-7, 2) == -4);
  CHECK(div_round_half_even(10, 3) == 3);
  CHECK(div_round_half_even(-11, 3) == -4);
  CHECK_THROWS_AS(div_round_half_even(1, 0), Error);
}

TEST_CASE("conversion rounds half to even") {
  CHECK(convert_minor(10000, RateMicro{905550}) == 9056);  // 9055.5
  CHECK(convert_minor(10000, RateMicro{905650}) == 9056);  // 9056.5
  CHECK(convert_minor(-10000, RateMicro{905550}) == -9056);
  CHECK(convert_minor(123, RateMicro{RateMicro::kOne}) == 123);
}

TEST_CASE("amount parsing and formatting") {
  CHECK(parse_amount_minor("12.3") == 1230);
  CHECK(parse_amount_minor("-0.05") == -5);
  CHECK(parse_amount_minor("100") == 10000);
  CHECK(parse_amount_minor("+4.10") == 410);
  CHECK_FALSE(parse_amount_minor("1.234"));
  CHECK_FALSE(parse_amount_minor("abc"));
  CHECK_FALSE(parse_amount_minor(""));
  CHECK_FALSE(parse_amount_minor("1,5"));
  CHECK(format_amount_minor(-5) == "-0.05");
  CHECK(format_amount_minor(123456) == "1234.56");
  CHECK(parse_rate("0.905550")->micro == 905550);
  CHECK_FALSE(parse_rate("0"));
  CHECK_FALSE(parse_rate("-1"));
  CHECK_FALSE(parse_rate("1.1234567"));
  CHECK(format_rate(RateMicro{905550}) == "0.905550");
}

TEST_CASE("currency codes") {
  CHECK(CurrencyCode::valid("USD"));
  CHECK_FALSE(CurrencyCode::valid("usd"));
  CHECK_FALSE(CurrencyCode::valid("EURO"));
  CHECK_THROWS_AS(CurrencyCode("E1R"), Error);
}

TEST_CASE("dates") {
  CHECK(Date::parse("2016-02-29").iso() == "2016-02-29");
  CHECK_THROWS_AS(Date::parse("2015-02-29"), Error);
  CHECK_THROWS_AS(Date::parse("2015-1-01"), Error);
  CHECK_THROWS_AS(Date::parse("2015-01-01 "), Error);
  CHECK(Date(2016, 1, 1) - Date(2015, 12, 1) == 31);
  CHECK((Date(2015, 12, 31) + 1).iso() == "2016-01-01");
}

TEST_CASE("csv parsing") {
  auto t = parse_csv("\xEF\xBB\xBF" "a,b\r\n1,\"x, \"\"y\"\"\"\r\n\r\n2,\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].fields[1] == "x, \"y\"");
  CHECK(t.rows[1].line == 4);
  CHECK(t.rows[1].fields[1].empty());
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.require_columns({"a", "c"}, "t.csv"), Error);

  std::string line;
  append_csv_line(line, "a,b", "plain");
  CHECK(line == "\"a,b\",plain\n");
  CHECK(parse_csv("h1,h2\n" + line).rows[0].fields[0] == "a,b");
}

TEST_CASE("missing file names the path") {
  try {
    read_file("/nonexistent/movements.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
    CHECK(std::string(e.what()).find("movements.csv") != std::string::npos);
  }
}

TEST_CASE("key=value config") {
  auto kv = KvConfig::parse("# comment\nport = 8080\nname=x y\nflag = true\n\n");
  CHECK(kv.get_int("port", 0) == 8080);
  CHECK(kv.get_or("name", "") == "x y");
  CHECK(kv.get_bool("flag", false));
  CHECK(kv.get_int("absent", 7) == 7);
  CHECK_THROWS_AS(KvConfig::parse("no equals sign\n"), Error);
  CHECK_THROWS_AS(kv.get_int("name", 0), Error);
}

TEST_CASE("time attributes") {
  auto d = time_attributes(Date(2015, 12, 31));
  CHECK(d.year == 2015);
  CHECK(d.semester == 2);
  CHECK(d.quarter == 4);
  CHECK(d.month == 12);
  CHECK(d.iso_week_year == 2015);
  CHECK(d.iso_week_no == 53);
  CHECK(d.is_last_day_of_year);
  CHECK(d.is_last_day_of_semester);
  CHECK_FALSE(d.is_last_day_of_week);

  auto sun = time_attributes(Date(2016, 1, 3));
  CHECK(sun.iso_week_year == 2015);
  CHECK(sun.iso_week_no == 53);
  CHECK(sun.is_last_day_of_week);
  auto mon = time_attributes(Date(2016, 1, 4));
  CHECK(mon.iso_week_year == 2016);
  CHECK(mon.iso_week_no == 1);

  auto early = time_attributes(Date(2008, 12, 29));
  CHECK(early.iso_week_year == 2009);
  CHECK(early.iso_week_no == 1);

  CHECK(time_attributes(Date(2016, 6, 30)).is_last_day_of_semester);
  CHECK(time_attributes(Date(2016, 2, 29)).is_last_day_of_month);
  CHECK_FALSE(time_attributes(Date(2016, 2, 28)).is_last_day_of_month);
  CHECK_THROWS_AS(time_attributes(Date(1899, 12, 31)), Error);
  CHECK_THROWS_AS(time_attributes(Date(2200, 1, 1)), Error);
}

TEST_CASE("time table build and extend") {
  auto t = build_time_table(2009, 2016);
  CHECK(t.size() == 2922);
  size_t eoy = 0, eom = 0, eoq = 0, eos = 0;
  for (const auto& r : t.records()) {
    eoy += r.is_last_day_of_year;
    eom += r.is_last_day_of_month;
    eoq += r.is_last_day_of_quarter;
    eos += r.is_last_day_of_semester;
  }
  CHECK(eoy == 8);
  CHECK(eom == 96);
  CHECK(eoq == 32);
  CHECK(eos == 16);

  auto e = extend_time_table(t, 2017);
  CHECK(e.size() - t.size() == 365);
  for (size_t i = 0; i < t.size(); ++i) REQUIRE(e[i] == t[i]);
  CHECK(extend_time_table(e, 2016) == e);

  CHECK_THROWS_AS(build_time_table(2016, 2015), Error);
  CHECK(time_table_from_csv(time_table_to_csv(e)) == e);
}

TEST_CASE("time table csv is validated") {
  auto csv = time_table_to_csv(build_time_table(2015, 2015));
  auto broken = csv;
  broken.replace(broken.find("2015-01-02,2015,1,1,1,1,2015,0"), 30, "2015-01-02,2015,1,1,1,1,2015,1");
  CHECK_THROWS_AS(time_table_from_csv(broken), Error);
  auto gap = csv;
  gap.erase(gap.find("2015-03-01"), gap.find("2015-03-02") - gap.find("2015-03-01"));
  CHECK_THROWS_AS(time_table_from_csv(gap), Error);
}

TEST_CASE("time table file round trip") {
  testing::TempDir tmp("timetable");
  auto t = build_time_table(2015, 2016);
  save_time_table(tmp.path() / "tt.csv", t);
  CHECK(load_time_table(tmp.path() / "tt.csv") == t);
}
