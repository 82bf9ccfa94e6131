#include <doctest.h>

#include "test_support.hpp"

using namespace tdw;
using namespace tdw::testing;

namespace {

/// Fixture cube built once from a committed store in a scratch directory.
std::shared_ptr<const CubeSnapshot> fixture_cube() {
  static std::shared_ptr<const CubeSnapshot> cube = [] {
    TempDir tmp("cube");
    auto outcome = run_etl(EtlConfig::load(copy_fixture(tmp) / "etl.conf"));
    return build_cube(outcome.data);
  }();
  return cube;
}

PivotQuery make(Measure m, TimeAggregator a, std::vector<Level> rows, std::vector<Level> cols, Level grain) {
  PivotQuery q;
  q.measure = m;
  q.aggregator = a;
  q.row_levels = std::move(rows);
  q.col_levels = std::move(cols);
  q.time_grain = grain;
  return q;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("frozen queries") {
  const auto cube = fixture_cube();
  for (const auto& entry : expected()["queries"]) {
    CAPTURE(entry["query"]["name"].get<std::string>());
    const auto q = expected_query(entry);
    CHECK(diff_expected(cube->query(q), entry["expected"]) == "");
    CHECK(diff_expected(reference_evaluator(cube->data().facts.rows(), cube->data().dimensions,
                                            cube->data().time, q),
                        entry["expected"]) == "");
  }
}

TEST_CASE("cube equals the reference evaluator") {
  const auto cube = fixture_cube();
  const auto suite = enumerate_oracle_queries();
  CHECK(suite.size() >= 200);
  size_t errors = 0;
  for (const auto& q : suite) {
    CAPTURE(query_to_json(q).dump());
    CHECK(compare_with_reference(*cube, q) == "");
    try {
      cube->query(q);
    } catch (const Error&) {
      ++errors;
    }
  }
  // Most of the suite must produce grids rather than errors.
  CHECK(errors < suite.size() / 4);
}

TEST_CASE("mixed currencies in one cell") {
  const auto cube = fixture_cube();
  auto q = make(Measure::kBalanceOrig, TimeAggregator::kSumClosing, {Level::kCompany}, {}, Level::kDay);
  CHECK(code_of([&] { cube->query(q); }) == ErrorCode::kMixedCurrency);
  q.aggregator = TimeAggregator::kAverage;
  CHECK(code_of([&] { cube->query(q); }) == ErrorCode::kMixedCurrency);
  q.measure = Measure::kBalanceEur;
  CHECK_NOTHROW(cube->query(q));
  q.measure = Measure::kWorkingOrig;
  q.row_levels = {Level::kCurrency};
  const auto r = cube->query(q);
  REQUIRE(r.row_headers.size() == 2);
  CHECK(r.cells[0][0]->currency == kEur);
  CHECK(r.cells[1][0]->currency == CurrencyCode("USD"));
  CHECK_FALSE(r.grand_total);
}

TEST_CASE("closing balance uses the period-end day") {
  const auto cube = fixture_cube();
  auto q = make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {Level::kAccount}, {Level::kMonth},
                Level::kMonth);
  const auto r = cube->query(q);
  REQUIRE(r.col_headers.size() == 2);
  const auto* dec31 = cube->data().facts.find(FactKey{Date(2015, 12, 31), "A1"});
  REQUIRE(dec31);
  CHECK(r.cells[0][0]->amount_minor == dec31->balance_eur);

  // A range ending mid-month closes on its last day.
  q.time_range = DateRange{Date(2015, 12, 1), Date(2016, 1, 15)};
  const auto clipped = cube->query(q);
  const auto* jan15 = cube->data().facts.find(FactKey{Date(2016, 1, 15), "A1"});
  CHECK(clipped.cells[0][1]->amount_minor == jan15->balance_eur);
}

TEST_CASE("average over a period") {
  const auto cube = fixture_cube();
  auto q = make(Measure::kWorkingEur, TimeAggregator::kAverage, {Level::kAccount}, {}, Level::kDay);
  q.time_range = DateRange{Date(2016, 1, 1), Date(2016, 1, 3)};
  q.filters = {{Level::kAccount, {"A3"}}};
  const auto r = cube->query(q);
  Int128 sum = 0;
  for (int d = 1; d <= 3; ++d) sum += cube->data().facts.find(FactKey{Date(2016, 1, d), "A3"})->working_eur;
  REQUIRE(r.row_headers.size() == 1);
  CHECK(r.cells[0][0]->amount_minor == div_round_half_even(sum, 3));
}

TEST_CASE("EUR totals are additive over accounts") {
  const auto cube = fixture_cube();
  for (auto agg : {TimeAggregator::kSumClosing, TimeAggregator::kAverage}) {
    auto by_account = make(Measure::kBalanceEur, agg, {Level::kAccount}, {Level::kQuarter}, Level::kQuarter);
    auto total = make(Measure::kBalanceEur, agg, {}, {Level::kQuarter}, Level::kQuarter);
    const auto a = cube->query(by_account);
    const auto t = cube->query(total);
    REQUIRE(t.row_headers.size() == 1);
    // Averages are rounded per cell, so account-level sums may drift by up
    // to half a cent per account.
    const int64_t slack = agg == TimeAggregator::kSumClosing ? 0 : 2;
    REQUIRE(a.col_headers == t.col_headers);
    for (size_t j = 0; j < a.col_headers.size(); ++j) {
      CHECK(std::abs(a.col_totals[j]->amount_minor - t.cells[0][j]->amount_minor) <= slack);
    }
    CHECK(std::abs(a.grand_total->amount_minor - t.grand_total->amount_minor) <= slack * 2);
  }
}

TEST_CASE("empty scope gives an empty grid") {
  const auto cube = fixture_cube();
  auto q = make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {Level::kAccount}, {}, Level::kDay);
  q.filters = {{Level::kBank, {"NOPE"}}};
  const auto r = cube->query(q);
  CHECK(r.empty());
  CHECK_FALSE(r.grand_total);
  CHECK(pivot_to_csv(r) == "account\\,TOTAL\nTOTAL,\n");
}

TEST_CASE("no axes gives one cell") {
  const auto cube = fixture_cube();
  const auto r = cube->query(make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {}, {}, Level::kDay));
  REQUIRE(r.row_headers.size() == 1);
  REQUIRE(r.col_headers.size() == 1);
  CHECK(r.grand_total == r.cells[0][0]);
}

TEST_CASE("malformed queries") {
  const auto cube = fixture_cube();
  auto bad = [&](PivotQuery q) { return code_of([&] { cube->query(q); }); };
  CHECK(bad(make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {Level::kAccount}, {Level::kAccount},
                 Level::kDay)) == ErrorCode::kMalformedQuery);
  CHECK(bad(make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {Level::kWeek}, {Level::kMonth},
                 Level::kMonth)) == ErrorCode::kMalformedQuery);
  CHECK(bad(make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {Level::kYear}, {}, Level::kMonth)) ==
        ErrorCode::kMalformedQuery);
  CHECK(bad(make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {}, {}, Level::kBank)) ==
        ErrorCode::kMalformedQuery);
  auto q = make(Measure::kBalanceEur, TimeAggregator::kSumClosing, {}, {}, Level::kDay);
  q.time_range = DateRange{Date(2015, 11, 1), Date(2015, 12, 5)};
  CHECK(bad(q) == ErrorCode::kMalformedQuery);
  q.time_range = DateRange{Date(2016, 1, 5), Date(2015, 12, 5)};
  CHECK(bad(q) == ErrorCode::kMalformedQuery);
}

TEST_CASE("member keys") {
  const auto rec = time_attributes(Date(2016, 1, 2));
  CHECK(time_member_key(Level::kYear, rec) == "2016");
  CHECK(time_member_key(Level::kSemester, rec) == "2016-S1");
  CHECK(time_member_key(Level::kQuarter, rec) == "2016-Q1");
  CHECK(time_member_key(Level::kMonth, rec) == "2016-01");
  CHECK(time_member_key(Level::kDay, rec) == "2016-01-02");
  CHECK(time_member_key(Level::kIsoYear, rec) == "2015");
  CHECK(time_member_key(Level::kWeek, rec) == "2015-W53");
  CHECK_THROWS_AS(time_member_key(Level::kBank, rec), Error);

  const auto cube = fixture_cube();
  CHECK(cube->members(Level::kWeek).front() == "2015-W49");
  CHECK(cube->members(Level::kCompanyCountry) == std::vector<std::string>{"ES", "PT"});
  CHECK(cube->members(Level::kMonth) == std::vector<std::string>{"2015-12", "2016-01"});
}

TEST_CASE("hierarchy navigation") {
  CHECK(parent_level(Level::kDay, Hierarchy::kCalendar) == Level::kMonth);
  CHECK(parent_level(Level::kDay, Hierarchy::kIsoWeek) == Level::kWeek);
  CHECK(parent_level(Level::kAccount, Hierarchy::kCurrency) == Level::kCurrency);
  CHECK_FALSE(parent_level(Level::kYear, Hierarchy::kCalendar));
  CHECK_FALSE(parent_level(Level::kBank, Hierarchy::kCalendar));
  CHECK(child_level(Level::kYear) == Level::kSemester);
  CHECK(child_level(Level::kCompanyCountry) == Level::kCompany);
  CHECK_FALSE(child_level(Level::kDay));
  CHECK_FALSE(child_level(Level::kAccount));
  CHECK(hierarchies_of(Level::kAccount).size() == 3);
  for (size_t i = 0; i < kLevelCount; ++i) {
    const auto l = static_cast<Level>(i);
    CHECK(level_from_name(level_name(l)) == l);
  }
}

TEST_CASE("transforms") {
  PivotQuery base = make(Measure::kBalanceEur, TimeAggregator::kAverage, {Level::kAccount}, {Level::kYear},
                         Level::kYear);

  SUBCASE("drilldown on time moves to the next grain") {
    auto q = transform_query(base, TransformOp::drilldown(Axis::kTime));
    CHECK(q.time_grain == Level::kSemester);
    CHECK(q.col_levels == std::vector<Level>{Level::kSemester});
    q = transform_query(q, TransformOp::drilldown(Axis::kCols));
    CHECK(q.col_levels == std::vector<Level>{Level::kQuarter});
    CHECK(q.time_grain == Level::kQuarter);
  }
  SUBCASE("rollup to a level already shown removes the child") {
    auto q = base;
    q.col_levels = {Level::kYear, Level::kMonth};
    q.time_grain = Level::kMonth;
    q = transform_query(q, TransformOp::rollup(Axis::kCols));
    CHECK(q.col_levels == std::vector<Level>{Level::kYear, Level::kQuarter});
    CHECK(q.time_grain == Level::kQuarter);
    q.col_levels = {Level::kYear, Level::kSemester};
    q.time_grain = Level::kSemester;
    q = transform_query(q, TransformOp::rollup(Axis::kCols));
    CHECK(q.col_levels == std::vector<Level>{Level::kYear});
    CHECK(q.time_grain == Level::kYear);
  }
  SUBCASE("rollup of account follows the requested hierarchy") {
    CHECK(transform_query(base, TransformOp::rollup(Axis::kRows)).row_levels ==
          std::vector<Level>{Level::kCompany});
    CHECK(transform_query(base, TransformOp::rollup(Axis::kRows, Hierarchy::kBankGeo)).row_levels ==
          std::vector<Level>{Level::kBank});
    auto q = base;
    q.row_levels = {Level::kCurrency, Level::kAccount};
    CHECK(transform_query(q, TransformOp::rollup(Axis::kRows)).row_levels == std::vector<Level>{Level::kCurrency});
  }
  SUBCASE("rollup of day follows the week hierarchy when weeks are shown") {
    auto q = base;
    q.col_levels = {Level::kIsoYear, Level::kDay};
    q.time_grain = Level::kDay;
    q = transform_query(q, TransformOp::rollup(Axis::kTime));
    CHECK(q.col_levels == std::vector<Level>{Level::kIsoYear, Level::kWeek});
    CHECK(q.time_grain == Level::kWeek);
  }
  SUBCASE("inapplicable operations") {
    CHECK(code_of([&] { transform_query(base, TransformOp::rollup(Axis::kTime)); }) == ErrorCode::kInapplicableOp);
    auto leaf = base;
    leaf.col_levels = {Level::kDay};
    leaf.time_grain = Level::kDay;
    CHECK(code_of([&] { transform_query(leaf, TransformOp::drilldown(Axis::kTime)); }) ==
          ErrorCode::kInapplicableOp);
    CHECK(code_of([&] { transform_query(base, TransformOp::drilldown(Axis::kRows)); }) ==
          ErrorCode::kInapplicableOp);
    auto empty = base;
    empty.row_levels.clear();
    CHECK(code_of([&] { transform_query(empty, TransformOp::rollup(Axis::kRows)); }) ==
          ErrorCode::kInapplicableOp);
    CHECK(code_of([&] { transform_query(base, TransformOp::rollup(Axis::kRows, Hierarchy::kCalendar)); }) ==
          ErrorCode::kInapplicableOp);
  }
  SUBCASE("slice, dice and pivot") {
    auto q = transform_query(base, TransformOp::slice(Level::kYear, "2015"));
    REQUIRE(q.filters.size() == 1);
    CHECK(q.filters[0] == LevelFilter{Level::kYear, {"2015"}});
    q = transform_query(q, TransformOp::dice(Level::kBank, {"B1", "B2"}));
    CHECK(q.filters.size() == 2);
    auto swapped = transform_query(base, TransformOp::pivot_swap());
    CHECK(swapped.row_levels == base.col_levels);
    CHECK(transform_query(swapped, TransformOp::pivot_swap()) == base);
  }
}

TEST_CASE("pivot transposes the result") {
  const auto cube = fixture_cube();
  for (const auto& entry : expected()["queries"]) {
    const auto q = expected_query(entry);
    CHECK(cube->query(transform_query(q, TransformOp::pivot_swap())) == transpose(cube->query(q)));
  }
}

TEST_CASE("navigation chains stay consistent with the reference") {
  const auto cube = fixture_cube();
  PivotQuery q = make(Measure::kWorkingEur, TimeAggregator::kSumClosing, {Level::kCompanyCountry},
                      {Level::kYear}, Level::kYear);
  const TransformOp ops[] = {TransformOp::drilldown(Axis::kTime), TransformOp::drilldown(Axis::kRows),
                             TransformOp::drilldown(Axis::kCols), TransformOp::slice(Level::kBank, "B1"),
                             TransformOp::drilldown(Axis::kCols), TransformOp::pivot_swap(),
                             TransformOp::rollup(Axis::kCols),    TransformOp::rollup(Axis::kTime)};
  for (const auto& op : ops) {
    q = transform_query(q, op);
    CAPTURE(query_to_json(q).dump());
    CHECK(compare_with_reference(*cube, q) == "");
  }
}

TEST_CASE("csv and table rendering") {
  const auto cube = fixture_cube();
  const auto r = cube->query(expected_query(expected()["queries"][0]));
  const auto csv = pivot_to_csv(r);
  CHECK(csv.starts_with("account\\month,2015-12,2016-01,TOTAL\nA1,1500.57,4096.76,5597.33\n"));
  CHECK(csv.ends_with("TOTAL,982.99,7413.92,8396.91\n"));
  const auto table = pivot_to_table(r);
  CHECK(table.find("balance_eur AVERAGE") == 0);
  CHECK(table.find("4096.76") != std::string::npos);
}

TEST_CASE("cube rejects an invalid star") {
  auto data = std::make_shared<WarehouseData>(fixture_cube()->data());
  data->facts.put({Date(2015, 12, 1), "GHOST", 0, 0, 0, 0});
  CHECK(code_of([&] { build_cube(data); }) == ErrorCode::kStarInvalid);
}
