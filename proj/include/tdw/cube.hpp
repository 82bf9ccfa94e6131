#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdw/etl.hpp"
#include "tdw/money.hpp"
#include "tdw/star_schema.hpp"
#include "tdw/time_dimension.hpp"

namespace tdw {

// ---------------------------------------------------------------------------
// Schema

enum class Level {
  kYear,
  kSemester,
  kQuarter,
  kMonth,
  kDay,
  kIsoYear,
  kWeek,
  kCompanyCountry,
  kCompany,
  kBankCountry,
  kBank,
  kCurrency,
  kAccount,
};

inline constexpr size_t kLevelCount = 13;
inline constexpr size_t kTimeLevelCount = 7;

enum class Hierarchy { kCalendar, kIsoWeek, kCompanyGeo, kBankGeo, kCurrency };

std::string_view level_name(Level level);
std::optional<Level> level_from_name(std::string_view name);
std::string_view hierarchy_name(Hierarchy h);

constexpr bool is_time_level(Level level) { return static_cast<size_t>(level) < kTimeLevelCount; }

/// Levels from root to leaf.
std::span<const Level> hierarchy_levels(Hierarchy h);
/// Every hierarchy the level belongs to (day and account belong to several).
std::vector<Hierarchy> hierarchies_of(Level level);
std::optional<Level> parent_level(Level level, Hierarchy h);
/// Hierarchies are chains, so a level has at most one child.
std::optional<Level> child_level(Level level);

enum class Measure { kBalanceEur, kBalanceOrig, kWorkingEur, kWorkingOrig };
enum class TimeAggregator { kSumClosing, kAverage };

std::string_view measure_name(Measure m);
std::optional<Measure> measure_from_name(std::string_view name);
std::string_view aggregator_name(TimeAggregator a);
std::optional<TimeAggregator> aggregator_from_name(std::string_view name);
constexpr bool is_eur_measure(Measure m) {
  return m == Measure::kBalanceEur || m == Measure::kWorkingEur;
}

/// Name of the derived time-average measure over balance_eur.
inline constexpr std::string_view kAverageBalanceEur = "average_balance_eur";

struct CubeDimension {
  std::string name;
  std::vector<Hierarchy> hierarchies;
};

/// Dimensions with their hierarchies, as served to clients.
std::span<const CubeDimension> cube_dimensions();

/// Member key of a time level for one day: "2015", "2015-S2", "2015-Q4",
/// "2015-12", "2015-12-31", ISO "2015" and "2015-W53".
std::string time_member_key(Level level, const TimeRecord& day);

// ---------------------------------------------------------------------------
// Queries and results

struct LevelFilter {
  Level level;
  std::vector<std::string> members;

  bool operator==(const LevelFilter&) const = default;
};

struct DateRange {
  Date first;
  Date last;

  bool operator==(const DateRange&) const = default;
};

struct PivotQuery {
  Measure measure = Measure::kBalanceEur;
  TimeAggregator aggregator = TimeAggregator::kSumClosing;
  std::vector<Level> row_levels;
  std::vector<Level> col_levels;
  /// Conjunctive; each filter keeps facts whose member at `level` is listed.
  std::vector<LevelFilter> filters;
  /// Inclusive; the whole time table when absent.
  std::optional<DateRange> time_range;
  /// Finest time level of the query. Time levels on the axes must lie on one
  /// time hierarchy and the finest of them must equal the grain.
  Level time_grain = Level::kDay;

  bool operator==(const PivotQuery&) const = default;
};

/// Throws Error(kMalformedQuery) describing the first problem found.
void validate_query(const PivotQuery& query, const TimeTable& time);

using Cell = std::optional<MoneyMinor>;

struct PivotResult {
  Measure measure = Measure::kBalanceEur;
  TimeAggregator aggregator = TimeAggregator::kSumClosing;
  std::vector<Level> row_levels;
  std::vector<Level> col_levels;
  std::vector<std::vector<std::string>> row_headers;
  std::vector<std::vector<std::string>> col_headers;
  std::vector<std::vector<Cell>> cells;  // [row][col]
  /// Sums of the non-empty cells of each row/column; empty when there are
  /// none or when they are in different currencies.
  std::vector<Cell> row_totals;
  std::vector<Cell> col_totals;
  Cell grand_total;

  bool empty() const { return row_headers.empty() || col_headers.empty(); }
  bool operator==(const PivotResult&) const = default;
};

/// Recomputes the three total fields from `cells`.
void fill_totals(PivotResult& result);
PivotResult transpose(const PivotResult& result);

/// CSV grid: header row of column tuples, one line per row tuple, TOTAL
/// row/column; tuples joined with '|', amounts in dot-decimal.
std::string pivot_to_csv(const PivotResult& result);
/// Aligned plain-text grid for terminals.
std::string pivot_to_table(const PivotResult& result);

// ---------------------------------------------------------------------------
// Cube

/// Immutable, indexed view of one committed warehouse state: per-level
/// member indexes plus dense measure columns with prefix sums over days.
class CubeSnapshot {
 public:
  /// Validates the star first (Error(kStarInvalid)).
  static std::shared_ptr<const CubeSnapshot> build(std::shared_ptr<const WarehouseData> data);

  PivotResult query(const PivotQuery& query) const;

  const WarehouseData& data() const { return *data_; }
  std::shared_ptr<const WarehouseData> shared_data() const { return data_; }

  /// Member keys of a level in display order.
  std::vector<std::string> members(Level level) const;

 private:
  struct TimeMembers {
    std::vector<std::string> keys;
    std::vector<int32_t> first;  // day index span [first, last]
    std::vector<int32_t> last;
    std::vector<int32_t> flagged_last;  // day index carrying the period-end flag, or -1
    std::vector<int32_t> of_day;        // day index -> member
  };
  struct AccountInfo {
    std::string id;
    CurrencyCode currency;
    std::array<int32_t, kLevelCount - kTimeLevelCount> member{};
  };

  CubeSnapshot() = default;

  const TimeMembers& time_members(Level l) const { return time_[static_cast<size_t>(l)]; }
  const std::vector<std::string>& attribute_keys(Level l) const {
    return attribute_keys_[static_cast<size_t>(l) - kTimeLevelCount];
  }
  int32_t account_member(size_t account, Level l) const {
    return accounts_[account].member[static_cast<size_t>(l) - kTimeLevelCount];
  }
  size_t at(size_t account, size_t day) const { return account * n_days_ + day; }
  size_t prefix_at(size_t account, size_t day) const { return account * (n_days_ + 1) + day; }

  std::shared_ptr<const WarehouseData> data_;
  size_t n_days_ = 0;
  std::array<TimeMembers, kTimeLevelCount> time_;
  std::vector<AccountInfo> accounts_;
  std::array<std::vector<std::string>, kLevelCount - kTimeLevelCount> attribute_keys_;
  std::array<std::vector<int64_t>, 4> values_;   // [measure][account * n_days + day]
  std::array<std::vector<int64_t>, 4> prefix_;   // [measure][account * (n_days + 1) + day]
  std::vector<int32_t> present_prefix_;          // fact counts, same layout as prefix_
};

std::shared_ptr<const CubeSnapshot> build_cube(std::shared_ptr<const WarehouseData> data);

inline PivotResult query_pivot(const CubeSnapshot& cube, const PivotQuery& query) {
  return cube.query(query);
}

/// Same contract as query_pivot, computed by direct scans over the fact rows
/// with no precomputed indexes. Intended for small instances and as an oracle.
PivotResult reference_evaluator(std::span<const FactAccountBalance> facts, const Dimensions& dims,
                                const TimeTable& time, const PivotQuery& query);

// ---------------------------------------------------------------------------
// OLAP navigation

enum class Axis { kRows, kCols, kTime };

struct TransformOp {
  enum class Kind { kRollup, kDrilldown, kSlice, kDice, kPivotSwap };

  Kind kind = Kind::kPivotSwap;
  Axis axis = Axis::kRows;
  /// Disambiguates the parent of day/account on rollup.
  std::optional<Hierarchy> hierarchy;
  Level level = Level::kYear;
  std::vector<std::string> members;

  static TransformOp rollup(Axis axis, std::optional<Hierarchy> via = std::nullopt);
  static TransformOp drilldown(Axis axis);
  static TransformOp slice(Level level, std::string member);
  static TransformOp dice(Level level, std::vector<std::string> members);
  static TransformOp pivot_swap();
};

/// Throws Error(kInapplicableOp) when the op has nothing to act on (empty
/// axis, root on rollup, leaf on drilldown) or would produce an invalid query.
PivotQuery transform_query(const PivotQuery& query, const TransformOp& op);

}  // namespace tdw
