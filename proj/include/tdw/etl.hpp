#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdw/csv.hpp"
#include "tdw/date.hpp"
#include "tdw/kv_config.hpp"
#include "tdw/money.hpp"
#include "tdw/star_schema.hpp"
#include "tdw/time_dimension.hpp"

namespace tdw {

enum class MovementKind { kActual, kForecast };

std::string_view movement_kind_name(MovementKind kind);

struct Movement {
  std::string account_id;
  Date value_date;
  MoneyMinor amount;  // signed, in the account currency
  MovementKind kind = MovementKind::kActual;
  std::string description;
};

struct OpeningBalance {
  std::string account_id;
  Date as_of_date;
  MoneyMinor amount;
};

struct ExchangeRate {
  CurrencyCode currency;
  Date rate_date;
  RateMicro rate_to_eur;
};

/// Real and working balance of one account at the end of one day, in the
/// account currency. working - real is the cumulative forecast amount.
struct DailyBalance {
  std::string account_id;
  Date date;
  CurrencyCode currency;
  int64_t real_minor = 0;
  int64_t working_minor = 0;

  bool operator==(const DailyBalance&) const = default;
};

enum class RejectReason {
  kDuplicate,
  kMissingField,
  kBadDate,
  kBadAmount,
  kBadKind,
  kUnknownAccount,
  kCurrencyMismatch,
  kDateOutOfRange,
  kZeroAmount,
  kStaleForecast,
};

std::string_view reject_reason_name(RejectReason reason);

struct RejectedRow {
  size_t line = 0;
  RejectReason reason = RejectReason::kDuplicate;
};

struct CleanOptions {
  bool reject_zero_amount = false;
  /// When false, FORECAST rows dated on or before `as_of` are dropped.
  bool include_stale_forecasts = true;
  std::optional<Date> as_of;
};

struct CleanResult {
  std::vector<Movement> movements;
  std::vector<RejectedRow> rejected;
};

/// Row-level cleaning of movements.csv content. Exact duplicate rows keep
/// their first occurrence; every input row ends up either accepted or
/// rejected with exactly one reason.
CleanResult clean_movements(const CsvTable& raw, const Dimensions& dims, const TimeTable& time,
                            const CleanOptions& options = {});

/// One balance per (account, day with >= 1 movement):
///   real(d)    = opening + sum of ACTUAL amounts dated <= d
///   working(d) = real(d) + sum of FORECAST amounts dated <= d
/// Output is ordered by (account_id, date). Throws kDuplicateOpening or
/// kOpeningAfterMovement when the opening balances break their contract.
std::vector<DailyBalance> compute_daily_balances(std::span<const Movement> movements,
                                                 std::span<const OpeningBalance> openings);

/// Expands sparse balances to every (account, table day), carrying the last
/// known values forward. Before an account's first movement the balance is
/// its opening amount once the opening is in effect, else zero.
std::vector<DailyBalance> densify_balances(std::span<const DailyBalance> sparse,
                                           const TimeTable& time,
                                           std::span<const AccountRecord> accounts,
                                           std::span<const OpeningBalance> openings);

/// Latest-on-or-before exchange rate lookup. EUR always converts at 1.
class RateBook {
 public:
  /// Throws kDuplicateKey on a repeated (currency, rate_date).
  explicit RateBook(std::span<const ExchangeRate> rates);

  std::optional<RateMicro> lookup(CurrencyCode currency, Date date) const;

 private:
  std::map<CurrencyCode, std::vector<std::pair<Date, RateMicro>>> by_currency_;
};

/// Converts dense balances to fact rows, rounding half-even at minor-unit
/// scale. Throws kNoRate naming the currency and date when no rate applies.
std::vector<FactAccountBalance> convert_to_eur(std::span<const DailyBalance> dense,
                                               const RateBook& rates);

struct UpsertStats {
  size_t inserted = 0;
  size_t updated = 0;
  size_t unchanged = 0;
};

/// Inserts new keys; overwrites an existing fact only when its balance_eur or
/// working_eur differs from the incoming one. Incoming keys must be unique.
UpsertStats upsert_facts(FactStore& store, std::span<const FactAccountBalance> incoming);

std::vector<OpeningBalance> load_opening_balances(const std::filesystem::path& path);
std::vector<ExchangeRate> load_exchange_rates(const std::filesystem::path& path);

struct EtlConfig {
  DimensionPaths dimensions;
  std::filesystem::path movements;
  std::filesystem::path opening_balances;
  std::filesystem::path exchange_rates;
  std::filesystem::path time_table;
  std::filesystem::path store;

  int revaluation_window_days = 5;
  bool reject_zero_amount = false;
  bool include_stale_forecasts = true;
  /// Incremental runs present only new keys and facts dated within
  /// revaluation_window_days before as_of (or later) to the upsert.
  bool incremental = false;
  std::optional<Date> as_of;

  /// Keys: data_dir, companies, banks, accounts, currencies, countries,
  /// movements, opening_balances, exchange_rates, time_table, store,
  /// revaluation_window_days, reject_zero_amount, include_stale_forecasts,
  /// mode (full|incremental), as_of_date.
  static EtlConfig from_kv(const KvConfig& kv);
  static EtlConfig load(const std::filesystem::path& path);
  /// Standard file names in `dir`.
  static EtlConfig in_directory(const std::filesystem::path& dir);
};

struct EtlReport {
  size_t rows_read = 0;
  size_t rows_rejected = 0;
  std::vector<RejectedRow> rejects;
  std::map<RejectReason, size_t> rejects_by_reason;
  size_t balances_computed = 0;
  size_t facts_presented = 0;
  size_t facts_inserted = 0;
  size_t facts_updated = 0;
  size_t facts_unchanged = 0;
  std::string store_digest;
};

/// Dimensions, calendar and fact store of one committed warehouse state.
struct WarehouseData {
  Dimensions dimensions;
  TimeTable time;
  FactStore facts;
};

struct EtlOutcome {
  EtlReport report;
  std::shared_ptr<const WarehouseData> data;
};

/// Full pipeline: load and validate dimensions, clean movements, compute,
/// densify and convert balances, upsert into the persisted store and commit
/// it atomically. Nothing is written if any step fails.
EtlOutcome run_etl(const EtlConfig& config);

/// Loads the committed state named by `config` and validates the star.
std::shared_ptr<const WarehouseData> load_warehouse(const EtlConfig& config);

}  // namespace tdw
