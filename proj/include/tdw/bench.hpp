#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdw/cube.hpp"
#include "tdw/etl.hpp"
#include "tdw/kv_config.hpp"

namespace tdw {

// ---------------------------------------------------------------------------
// Synthetic data

struct CurrencyWeight {
  CurrencyCode currency;
  double weight = 1.0;
};

struct GeneratorParams {
  uint64_t seed = 20151231;
  int n_companies = 5;
  int n_banks = 6;
  int n_accounts = 50;
  int first_year = 2013;
  int last_year = 2015;
  /// Mean of the Poisson draw of movements per account and day.
  double movements_per_account_day = 20.0;
  double forecast_fraction = 0.2;
  std::vector<CurrencyWeight> currency_mix = {{kEur, 0.7}, {CurrencyCode("USD"), 0.2},
                                              {CurrencyCode("GBP"), 0.1}};

  /// Throws kInvalidArgument.
  void validate() const;

  /// Keys: seed, n_companies, n_banks, n_accounts, first_year, last_year,
  /// movements_per_account_day, forecast_fraction, currency_mix
  /// ("EUR:0.7,USD:0.3"). Missing keys keep the performance defaults.
  static GeneratorParams from_kv(const KvConfig& kv);
  static GeneratorParams load(const std::filesystem::path& path);

  /// 50 accounts x 3 years x 20 movements per account and day.
  static GeneratorParams performance();
  /// One year sized to yield about 2553 forecast movements.
  static GeneratorParams forecast_volume();
};

struct GeneratedDataset {
  std::filesystem::path dir;
  size_t movement_count = 0;
  size_t forecast_count = 0;
};

/// Writes every input of the pipeline (dimension, movement, opening and rate
/// CSVs, time_table.csv and etl.conf) into `dir`. Byte-identical per seed.
GeneratedDataset generate_dataset(const GeneratorParams& params, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Timing

/// Three wall-clock durations in milliseconds.
struct TimingSample {
  std::array<double, 3> ms{};

  double total_ms() const { return ms[0] + ms[1] + ms[2]; }
};

/// One untimed warm-up, then three timed query_pivot calls.
TimingSample time_modality_cube(const CubeSnapshot& cube, const PivotQuery& query);

/// Operational inputs as the legacy modality sees them: cleaned movements,
/// openings and rates, with no derived balances.
struct RawDataset {
  Dimensions dimensions;
  TimeTable time;
  std::vector<Movement> movements;
  std::vector<OpeningBalance> openings;
  std::vector<ExchangeRate> rates;

  static RawDataset load(const EtlConfig& config);
};

struct NaiveTiming {
  TimingSample phase1;  // daily balances recomputed from movements
  TimingSample phase2;  // CSV export, re-ingest and aggregation
  TimingSample total;
  PivotResult result;
};

/// Phase 1 recomputes every in-scope daily balance by scanning all
/// movements; phase 2 writes those balances to CSV, parses them back and
/// aggregates with the row-scanning reference evaluator.
NaiveTiming time_modality_naive(const RawDataset& raw, const PivotQuery& query);

// ---------------------------------------------------------------------------
// Statistics

/// Mean and sample standard deviation in seconds.
struct BenchRow {
  std::string label;
  double mean = 0;
  double std = 0;
};

/// Exactly three values in seconds, else Error(kWrongSampleSize).
BenchRow summarize(std::string label, std::span<const double> seconds);
BenchRow summarize(std::string label, const TimingSample& sample);

inline constexpr double kCrit95Df4 = 2.776;
inline constexpr double kCrit99Df4 = 4.604;

struct TTestResult {
  double t = 0;
  int df = 0;
  double crit95 = kCrit95Df4;
  double crit99 = kCrit99Df4;
  bool significant95 = false;
  bool significant99 = false;
};

/// Pooled-variance two-sample t statistic of mean2 - mean1. Only df = 4 has
/// critical values (Error(kUnsupportedDf) otherwise); n < 2 is
/// Error(kWrongSampleSize).
TTestResult pooled_t(double mean1, double std1, int n1, double mean2, double std2, int n2);

/// Time saved by the cube; per_day and per_month in minutes, per_year in
/// hours, over 22 working days a month.
struct TimeBenefit {
  double per_day = 0;
  double per_month = 0;
  double per_year = 0;
};

TimeBenefit time_benefit(double mean_cube_s, double mean_naive_s);

// ---------------------------------------------------------------------------
// Report

enum class DecimalLocale { kComma, kDot };

struct ScenarioReport {
  std::string label;
  BenchRow cube;
  BenchRow naive_phase1;
  BenchRow naive_phase2;
  BenchRow naive_total;
  TTestResult test;
  TimeBenefit benefit;
  size_t forecast_count = 0;
};

struct RenderedReport {
  std::string text;
  std::string csv;
};

/// Text follows `locale`; the CSV is always dot-decimal. Values are rounded
/// to three decimals. No scenarios gives the header alone.
RenderedReport render_report(std::span<const ScenarioReport> scenarios, DecimalLocale locale,
                             std::optional<uint64_t> seed = std::nullopt);

// ---------------------------------------------------------------------------
// Full run

struct BenchScenario {
  std::string label;
  PivotQuery query;
};

/// Estimated working balances for the next month and year, and average
/// balances by month over the last year and last three years.
std::vector<BenchScenario> bench_scenarios(const GeneratorParams& params);

struct BenchOutcome {
  GeneratedDataset dataset;
  std::vector<ScenarioReport> scenarios;
};

/// Generates the dataset under out_dir/data, loads it, times every scenario
/// (checking that both modalities agree) and writes bench_report.txt and
/// bench_report.csv into out_dir.
BenchOutcome run_bench(const GeneratorParams& params, const std::filesystem::path& out_dir,
                       DecimalLocale locale = DecimalLocale::kComma);

}  // namespace tdw
