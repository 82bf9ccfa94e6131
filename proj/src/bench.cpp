#include "tdw/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <unordered_map>

#include "tdw/csv.hpp"
#include "tdw/error.hpp"

namespace tdw {

// ---------------------------------------------------------------------------
// Parameters

void GeneratorParams::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (n_companies < 0 || n_banks < 0 || n_accounts < 0) fail("generator counts must be >= 0");
  if (n_accounts > 0 && (n_companies == 0 || n_banks == 0)) {
    fail("accounts need at least one company and one bank");
  }
  if (first_year > last_year) fail("first_year must not exceed last_year");
  if (first_year < kMinSupportedYear || last_year > kMaxSupportedYear) fail("years out of range");
  if (!(movements_per_account_day >= 0)) fail("movements_per_account_day must be >= 0");
  if (!(forecast_fraction >= 0 && forecast_fraction <= 1)) fail("forecast_fraction must be in [0,1]");
  if (n_accounts > 0) {
    double total = 0;
    for (const auto& w : currency_mix) {
      if (!(w.weight >= 0)) fail("currency weights must be >= 0");
      total += w.weight;
    }
    if (!(total > 0)) fail("currency_mix needs a positive weight");
  }
}

GeneratorParams GeneratorParams::from_kv(const KvConfig& kv) {
  GeneratorParams p;
  p.seed = static_cast<uint64_t>(kv.get_int("seed", static_cast<long long>(p.seed)));
  p.n_companies = static_cast<int>(kv.get_int("n_companies", p.n_companies));
  p.n_banks = static_cast<int>(kv.get_int("n_banks", p.n_banks));
  p.n_accounts = static_cast<int>(kv.get_int("n_accounts", p.n_accounts));
  p.first_year = static_cast<int>(kv.get_int("first_year", p.first_year));
  p.last_year = static_cast<int>(kv.get_int("last_year", p.last_year));
  p.movements_per_account_day = kv.get_double("movements_per_account_day", p.movements_per_account_day);
  p.forecast_fraction = kv.get_double("forecast_fraction", p.forecast_fraction);
  if (auto mix = kv.get("currency_mix")) {
    p.currency_mix.clear();
    for (const auto& item : parse_csv(*mix + "\n").header) {
      auto colon = item.find(':');
      std::string code = item.substr(0, colon);
      code.erase(std::remove(code.begin(), code.end(), ' '), code.end());
      if (!CurrencyCode::valid(code)) {
        throw Error(ErrorCode::kInvalidArgument, fmt::format("currency_mix: bad currency '{}'", code));
      }
      double weight = 1.0;
      if (colon != std::string::npos) {
        try {
          weight = std::stod(item.substr(colon + 1));
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, fmt::format("currency_mix: bad weight in '{}'", item));
        }
      }
      p.currency_mix.push_back({CurrencyCode(code), weight});
    }
  }
  p.validate();
  return p;
}

GeneratorParams GeneratorParams::load(const std::filesystem::path& path) {
  return from_kv(KvConfig::load(path));
}

GeneratorParams GeneratorParams::performance() { return GeneratorParams{}; }

GeneratorParams GeneratorParams::forecast_volume() {
  GeneratorParams p;
  p.n_accounts = 35;
  p.first_year = 2015;
  p.last_year = 2015;
  p.movements_per_account_day = 1.0;
  p.forecast_fraction = 0.2;
  return p;
}

// ---------------------------------------------------------------------------
// Generator

namespace {

constexpr const char* kCountries[][2] = {{"PT", "Portugal"}, {"ES", "Spain"},   {"FR", "France"},
                                         {"DE", "Germany"},  {"GB", "United Kingdom"}};

double base_rate(CurrencyCode c) {
  const std::string s = c.str();
  if (s == "USD") return 0.90;
  if (s == "GBP") return 1.15;
  if (s == "CHF") return 0.92;
  if (s == "JPY") return 0.0075;
  return 0.5;
}

}  // namespace

GeneratedDataset generate_dataset(const GeneratorParams& params, const std::filesystem::path& dir) {
  params.validate();
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(params.seed);

  Dimensions dims;
  for (const auto& c : kCountries) dims.countries.push_back({c[0], c[1]});
  std::vector<CurrencyCode> currencies{kEur};
  for (const auto& w : params.currency_mix) {
    if (std::find(currencies.begin(), currencies.end(), w.currency) == currencies.end()) {
      currencies.push_back(w.currency);
    }
  }
  for (auto c : currencies) dims.currencies.push_back({c, c.str(), kMinorUnitScale});
  const int n_countries = static_cast<int>(std::size(kCountries));
  for (int i = 0; i < params.n_companies; ++i) {
    dims.companies.push_back({fmt::format("C{:02d}", i + 1), fmt::format("Company {}", i + 1),
                              kCountries[i % n_countries][0]});
  }
  for (int i = 0; i < params.n_banks; ++i) {
    dims.banks.push_back({fmt::format("B{:02d}", i + 1), fmt::format("Bank {}", i + 1),
                          kCountries[(i + 1) % n_countries][0]});
  }
  std::vector<double> weights;
  for (const auto& w : params.currency_mix) weights.push_back(w.weight);
  std::discrete_distribution<size_t> pick_currency(weights.begin(), weights.end());
  for (int i = 0; i < params.n_accounts; ++i) {
    const CurrencyCode cur = params.currency_mix[pick_currency(rng)].currency;
    dims.accounts.push_back({fmt::format("A{:03d}", i + 1), dims.companies[static_cast<size_t>(i % params.n_companies)].company_id,
                             dims.banks[static_cast<size_t>((i * 7) % params.n_banks)].bank_id, cur,
                             fmt::format("Account {}", i + 1)});
  }
  save_dimensions(DimensionPaths::in_directory(dir), dims);

  const TimeTable time = build_time_table(params.first_year, params.last_year);
  write_file_atomic(dir / "time_table.csv", time_table_to_csv(time));
  const Date first = time.first_date();

  std::string openings = "account_id,as_of_date,amount,currency_code\n";
  std::uniform_int_distribution<int64_t> opening_amount(10'000'000, 100'000'000);
  for (const auto& a : dims.accounts) {
    append_csv_line(openings, a.account_id, first.iso(), format_amount_minor(opening_amount(rng)),
                    a.currency_code.str());
  }
  write_file_atomic(dir / "opening_balances.csv", openings);

  std::string rates = "currency_code,rate_date,rate_to_eur\n";
  std::normal_distribution<double> drift(0.0, 0.004);
  for (auto c : currencies) {
    if (c == kEur) continue;
    double rate = base_rate(c);
    for (size_t d = 0; d < time.size(); d += 7) {
      rate = std::max(rate * (1.0 + drift(rng)), 1e-6);
      const auto micro = std::max<int64_t>(1, std::llround(rate * RateMicro::kOne));
      append_csv_line(rates, c.str(), time[d].date.iso(), format_rate(RateMicro{micro}));
    }
  }
  write_file_atomic(dir / "exchange_rates.csv", rates);

  GeneratedDataset out{dir, 0, 0};
  std::string movements = "account_id,value_date,amount,currency_code,kind,description\n";
  std::poisson_distribution<int> per_day(params.movements_per_account_day);
  std::bernoulli_distribution is_forecast(params.forecast_fraction);
  std::uniform_int_distribution<int64_t> amount(-500'000, 500'000);
  for (const auto& rec : time.records()) {
    const std::string date = rec.date.iso();
    for (const auto& a : dims.accounts) {
      const int n = params.movements_per_account_day > 0 ? per_day(rng) : 0;
      for (int k = 0; k < n; ++k) {
        int64_t minor = amount(rng);
        if (minor == 0) minor = 1;
        const bool forecast = is_forecast(rng);
        ++out.movement_count;
        if (forecast) ++out.forecast_count;
        append_csv_line(movements, a.account_id, date, format_amount_minor(minor), a.currency_code.str(),
                        forecast ? "FORECAST" : "ACTUAL", fmt::format("m{}", out.movement_count));
      }
    }
  }
  write_file_atomic(dir / "movements.csv", movements);
  write_file_atomic(dir / "etl.conf",
                    fmt::format("# generated, seed {}\ndata_dir = .\nstore = facts.csv\n", params.seed));
  return out;
}

// ---------------------------------------------------------------------------
// Timing

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

TimingSample time_modality_cube(const CubeSnapshot& cube, const PivotQuery& query) {
  (void)query_pivot(cube, query);
  TimingSample s;
  for (auto& ms : s.ms) {
    const auto start = Clock::now();
    auto result = query_pivot(cube, query);
    ms = elapsed_ms(start);
    (void)result;
  }
  return s;
}

RawDataset RawDataset::load(const EtlConfig& config) {
  RawDataset raw;
  raw.dimensions = load_dimensions(config.dimensions);
  raw.time = load_time_table(config.time_table);
  CleanOptions options;
  options.reject_zero_amount = config.reject_zero_amount;
  options.include_stale_forecasts = config.include_stale_forecasts;
  options.as_of = config.as_of;
  raw.movements = clean_movements(read_csv_file(config.movements), raw.dimensions, raw.time, options).movements;
  raw.openings = load_opening_balances(config.opening_balances);
  raw.rates = load_exchange_rates(config.exchange_rates);
  return raw;
}

namespace {

struct CompactMovement {
  int32_t account;
  int32_t day;  // Date serial
  int64_t amount;
  bool forecast;
};

struct NaiveInputs {
  std::vector<const AccountRecord*> accounts;
  std::vector<CompactMovement> movements;
  std::vector<std::pair<int32_t, int64_t>> openings;  // per account: (serial, amount), serial max if none
  std::vector<Date> days;
};

NaiveInputs prepare_naive(const RawDataset& raw, const PivotQuery& query) {
  NaiveInputs in;
  std::unordered_map<std::string_view, int32_t> index;
  for (const auto& a : raw.dimensions.accounts) {
    index.emplace(a.account_id, static_cast<int32_t>(in.accounts.size()));
    in.accounts.push_back(&a);
  }
  for (const auto& m : raw.movements) {
    auto it = index.find(m.account_id);
    if (it == index.end()) throw Error(ErrorCode::kUnknownAccount, m.account_id);
    in.movements.push_back({it->second, m.value_date.serial(), m.amount.amount_minor,
                            m.kind == MovementKind::kForecast});
  }
  in.openings.assign(in.accounts.size(), {std::numeric_limits<int32_t>::max(), 0});
  for (const auto& o : raw.openings) {
    auto it = index.find(o.account_id);
    if (it == index.end()) throw Error(ErrorCode::kUnknownAccount, o.account_id);
    in.openings[static_cast<size_t>(it->second)] = {o.as_of_date.serial(), o.amount.amount_minor};
  }
  if (!raw.time.empty()) {
    const Date lo = query.time_range ? query.time_range->first : raw.time.first_date();
    const Date hi = query.time_range ? query.time_range->last : raw.time.last_date();
    for (Date d = lo; d <= hi; ++d) in.days.push_back(d);
  }
  return in;
}

RateMicro scan_rate(const std::vector<ExchangeRate>& rates, CurrencyCode currency, Date date) {
  if (currency == kEur) return RateMicro{RateMicro::kOne};
  const ExchangeRate* best = nullptr;
  for (const auto& r : rates) {
    if (r.currency == currency && r.rate_date <= date && (!best || r.rate_date > best->rate_date)) best = &r;
  }
  if (!best) {
    throw Error(ErrorCode::kNoRate, fmt::format("no {} rate on or before {}", currency.str(), date.iso()));
  }
  return best->rate_to_eur;
}

std::vector<FactAccountBalance> naive_balances(const RawDataset& raw, const NaiveInputs& in) {
  std::vector<FactAccountBalance> out;
  out.reserve(in.days.size() * in.accounts.size());
  std::vector<int64_t> real(in.accounts.size()), working(in.accounts.size());
  for (Date day : in.days) {
    const int32_t d = day.serial();
    for (size_t a = 0; a < in.accounts.size(); ++a) {
      real[a] = in.openings[a].first <= d ? in.openings[a].second : 0;
      working[a] = real[a];
    }
    // Every movement is read and evaluated for every day, as an unindexed
    // scan would.
    for (const auto& m : in.movements) {
      const int64_t in_scope = m.day <= d;
      working[static_cast<size_t>(m.account)] += in_scope * m.amount;
      real[static_cast<size_t>(m.account)] += in_scope * !m.forecast * m.amount;
    }
    for (size_t a = 0; a < in.accounts.size(); ++a) {
      const RateMicro rate = scan_rate(raw.rates, in.accounts[a]->currency_code, day);
      out.push_back({day, in.accounts[a]->account_id, real[a], convert_minor(real[a], rate), working[a],
                     convert_minor(working[a], rate)});
    }
  }
  return out;
}

PivotResult naive_export_and_aggregate(const RawDataset& raw, const std::vector<FactAccountBalance>& rows,
                                       const PivotQuery& query) {
  std::string csv = "value_date,account_id,balance_orig,balance_eur,working_orig,working_eur\n";
  csv.reserve(csv.size() + rows.size() * 64);
  for (const auto& f : rows) {
    csv += f.value_date.iso();
    csv += ',';
    append_csv_field(csv, f.account_id);
    fmt::format_to(std::back_inserter(csv), ",{},{},{},{}\n", f.balance_orig, f.balance_eur,
                   f.working_orig, f.working_eur);
  }
  const auto parsed = facts_from_csv(csv, "export.csv");
  return reference_evaluator(parsed, raw.dimensions, raw.time, query);
}

}  // namespace

NaiveTiming time_modality_naive(const RawDataset& raw, const PivotQuery& query) {
  validate_query(query, raw.time);
  const NaiveInputs in = prepare_naive(raw, query);
  NaiveTiming t;
  // Warm-up, untimed.
  t.result = naive_export_and_aggregate(raw, naive_balances(raw, in), query);
  for (size_t i = 0; i < 3; ++i) {
    auto start = Clock::now();
    const auto balances = naive_balances(raw, in);
    t.phase1.ms[i] = elapsed_ms(start);
    start = Clock::now();
    auto result = naive_export_and_aggregate(raw, balances, query);
    t.phase2.ms[i] = elapsed_ms(start);
    t.total.ms[i] = t.phase1.ms[i] + t.phase2.ms[i];
    if (!(result == t.result)) throw Error(ErrorCode::kInvalidArgument, "naive modality is not deterministic");
  }
  return t;
}

// ---------------------------------------------------------------------------
// Statistics

BenchRow summarize(std::string label, std::span<const double> seconds) {
  if (seconds.size() != 3) {
    throw Error(ErrorCode::kWrongSampleSize, fmt::format("expected 3 values, got {}", seconds.size()));
  }
  std::array<double, 3> v{seconds[0], seconds[1], seconds[2]};
  std::sort(v.begin(), v.end());  // order-independent rounding
  const double mean = (v[0] + v[1] + v[2]) / 3.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return BenchRow{std::move(label), mean, std::sqrt(ss / 2.0)};
}

BenchRow summarize(std::string label, const TimingSample& sample) {
  std::array<double, 3> s{sample.ms[0] / 1000.0, sample.ms[1] / 1000.0, sample.ms[2] / 1000.0};
  return summarize(std::move(label), s);
}

TTestResult pooled_t(double mean1, double std1, int n1, double mean2, double std2, int n2) {
  if (n1 < 2 || n2 < 2) {
    throw Error(ErrorCode::kWrongSampleSize, fmt::format("samples of {} and {} values", n1, n2));
  }
  if (std1 < 0 || std2 < 0) throw Error(ErrorCode::kInvalidArgument, "negative standard deviation");
  TTestResult r;
  r.df = n1 + n2 - 2;
  if (r.df != 4) {
    throw Error(ErrorCode::kUnsupportedDf, fmt::format("critical values are tabulated for df=4 only, got {}", r.df));
  }
  const double sp2 = ((n1 - 1) * std1 * std1 + (n2 - 1) * std2 * std2) / r.df;
  const double diff = mean2 - mean1;
  if (sp2 == 0) {
    r.t = diff == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  } else {
    r.t = diff / (std::sqrt(sp2) * std::sqrt(1.0 / n1 + 1.0 / n2));
  }
  r.significant95 = std::abs(r.t) > r.crit95;
  r.significant99 = std::abs(r.t) > r.crit99;
  return r;
}

TimeBenefit time_benefit(double mean_cube_s, double mean_naive_s) {
  if (mean_cube_s < 0 || mean_naive_s < 0) throw Error(ErrorCode::kInvalidArgument, "negative mean time");
  TimeBenefit b;
  b.per_day = (mean_naive_s - mean_cube_s) / 60.0;
  b.per_month = b.per_day * 22.0;
  b.per_year = b.per_day * 264.0 / 60.0;
  return b;
}

// ---------------------------------------------------------------------------
// Report

namespace {

std::string num(double v, DecimalLocale locale) {
  std::string s = std::isinf(v) ? (v > 0 ? "inf" : "-inf") : fmt::format("{:.3f}", v);
  if (s == "-0.000") s = "0.000";
  if (locale == DecimalLocale::kComma) std::replace(s.begin(), s.end(), '.', ',');
  return s;
}

}  // namespace

RenderedReport render_report(std::span<const ScenarioReport> scenarios, DecimalLocale locale,
                             std::optional<uint64_t> seed) {
  RenderedReport r;
  r.text = "Time benefit report: OLAP cube (modality I) vs operational extraction and export (modality II)\n";
  r.text += seed ? fmt::format("seed: {}\n", *seed) : std::string("seed: -\n");
  r.csv = "scenario,section,metric,value\n";
  if (scenarios.empty()) return r;

  auto row = [&](const BenchRow& b) {
    return fmt::format("  {:<48} {:>12} {:>12}\n", b.label, num(b.mean, locale), num(b.std, locale));
  };
  auto line = [&](std::string_view label, const std::string& value) {
    return fmt::format("  {:<48} {:>12}\n", label, value);
  };
  auto csv = [&](const std::string& scenario, std::string_view section, std::string_view metric, double v) {
    append_csv_line(r.csv, scenario, section, metric, num(v, DecimalLocale::kDot));
  };

  for (const auto& s : scenarios) {
    r.text += fmt::format("\n[{}]\n", s.label);
    r.text += fmt::format("  forecasts considered: {}\n", s.forecast_count);
    r.text += fmt::format("  {:<48} {:>12} {:>12}\n", "", "avg (s)", "std (s)");
    r.text += "Modality I\n" + row(s.cube);
    r.text += "Modality II\n" + row(s.naive_phase1) + row(s.naive_phase2) + row(s.naive_total);
    r.text += "Time benefits\n";
    r.text += line("change per day (minutes)", num(-s.benefit.per_day, locale));
    r.text += line("change per month, 22 days (minutes)", num(-s.benefit.per_month, locale));
    r.text += line("change per year, 264 days (hours)", num(-s.benefit.per_year, locale));
    r.text += "Hypothesis testing\n";
    r.text += line("difference in means (t student)", num(s.test.t, locale));
    r.text += line("degrees of freedom", std::to_string(s.test.df));
    r.text += line("t-value (2-tailed 95%)", num(s.test.crit95, locale));
    r.text += line("t-value (2-tailed 99%)", num(s.test.crit99, locale));
    r.text += line("significant at 95%", s.test.significant95 ? "yes" : "no");
    r.text += line("significant at 99%", s.test.significant99 ? "yes" : "no");

    for (const auto* b : {&s.cube, &s.naive_phase1, &s.naive_phase2, &s.naive_total}) {
      const char* section = b == &s.cube ? "modality_i" : "modality_ii";
      csv(s.label, section, b->label + " avg_s", b->mean);
      csv(s.label, section, b->label + " std_s", b->std);
    }
    csv(s.label, "time_benefits", "per_day_min", -s.benefit.per_day);
    csv(s.label, "time_benefits", "per_month_min", -s.benefit.per_month);
    csv(s.label, "time_benefits", "per_year_h", -s.benefit.per_year);
    csv(s.label, "hypothesis_testing", "t", s.test.t);
    csv(s.label, "hypothesis_testing", "df", s.test.df);
    csv(s.label, "hypothesis_testing", "significant95", s.test.significant95 ? 1 : 0);
    csv(s.label, "hypothesis_testing", "significant99", s.test.significant99 ? 1 : 0);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Full run

std::vector<BenchScenario> bench_scenarios(const GeneratorParams& params) {
  const int y = params.last_year;
  const int y3 = std::max(params.first_year, y - 2);

  PivotQuery estimated;
  estimated.measure = Measure::kWorkingEur;
  estimated.aggregator = TimeAggregator::kSumClosing;
  estimated.row_levels = {Level::kAccount};

  PivotQuery average;
  average.measure = Measure::kBalanceEur;
  average.aggregator = TimeAggregator::kAverage;
  average.row_levels = {Level::kAccount};
  average.col_levels = {Level::kMonth};
  average.time_grain = Level::kMonth;

  std::vector<BenchScenario> out;
  estimated.time_range = DateRange{Date(y, 1, 1), Date(y, 1, 31)};
  out.push_back({"estimated balances, next month", estimated});
  estimated.time_range = DateRange{first_of_year(y), last_of_year(y)};
  out.push_back({"estimated balances, next year", estimated});
  average.time_range = DateRange{first_of_year(y), last_of_year(y)};
  out.push_back({"average balances, last year", average});
  average.time_range = DateRange{first_of_year(y3), last_of_year(y)};
  out.push_back({fmt::format("average balances, last {} years", y - y3 + 1), average});
  return out;
}

BenchOutcome run_bench(const GeneratorParams& params, const std::filesystem::path& out_dir,
                       DecimalLocale locale) {
  BenchOutcome outcome;
  outcome.dataset = generate_dataset(params, out_dir / "data");
  const auto config = EtlConfig::load(out_dir / "data" / "etl.conf");
  std::filesystem::remove(config.store);
  std::filesystem::remove(config.store.string() + ".sha256");
  const auto etl = run_etl(config);
  const auto cube = build_cube(etl.data);
  const RawDataset raw = RawDataset::load(config);

  for (const auto& scenario : bench_scenarios(params)) {
    const auto cube_sample = time_modality_cube(*cube, scenario.query);
    const auto naive = time_modality_naive(raw, scenario.query);
    if (!(naive.result == query_pivot(*cube, scenario.query))) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("{}: modalities disagree on the result", scenario.label));
    }
    ScenarioReport s;
    s.label = scenario.label;
    s.cube = summarize("refresh pivot table", cube_sample);
    s.naive_phase1 = summarize("get daily balances from operational data", naive.phase1);
    s.naive_phase2 = summarize("export data and aggregate", naive.phase2);
    s.naive_total = summarize("total", naive.total);
    s.test = pooled_t(s.cube.mean, s.cube.std, 3, s.naive_total.mean, s.naive_total.std, 3);
    s.benefit = time_benefit(s.cube.mean, s.naive_total.mean);
    const auto& range = *scenario.query.time_range;
    s.forecast_count = static_cast<size_t>(std::count_if(raw.movements.begin(), raw.movements.end(), [&](const Movement& m) {
      return m.kind == MovementKind::kForecast && m.value_date >= range.first && m.value_date <= range.last;
    }));
    outcome.scenarios.push_back(std::move(s));
  }

  const auto report = render_report(outcome.scenarios, locale, params.seed);
  write_file_atomic(out_dir / "bench_report.txt", report.text);
  write_file_atomic(out_dir / "bench_report.csv", report.csv);
  return outcome;
}

}  // namespace tdw
