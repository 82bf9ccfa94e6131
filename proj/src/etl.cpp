#include "tdw/etl.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

#include "tdw/error.hpp"

namespace tdw {

std::string_view movement_kind_name(MovementKind kind) {
  return kind == MovementKind::kActual ? "ACTUAL" : "FORECAST";
}

std::string_view reject_reason_name(RejectReason reason) {
  switch (reason) {
    case RejectReason::kDuplicate: return "DUPLICATE";
    case RejectReason::kMissingField: return "MISSING_FIELD";
    case RejectReason::kBadDate: return "BAD_DATE";
    case RejectReason::kBadAmount: return "BAD_AMOUNT";
    case RejectReason::kBadKind: return "BAD_KIND";
    case RejectReason::kUnknownAccount: return "UNKNOWN_ACCOUNT";
    case RejectReason::kCurrencyMismatch: return "CURRENCY_MISMATCH";
    case RejectReason::kDateOutOfRange: return "DATE_OUT_OF_RANGE";
    case RejectReason::kZeroAmount: return "ZERO_AMOUNT";
    case RejectReason::kStaleForecast: return "STALE_FORECAST";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Cleaning

CleanResult clean_movements(const CsvTable& raw, const Dimensions& dims, const TimeTable& time,
                            const CleanOptions& options) {
  enum Col { kAccount, kDate, kAmount, kCurrency, kKind, kDescription };
  const auto cols = raw.require_columns(
      {"account_id", "value_date", "amount", "currency_code", "kind", "description"}, "movements");
  const DimensionLookup lookup(dims);
  const auto& rows = raw.rows;

  // Exact duplicates: order row indices by content, ties by position, so the
  // first occurrence of each distinct row survives.
  std::vector<bool> duplicate(rows.size(), false);
  {
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (rows[a].fields != rows[b].fields) return rows[a].fields < rows[b].fields;
      return a < b;
    });
    for (size_t i = 1; i < order.size(); ++i) {
      if (rows[order[i]].fields == rows[order[i - 1]].fields) duplicate[order[i]] = true;
    }
  }

  CleanResult out;
  out.movements.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    auto reject = [&](RejectReason r) { out.rejected.push_back({row.line, r}); };
    if (duplicate[i]) {
      reject(RejectReason::kDuplicate);
      continue;
    }
    auto field = [&](Col c) -> const std::string* {
      auto pos = static_cast<size_t>(cols[c]);
      return pos < row.fields.size() ? &row.fields[pos] : nullptr;
    };
    bool missing = false;
    for (Col c : {kAccount, kDate, kAmount, kCurrency, kKind}) {
      if (!field(c) || field(c)->empty()) missing = true;
    }
    if (missing) {
      reject(RejectReason::kMissingField);
      continue;
    }

    Movement m;
    if (!Date::try_parse(*field(kDate), m.value_date)) {
      reject(RejectReason::kBadDate);
      continue;
    }
    auto amount = parse_amount_minor(*field(kAmount));
    if (!amount) {
      reject(RejectReason::kBadAmount);
      continue;
    }
    const auto& kind = *field(kKind);
    if (kind == "ACTUAL") {
      m.kind = MovementKind::kActual;
    } else if (kind == "FORECAST") {
      m.kind = MovementKind::kForecast;
    } else {
      reject(RejectReason::kBadKind);
      continue;
    }
    const AccountRecord* account = lookup.account(*field(kAccount));
    if (!account) {
      reject(RejectReason::kUnknownAccount);
      continue;
    }
    if (account->currency_code.view() != *field(kCurrency)) {
      reject(RejectReason::kCurrencyMismatch);
      continue;
    }
    if (!time.contains(m.value_date)) {
      reject(RejectReason::kDateOutOfRange);
      continue;
    }
    if (options.reject_zero_amount && *amount == 0) {
      reject(RejectReason::kZeroAmount);
      continue;
    }
    if (!options.include_stale_forecasts && options.as_of && m.kind == MovementKind::kForecast &&
        m.value_date <= *options.as_of) {
      reject(RejectReason::kStaleForecast);
      continue;
    }
    m.account_id = account->account_id;
    m.amount = MoneyMinor{*amount, account->currency_code};
    if (auto* d = field(kDescription)) m.description = *d;
    out.movements.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Balances

namespace {

std::map<std::string_view, const OpeningBalance*> index_openings(
    std::span<const OpeningBalance> openings) {
  std::map<std::string_view, const OpeningBalance*> out;
  for (const auto& o : openings) {
    if (!out.emplace(o.account_id, &o).second) {
      throw Error(ErrorCode::kDuplicateOpening,
                  fmt::format("more than one opening balance for account {}", o.account_id));
    }
  }
  return out;
}

}  // namespace

std::vector<DailyBalance> compute_daily_balances(std::span<const Movement> movements,
                                                 std::span<const OpeningBalance> openings) {
  const auto opening_of = index_openings(openings);

  std::vector<const Movement*> sorted;
  sorted.reserve(movements.size());
  for (const auto& m : movements) sorted.push_back(&m);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Movement* a, const Movement* b) {
    if (a->account_id != b->account_id) return a->account_id < b->account_id;
    return a->value_date < b->value_date;
  });

  std::vector<DailyBalance> out;
  size_t i = 0;
  while (i < sorted.size()) {
    const std::string& account = sorted[i]->account_id;
    int64_t real = 0;
    int64_t forecast = 0;
    if (auto it = opening_of.find(account); it != opening_of.end()) {
      if (it->second->as_of_date > sorted[i]->value_date) {
        throw Error(ErrorCode::kOpeningAfterMovement,
                    fmt::format("opening balance of {} dated {} is after its first movement on {}",
                                account, it->second->as_of_date.iso(),
                                sorted[i]->value_date.iso()));
      }
      real = it->second->amount.amount_minor;
    }
    while (i < sorted.size() && sorted[i]->account_id == account) {
      const Date day = sorted[i]->value_date;
      const CurrencyCode currency = sorted[i]->amount.currency;
      for (; i < sorted.size() && sorted[i]->account_id == account && sorted[i]->value_date == day; ++i) {
        (sorted[i]->kind == MovementKind::kActual ? real : forecast) += sorted[i]->amount.amount_minor;
      }
      out.push_back({account, day, currency, real, real + forecast});
    }
  }
  return out;
}

std::vector<DailyBalance> densify_balances(std::span<const DailyBalance> sparse,
                                           const TimeTable& time,
                                           std::span<const AccountRecord> accounts,
                                           std::span<const OpeningBalance> openings) {
  const auto opening_of = index_openings(openings);

  std::map<std::string_view, std::vector<const DailyBalance*>> by_account;
  for (const auto& b : sparse) {
    if (!time.contains(b.date)) {
      throw Error(ErrorCode::kDateOutOfTable,
                  fmt::format("balance of {} dated {} is outside the time table", b.account_id,
                              b.date.iso()));
    }
    by_account[b.account_id].push_back(&b);
  }

  std::vector<const AccountRecord*> ordered;
  for (const auto& a : accounts) ordered.push_back(&a);
  std::sort(ordered.begin(), ordered.end(),
            [](auto* a, auto* b) { return a->account_id < b->account_id; });

  for (const auto& [id, _] : by_account) {
    bool known = std::any_of(ordered.begin(), ordered.end(),
                             [&](auto* a) { return a->account_id == id; });
    if (!known) {
      throw Error(ErrorCode::kUnknownAccount, fmt::format("balance for unknown account {}", id));
    }
  }

  std::vector<DailyBalance> out;
  out.reserve(ordered.size() * time.size());
  for (const AccountRecord* account : ordered) {
    std::vector<const DailyBalance*> points;
    if (auto it = by_account.find(account->account_id); it != by_account.end()) points = it->second;
    std::stable_sort(points.begin(), points.end(),
                     [](auto* a, auto* b) { return a->date < b->date; });

    const OpeningBalance* opening = nullptr;
    if (auto it = opening_of.find(account->account_id); it != opening_of.end()) opening = it->second;

    size_t next = 0;
    bool active = false;
    int64_t real = 0;
    int64_t working = 0;
    for (const auto& day : time.records()) {
      while (next < points.size() && points[next]->date == day.date) {
        real = points[next]->real_minor;
        working = points[next]->working_minor;
        active = true;
        ++next;
      }
      if (!active) {
        real = working = (opening && opening->as_of_date <= day.date) ? opening->amount.amount_minor : 0;
      }
      out.push_back({account->account_id, day.date, account->currency_code, real, working});
    }
  }
  return out;
}

RateBook::RateBook(std::span<const ExchangeRate> rates) {
  for (const auto& r : rates) by_currency_[r.currency].emplace_back(r.rate_date, r.rate_to_eur);
  for (auto& [currency, series] : by_currency_) {
    std::sort(series.begin(), series.end());
    for (size_t i = 1; i < series.size(); ++i) {
      if (series[i].first == series[i - 1].first) {
        throw Error(ErrorCode::kDuplicateKey,
                    fmt::format("duplicate {} rate on {}", currency.str(), series[i].first.iso()));
      }
    }
  }
}

std::optional<RateMicro> RateBook::lookup(CurrencyCode currency, Date date) const {
  if (currency == kEur) return RateMicro{RateMicro::kOne};
  auto it = by_currency_.find(currency);
  if (it == by_currency_.end()) return std::nullopt;
  const auto& series = it->second;
  auto pos = std::upper_bound(series.begin(), series.end(), date,
                              [](Date d, const auto& entry) { return d < entry.first; });
  if (pos == series.begin()) return std::nullopt;
  return std::prev(pos)->second;
}

std::vector<FactAccountBalance> convert_to_eur(std::span<const DailyBalance> dense,
                                               const RateBook& rates) {
  std::vector<FactAccountBalance> out;
  out.reserve(dense.size());
  for (const auto& b : dense) {
    auto rate = rates.lookup(b.currency, b.date);
    if (!rate) {
      throw Error(ErrorCode::kNoRate,
                  fmt::format("no {} exchange rate on or before {}", b.currency.str(), b.date.iso()));
    }
    out.push_back({b.date, b.account_id, b.real_minor, convert_minor(b.real_minor, *rate),
                   b.working_minor, convert_minor(b.working_minor, *rate)});
  }
  return out;
}

UpsertStats upsert_facts(FactStore& store, std::span<const FactAccountBalance> incoming) {
  UpsertStats stats;
  for (const auto& f : incoming) {
    const FactAmounts* existing = store.find(FactKey{f.value_date, f.account_id});
    if (!existing) {
      ++stats.inserted;
      store.put(f);
    } else if (existing->balance_eur != f.balance_eur || existing->working_eur != f.working_eur) {
      ++stats.updated;
      store.put(f);
    } else {
      ++stats.unchanged;
    }
  }
  if (stats.inserted + stats.updated + stats.unchanged != incoming.size()) {
    throw Error(ErrorCode::kDuplicateKey, "incoming facts are not key-unique");
  }
  return stats;
}

// ---------------------------------------------------------------------------
// Auxiliary sources

std::vector<OpeningBalance> load_opening_balances(const std::filesystem::path& path) {
  auto t = read_csv_file(path);
  auto cols = t.require_columns({"account_id", "as_of_date", "amount", "currency_code"}, path.string());
  std::vector<OpeningBalance> out;
  for (const auto& row : t.rows) {
    auto bad = [&](std::string_view what) {
      return Error(ErrorCode::kBadInput, fmt::format("{}:{}: bad {}", path.string(), row.line, what));
    };
    if (row.fields.size() != t.header.size()) throw bad("field count");
    auto f = [&](int i) -> const std::string& { return row.fields[static_cast<size_t>(cols[static_cast<size_t>(i)])]; };
    OpeningBalance o;
    o.account_id = f(0);
    if (!Date::try_parse(f(1), o.as_of_date)) throw bad("as_of_date");
    auto amount = parse_amount_minor(f(2));
    if (!amount) throw bad("amount");
    if (!CurrencyCode::valid(f(3))) throw bad("currency_code");
    o.amount = MoneyMinor{*amount, CurrencyCode(f(3))};
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<ExchangeRate> load_exchange_rates(const std::filesystem::path& path) {
  auto t = read_csv_file(path);
  auto cols = t.require_columns({"currency_code", "rate_date", "rate_to_eur"}, path.string());
  std::vector<ExchangeRate> out;
  for (const auto& row : t.rows) {
    auto bad = [&](std::string_view what) {
      return Error(ErrorCode::kBadInput, fmt::format("{}:{}: bad {}", path.string(), row.line, what));
    };
    if (row.fields.size() != t.header.size()) throw bad("field count");
    auto f = [&](int i) -> const std::string& { return row.fields[static_cast<size_t>(cols[static_cast<size_t>(i)])]; };
    ExchangeRate r;
    if (!CurrencyCode::valid(f(0))) throw bad("currency_code");
    r.currency = CurrencyCode(f(0));
    if (!Date::try_parse(f(1), r.rate_date)) throw bad("rate_date");
    auto rate = parse_rate(f(2));
    if (!rate) throw bad("rate_to_eur (must be > 0, at most 6 decimals)");
    r.rate_to_eur = *rate;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

EtlConfig EtlConfig::from_kv(const KvConfig& kv) {
  EtlConfig c;
  const auto dir = kv.path_or("data_dir", ".");
  // Relative file names resolve against data_dir.
  auto data_path = [&](std::string_view key, std::string_view file) {
    auto v = kv.get(key);
    if (!v) return dir / file;
    std::filesystem::path p = *v;
    return p.is_absolute() ? p : dir / p;
  };
  c.dimensions = {data_path("companies", "companies.csv"), data_path("banks", "banks.csv"),
                  data_path("accounts", "accounts.csv"), data_path("currencies", "currencies.csv"),
                  data_path("countries", "countries.csv")};
  c.movements = data_path("movements", "movements.csv");
  c.opening_balances = data_path("opening_balances", "opening_balances.csv");
  c.exchange_rates = data_path("exchange_rates", "exchange_rates.csv");
  c.time_table = data_path("time_table", "time_table.csv");
  c.store = data_path("store", "facts.csv");

  c.revaluation_window_days = static_cast<int>(kv.get_int("revaluation_window_days", 5));
  if (c.revaluation_window_days < 0) {
    throw Error(ErrorCode::kInvalidArgument, "revaluation_window_days must be >= 0");
  }
  c.reject_zero_amount = kv.get_bool("reject_zero_amount", false);
  c.include_stale_forecasts = kv.get_bool("include_stale_forecasts", true);
  const auto mode = kv.get_or("mode", "full");
  if (mode != "full" && mode != "incremental") {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown mode '{}'", mode));
  }
  c.incremental = mode == "incremental";
  if (auto as_of = kv.get("as_of_date")) c.as_of = Date::parse(*as_of);
  if (c.incremental && !c.as_of) {
    throw Error(ErrorCode::kInvalidArgument, "incremental mode requires as_of_date");
  }
  return c;
}

EtlConfig EtlConfig::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

EtlConfig EtlConfig::in_directory(const std::filesystem::path& dir) {
  KvConfig kv;
  kv.set("data_dir", dir.string());
  return from_kv(kv);
}

namespace {

void require_valid(const ValidationReport& report, std::string_view stage) {
  if (!report.valid()) {
    throw Error(ErrorCode::kStarInvalid, fmt::format("{}: {}", stage, report.summary()));
  }
}

void check_openings(std::span<const OpeningBalance> openings, const Dimensions& dims) {
  const DimensionLookup lookup(dims);
  for (const auto& o : openings) {
    const auto* account = lookup.account(o.account_id);
    if (!account) {
      throw Error(ErrorCode::kUnknownAccount,
                  fmt::format("opening balance for unknown account {}", o.account_id));
    }
    if (account->currency_code != o.amount.currency) {
      throw Error(ErrorCode::kBadInput,
                  fmt::format("opening balance of {} is in {}, account currency is {}",
                              o.account_id, o.amount.currency.str(), account->currency_code.str()));
    }
  }
}

}  // namespace

EtlOutcome run_etl(const EtlConfig& config) {
  auto data = std::make_shared<WarehouseData>();
  EtlReport report;

  // 1. Dimensions and calendar.
  data->dimensions = load_dimensions(config.dimensions);
  data->time = load_time_table(config.time_table);
  require_valid(validate_star(data->dimensions, data->time, {}), "dimension load");

  // 2. Auxiliary tables: rates, openings, daily balances.
  const RateBook rates(load_exchange_rates(config.exchange_rates));
  const auto openings = load_opening_balances(config.opening_balances);
  check_openings(openings, data->dimensions);

  const auto raw = read_csv_file(config.movements);
  CleanOptions options;
  options.reject_zero_amount = config.reject_zero_amount;
  options.include_stale_forecasts = config.include_stale_forecasts;
  options.as_of = config.as_of;
  auto cleaned = clean_movements(raw, data->dimensions, data->time, options);
  report.rows_read = raw.rows.size();
  report.rows_rejected = cleaned.rejected.size();
  for (const auto& r : cleaned.rejected) ++report.rejects_by_reason[r.reason];
  report.rejects = std::move(cleaned.rejected);

  const auto sparse = compute_daily_balances(cleaned.movements, openings);
  report.balances_computed = sparse.size();
  const auto dense = densify_balances(sparse, data->time, data->dimensions.accounts, openings);

  // 3. Fact table.
  auto facts = convert_to_eur(dense, rates);
  data->facts = FactStore::from_rows(load_fact_rows(config.store));
  if (config.incremental) {
    const Date cutoff = *config.as_of - config.revaluation_window_days;
    std::erase_if(facts, [&](const FactAccountBalance& f) {
      return f.value_date < cutoff && data->facts.find({f.value_date, f.account_id}) != nullptr;
    });
  }
  report.facts_presented = facts.size();
  const auto stats = upsert_facts(data->facts, facts);
  report.facts_inserted = stats.inserted;
  report.facts_updated = stats.updated;
  report.facts_unchanged = stats.unchanged;

  const auto rows = data->facts.rows();
  require_valid(validate_star(data->dimensions, data->time, rows), "fact load");

  save_fact_store(config.store, data->facts);
  report.store_digest = data->facts.digest();
  return EtlOutcome{std::move(report), std::move(data)};
}

std::shared_ptr<const WarehouseData> load_warehouse(const EtlConfig& config) {
  auto data = std::make_shared<WarehouseData>();
  data->dimensions = load_dimensions(config.dimensions);
  data->time = load_time_table(config.time_table);
  const auto rows = load_fact_rows(config.store);
  require_valid(validate_star(data->dimensions, data->time, rows), "warehouse load");
  data->facts = FactStore::from_rows(rows);
  return data;
}

}  // namespace tdw
