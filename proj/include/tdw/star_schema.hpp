#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdw/date.hpp"
#include "tdw/money.hpp"
#include "tdw/time_dimension.hpp"

namespace tdw {

struct CountryRecord {
  std::string country_code;  // ISO-3166 alpha-2
  std::string name;
};

struct CompanyRecord {
  std::string company_id;
  std::string name;
  std::string country_code;
};

struct BankRecord {
  std::string bank_id;
  std::string name;
  std::string country_code;
};

struct CurrencyRecord {
  CurrencyCode currency_code;
  std::string name;
  int minor_unit_scale = kMinorUnitScale;
};

struct AccountRecord {
  std::string account_id;
  std::string company_id;
  std::string bank_id;
  CurrencyCode currency_code;
  std::string label;
};

/// Dimension tables as loaded, current-state snapshot. Country is reached
/// through both company and bank.
struct Dimensions {
  std::vector<CompanyRecord> companies;
  std::vector<BankRecord> banks;
  std::vector<AccountRecord> accounts;
  std::vector<CurrencyRecord> currencies;
  std::vector<CountryRecord> countries;
};

/// Id -> row lookups over a Dimensions value that must outlive it.
/// Duplicate ids resolve to the first row.
class DimensionLookup {
 public:
  explicit DimensionLookup(const Dimensions& dims);

  const CompanyRecord* company(std::string_view id) const { return find(companies_, id); }
  const BankRecord* bank(std::string_view id) const { return find(banks_, id); }
  const AccountRecord* account(std::string_view id) const { return find(accounts_, id); }
  const CountryRecord* country(std::string_view code) const { return find(countries_, code); }
  bool has_currency(CurrencyCode code) const;

 private:
  template <typename T>
  using Index = std::unordered_map<std::string_view, const T*>;

  template <typename T>
  static const T* find(const Index<T>& idx, std::string_view id) {
    auto it = idx.find(id);
    return it == idx.end() ? nullptr : it->second;
  }

  Index<CompanyRecord> companies_;
  Index<BankRecord> banks_;
  Index<AccountRecord> accounts_;
  Index<CountryRecord> countries_;
  std::vector<CurrencyCode> currencies_;
};

struct DimensionPaths {
  std::filesystem::path companies;
  std::filesystem::path banks;
  std::filesystem::path accounts;
  std::filesystem::path currencies;
  std::filesystem::path countries;

  /// Standard file names inside one directory.
  static DimensionPaths in_directory(const std::filesystem::path& dir);
};

Dimensions load_dimensions(const DimensionPaths& paths);
void save_dimensions(const DimensionPaths& paths, const Dimensions& dims);

/// One row per (value_date, account): balances in minor units. The *_orig
/// amounts are in the account's currency, the *_eur amounts in EUR.
struct FactAccountBalance {
  Date value_date;
  std::string account_id;
  int64_t balance_orig = 0;
  int64_t balance_eur = 0;
  int64_t working_orig = 0;
  int64_t working_eur = 0;

  bool operator==(const FactAccountBalance&) const = default;
};

struct FactKey {
  Date value_date;
  std::string account_id;

  auto operator<=>(const FactKey&) const = default;
};

struct FactAmounts {
  int64_t balance_orig = 0;
  int64_t balance_eur = 0;
  int64_t working_orig = 0;
  int64_t working_eur = 0;

  bool operator==(const FactAmounts&) const = default;
};

/// Key-unique fact table. Iteration order is the canonical (value_date,
/// account_id) order, so the digest does not depend on insertion order.
class FactStore {
 public:
  using Map = std::map<FactKey, FactAmounts>;

  /// Throws Error(kDuplicateKey) on repeated keys; validate_star() reports
  /// them instead when run over the raw rows.
  static FactStore from_rows(std::span<const FactAccountBalance> rows);

  size_t size() const { return facts_.size(); }
  bool empty() const { return facts_.empty(); }
  const Map& facts() const { return facts_; }
  const FactAmounts* find(const FactKey& key) const;

  /// Inserts or overwrites.
  void put(const FactAccountBalance& fact);

  std::vector<FactAccountBalance> rows() const;

  /// SHA-256 (hex) of the canonical facts.csv serialization.
  std::string digest() const;

  bool operator==(const FactStore&) const = default;

 private:
  Map facts_;
};

std::string facts_to_csv(const FactStore& store);
std::vector<FactAccountBalance> facts_from_csv(std::string_view text,
                                               std::string_view source = "facts.csv");

std::string sha256_hex(std::string_view data);

/// Writes facts.csv plus a `<path>.sha256` sidecar.
void save_fact_store(const std::filesystem::path& path, const FactStore& store);
/// Raw rows from facts.csv; verifies the sidecar digest when present
/// (Error(kCorruptStore) on mismatch). A missing file yields no rows.
std::vector<FactAccountBalance> load_fact_rows(const std::filesystem::path& path);

struct Violation {
  enum class Kind { kDuplicateKey, kDanglingKey, kDateNotInTimeTable };

  Kind kind;
  std::string table;  // table holding the offending row
  std::string key;    // the offending row's key
  std::string detail;

  auto operator<=>(const Violation&) const = default;
};

std::string_view violation_kind_name(Violation::Kind kind);

struct ValidationReport {
  std::vector<Violation> violations;  // sorted

  bool valid() const { return violations.empty(); }
  std::string summary(size_t max_items = 10) const;
};

/// Reports (never throws) duplicate primary keys, dangling foreign keys along
/// fact->account->{company,bank,currency} and {company,bank}->country, and
/// facts dated outside the time table.
ValidationReport validate_star(const Dimensions& dims, const TimeTable& time,
                               std::span<const FactAccountBalance> facts);

}  // namespace tdw
