#include "tdw/star_schema.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>

#include "tdw/csv.hpp"
#include "tdw/error.hpp"

namespace tdw {

DimensionLookup::DimensionLookup(const Dimensions& dims) {
  for (const auto& c : dims.companies) companies_.try_emplace(c.company_id, &c);
  for (const auto& b : dims.banks) banks_.try_emplace(b.bank_id, &b);
  for (const auto& a : dims.accounts) accounts_.try_emplace(a.account_id, &a);
  for (const auto& c : dims.countries) countries_.try_emplace(c.country_code, &c);
  for (const auto& c : dims.currencies) currencies_.push_back(c.currency_code);
}

bool DimensionLookup::has_currency(CurrencyCode code) const {
  return std::find(currencies_.begin(), currencies_.end(), code) != currencies_.end();
}

DimensionPaths DimensionPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "companies.csv", dir / "banks.csv", dir / "accounts.csv", dir / "currencies.csv",
          dir / "countries.csv"};
}

namespace {

struct RowReader {
  const CsvTable& table;
  std::vector<int> cols;
  std::string source;

  template <size_t N>
  std::array<std::string, N> fields(const CsvRow& row) const {
    if (row.fields.size() != table.header.size()) {
      throw Error(ErrorCode::kBadInput,
                  fmt::format("{}:{}: expected {} fields, got {}", source, row.line,
                              table.header.size(), row.fields.size()));
    }
    std::array<std::string, N> out;
    for (size_t i = 0; i < N; ++i) out[i] = row.fields[static_cast<size_t>(cols[i])];
    return out;
  }

  CurrencyCode currency(const CsvRow& row, const std::string& text) const {
    if (!CurrencyCode::valid(text)) {
      throw Error(ErrorCode::kBadInput,
                  fmt::format("{}:{}: invalid currency code '{}'", source, row.line, text));
    }
    return CurrencyCode(text);
  }
};

RowReader reader(const CsvTable& t, std::initializer_list<std::string_view> names,
                 const std::filesystem::path& path) {
  return RowReader{t, t.require_columns(names, path.string()), path.string()};
}

}  // namespace

Dimensions load_dimensions(const DimensionPaths& paths) {
  Dimensions dims;
  {
    auto t = read_csv_file(paths.countries);
    auto r = reader(t, {"country_code", "name"}, paths.countries);
    for (const auto& row : t.rows) {
      auto [code, name] = r.fields<2>(row);
      dims.countries.push_back({code, name});
    }
  }
  {
    auto t = read_csv_file(paths.currencies);
    auto r = reader(t, {"currency_code", "name"}, paths.currencies);
    for (const auto& row : t.rows) {
      auto [code, name] = r.fields<2>(row);
      dims.currencies.push_back({r.currency(row, code), name, kMinorUnitScale});
    }
  }
  {
    auto t = read_csv_file(paths.companies);
    auto r = reader(t, {"company_id", "name", "country_code"}, paths.companies);
    for (const auto& row : t.rows) {
      auto [id, name, country] = r.fields<3>(row);
      dims.companies.push_back({id, name, country});
    }
  }
  {
    auto t = read_csv_file(paths.banks);
    auto r = reader(t, {"bank_id", "name", "country_code"}, paths.banks);
    for (const auto& row : t.rows) {
      auto [id, name, country] = r.fields<3>(row);
      dims.banks.push_back({id, name, country});
    }
  }
  {
    auto t = read_csv_file(paths.accounts);
    auto r = reader(t, {"account_id", "company_id", "bank_id", "currency_code", "label"},
                    paths.accounts);
    for (const auto& row : t.rows) {
      auto [id, company, bank, currency, label] = r.fields<5>(row);
      dims.accounts.push_back({id, company, bank, r.currency(row, currency), label});
    }
  }
  return dims;
}

void save_dimensions(const DimensionPaths& paths, const Dimensions& dims) {
  std::string out = "country_code,name\n";
  for (const auto& c : dims.countries) append_csv_line(out, c.country_code, c.name);
  write_file_atomic(paths.countries, out);

  out = "currency_code,name\n";
  for (const auto& c : dims.currencies) append_csv_line(out, c.currency_code.view(), c.name);
  write_file_atomic(paths.currencies, out);

  out = "company_id,name,country_code\n";
  for (const auto& c : dims.companies) append_csv_line(out, c.company_id, c.name, c.country_code);
  write_file_atomic(paths.companies, out);

  out = "bank_id,name,country_code\n";
  for (const auto& b : dims.banks) append_csv_line(out, b.bank_id, b.name, b.country_code);
  write_file_atomic(paths.banks, out);

  out = "account_id,company_id,bank_id,currency_code,label\n";
  for (const auto& a : dims.accounts) {
    append_csv_line(out, a.account_id, a.company_id, a.bank_id, a.currency_code.view(), a.label);
  }
  write_file_atomic(paths.accounts, out);
}

// ---------------------------------------------------------------------------
// Fact store

FactStore FactStore::from_rows(std::span<const FactAccountBalance> rows) {
  FactStore store;
  for (const auto& f : rows) {
    auto [it, inserted] = store.facts_.try_emplace(
        FactKey{f.value_date, f.account_id},
        FactAmounts{f.balance_orig, f.balance_eur, f.working_orig, f.working_eur});
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateKey,
                  fmt::format("duplicate fact ({}, {})", f.value_date.iso(), f.account_id));
    }
  }
  return store;
}

const FactAmounts* FactStore::find(const FactKey& key) const {
  auto it = facts_.find(key);
  return it == facts_.end() ? nullptr : &it->second;
}

void FactStore::put(const FactAccountBalance& f) {
  facts_[FactKey{f.value_date, f.account_id}] =
      FactAmounts{f.balance_orig, f.balance_eur, f.working_orig, f.working_eur};
}

std::vector<FactAccountBalance> FactStore::rows() const {
  std::vector<FactAccountBalance> out;
  out.reserve(facts_.size());
  for (const auto& [k, v] : facts_) {
    out.push_back({k.value_date, k.account_id, v.balance_orig, v.balance_eur, v.working_orig,
                   v.working_eur});
  }
  return out;
}

std::string FactStore::digest() const { return sha256_hex(facts_to_csv(*this)); }

std::string facts_to_csv(const FactStore& store) {
  std::string out = "value_date,account_id,balance_orig,balance_eur,working_orig,working_eur\n";
  out.reserve(out.size() + store.size() * 64);
  for (const auto& [k, v] : store.facts()) {
    out += k.value_date.iso();
    out += ',';
    append_csv_field(out, k.account_id);
    fmt::format_to(std::back_inserter(out), ",{},{},{},{}\n", v.balance_orig, v.balance_eur,
                   v.working_orig, v.working_eur);
  }
  return out;
}

std::vector<FactAccountBalance> facts_from_csv(std::string_view text, std::string_view source) {
  auto t = parse_csv(text);
  auto cols = t.require_columns(
      {"value_date", "account_id", "balance_orig", "balance_eur", "working_orig", "working_eur"},
      source);
  std::vector<FactAccountBalance> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    auto bad = [&](std::string_view what) {
      return Error(ErrorCode::kBadInput, fmt::format("{}:{}: bad {}", source, row.line, what));
    };
    if (row.fields.size() != t.header.size()) throw bad("field count");
    FactAccountBalance f;
    if (!Date::try_parse(row.fields[static_cast<size_t>(cols[0])], f.value_date)) throw bad("value_date");
    f.account_id = row.fields[static_cast<size_t>(cols[1])];
    int64_t* targets[] = {&f.balance_orig, &f.balance_eur, &f.working_orig, &f.working_eur};
    for (size_t i = 0; i < 4; ++i) {
      const auto& s = row.fields[static_cast<size_t>(cols[i + 2])];
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *targets[i]);
      if (ec != std::errc{} || p != s.data() + s.size()) throw bad("amount");
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) fmt::format_to(std::back_inserter(hex), "{:02x}", md[i]);
  return hex;
}

namespace {

std::filesystem::path digest_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".sha256";
  return p;
}

}  // namespace

void save_fact_store(const std::filesystem::path& path, const FactStore& store) {
  auto text = facts_to_csv(store);
  write_file_atomic(path, text);
  write_file_atomic(digest_path(path), sha256_hex(text) + "\n");
}

std::vector<FactAccountBalance> load_fact_rows(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  auto text = read_file(path);
  auto dpath = digest_path(path);
  if (std::filesystem::exists(dpath)) {
    auto expected = read_file(dpath);
    while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r')) expected.pop_back();
    if (expected != sha256_hex(text)) {
      throw Error(ErrorCode::kCorruptStore,
                  fmt::format("digest mismatch for '{}'", path.string()));
    }
  }
  return facts_from_csv(text, path.string());
}

// ---------------------------------------------------------------------------
// Validation

std::string_view violation_kind_name(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::kDuplicateKey: return "DUPLICATE_KEY";
    case Violation::Kind::kDanglingKey: return "DANGLING_KEY";
    case Violation::Kind::kDateNotInTimeTable: return "DATE_NOT_IN_TIME_TABLE";
  }
  return "?";
}

std::string ValidationReport::summary(size_t max_items) const {
  std::string out = fmt::format("{} violation(s)", violations.size());
  for (size_t i = 0; i < violations.size() && i < max_items; ++i) {
    const auto& v = violations[i];
    fmt::format_to(std::back_inserter(out), "\n  {} {}[{}]: {}", violation_kind_name(v.kind),
                   v.table, v.key, v.detail);
  }
  if (violations.size() > max_items) out += "\n  ...";
  return out;
}

namespace {

template <typename Rows, typename KeyFn>
void report_duplicates(const Rows& rows, KeyFn key, std::string_view table,
                       std::vector<Violation>& out) {
  std::map<std::string, int> seen;
  for (const auto& r : rows) {
    if (++seen[key(r)] > 1) {
      out.push_back({Violation::Kind::kDuplicateKey, std::string(table), key(r), "repeated primary key"});
    }
  }
}

}  // namespace

ValidationReport validate_star(const Dimensions& dims, const TimeTable& time,
                               std::span<const FactAccountBalance> facts) {
  std::vector<Violation> v;
  const DimensionLookup lookup(dims);

  report_duplicates(dims.countries, [](const CountryRecord& r) { return r.country_code; }, "countries", v);
  report_duplicates(dims.currencies, [](const CurrencyRecord& r) { return r.currency_code.str(); }, "currencies", v);
  report_duplicates(dims.companies, [](const CompanyRecord& r) { return r.company_id; }, "companies", v);
  report_duplicates(dims.banks, [](const BankRecord& r) { return r.bank_id; }, "banks", v);
  report_duplicates(dims.accounts, [](const AccountRecord& r) { return r.account_id; }, "accounts", v);
  report_duplicates(facts, [](const FactAccountBalance& f) { return f.value_date.iso() + "|" + f.account_id; }, "facts", v);

  auto dangling = [&](std::string_view table, const std::string& key, std::string detail) {
    v.push_back({Violation::Kind::kDanglingKey, std::string(table), key, std::move(detail)});
  };

  for (const auto& c : dims.companies) {
    if (!lookup.country(c.country_code)) dangling("companies", c.company_id, "country " + c.country_code);
  }
  for (const auto& b : dims.banks) {
    if (!lookup.country(b.country_code)) dangling("banks", b.bank_id, "country " + b.country_code);
  }
  for (const auto& a : dims.accounts) {
    if (!lookup.company(a.company_id)) dangling("accounts", a.account_id, "company " + a.company_id);
    if (!lookup.bank(a.bank_id)) dangling("accounts", a.account_id, "bank " + a.bank_id);
    if (!lookup.has_currency(a.currency_code)) {
      dangling("accounts", a.account_id, "currency " + a.currency_code.str());
    }
  }
  for (const auto& f : facts) {
    const auto key = f.value_date.iso() + "|" + f.account_id;
    if (!lookup.account(f.account_id)) dangling("facts", key, "account " + f.account_id);
    if (!time.contains(f.value_date)) {
      v.push_back({Violation::Kind::kDateNotInTimeTable, "facts", key, "value_date " + f.value_date.iso()});
    }
  }

  std::sort(v.begin(), v.end());
  return ValidationReport{std::move(v)};
}

}  // namespace tdw
