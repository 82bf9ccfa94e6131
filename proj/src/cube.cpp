#include "tdw/cube.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "tdw/error.hpp"

namespace tdw {

// ---------------------------------------------------------------------------
// Schema

namespace {

constexpr std::array<std::string_view, kLevelCount> kLevelNames = {
    "year",    "semester", "quarter", "month",        "day",  "iso_year", "week",
    "company_country", "company", "bank_country", "bank", "currency", "account"};

constexpr Level kCalendarLevels[] = {Level::kYear, Level::kSemester, Level::kQuarter, Level::kMonth,
                                     Level::kDay};
constexpr Level kIsoWeekLevels[] = {Level::kIsoYear, Level::kWeek, Level::kDay};
constexpr Level kCompanyGeoLevels[] = {Level::kCompanyCountry, Level::kCompany, Level::kAccount};
constexpr Level kBankGeoLevels[] = {Level::kBankCountry, Level::kBank, Level::kAccount};
constexpr Level kCurrencyLevels[] = {Level::kCurrency, Level::kAccount};

constexpr Hierarchy kAllHierarchies[] = {Hierarchy::kCalendar, Hierarchy::kIsoWeek,
                                         Hierarchy::kCompanyGeo, Hierarchy::kBankGeo,
                                         Hierarchy::kCurrency};

int depth_in(Level level, Hierarchy h) {
  auto levels = hierarchy_levels(h);
  auto it = std::find(levels.begin(), levels.end(), level);
  return it == levels.end() ? -1 : static_cast<int>(it - levels.begin());
}

Error malformed(const std::string& message) { return Error(ErrorCode::kMalformedQuery, message); }

}  // namespace

std::string_view level_name(Level level) { return kLevelNames[static_cast<size_t>(level)]; }

std::optional<Level> level_from_name(std::string_view name) {
  for (size_t i = 0; i < kLevelNames.size(); ++i) {
    if (kLevelNames[i] == name) return static_cast<Level>(i);
  }
  return std::nullopt;
}

std::string_view hierarchy_name(Hierarchy h) {
  switch (h) {
    case Hierarchy::kCalendar: return "calendar";
    case Hierarchy::kIsoWeek: return "iso_week";
    case Hierarchy::kCompanyGeo: return "company_geo";
    case Hierarchy::kBankGeo: return "bank_geo";
    case Hierarchy::kCurrency: return "currency";
  }
  return "?";
}

std::span<const Level> hierarchy_levels(Hierarchy h) {
  switch (h) {
    case Hierarchy::kCalendar: return kCalendarLevels;
    case Hierarchy::kIsoWeek: return kIsoWeekLevels;
    case Hierarchy::kCompanyGeo: return kCompanyGeoLevels;
    case Hierarchy::kBankGeo: return kBankGeoLevels;
    case Hierarchy::kCurrency: return kCurrencyLevels;
  }
  return {};
}

std::vector<Hierarchy> hierarchies_of(Level level) {
  std::vector<Hierarchy> out;
  for (auto h : kAllHierarchies) {
    if (depth_in(level, h) >= 0) out.push_back(h);
  }
  return out;
}

std::optional<Level> parent_level(Level level, Hierarchy h) {
  int d = depth_in(level, h);
  if (d <= 0) return std::nullopt;
  return hierarchy_levels(h)[static_cast<size_t>(d - 1)];
}

std::optional<Level> child_level(Level level) {
  for (auto h : kAllHierarchies) {
    auto levels = hierarchy_levels(h);
    int d = depth_in(level, h);
    if (d >= 0 && static_cast<size_t>(d + 1) < levels.size()) return levels[static_cast<size_t>(d + 1)];
  }
  return std::nullopt;
}

std::string_view measure_name(Measure m) {
  switch (m) {
    case Measure::kBalanceEur: return "balance_eur";
    case Measure::kBalanceOrig: return "balance_orig";
    case Measure::kWorkingEur: return "working_eur";
    case Measure::kWorkingOrig: return "working_orig";
  }
  return "?";
}

std::optional<Measure> measure_from_name(std::string_view name) {
  for (auto m : {Measure::kBalanceEur, Measure::kBalanceOrig, Measure::kWorkingEur, Measure::kWorkingOrig}) {
    if (measure_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view aggregator_name(TimeAggregator a) {
  return a == TimeAggregator::kSumClosing ? "SUM_CLOSING" : "AVERAGE";
}

std::optional<TimeAggregator> aggregator_from_name(std::string_view name) {
  if (name == "SUM_CLOSING") return TimeAggregator::kSumClosing;
  if (name == "AVERAGE") return TimeAggregator::kAverage;
  return std::nullopt;
}

std::span<const CubeDimension> cube_dimensions() {
  static const std::vector<CubeDimension> dims = {
      {"Time", {Hierarchy::kCalendar, Hierarchy::kIsoWeek}},
      {"CompanyGeo", {Hierarchy::kCompanyGeo}},
      {"BankGeo", {Hierarchy::kBankGeo}},
      {"Currency", {Hierarchy::kCurrency}},
  };
  return dims;
}

std::string time_member_key(Level level, const TimeRecord& day) {
  switch (level) {
    case Level::kYear: return fmt::format("{:04d}", day.year);
    case Level::kSemester: return fmt::format("{:04d}-S{}", day.year, day.semester);
    case Level::kQuarter: return fmt::format("{:04d}-Q{}", day.year, day.quarter);
    case Level::kMonth: return fmt::format("{:04d}-{:02d}", day.year, day.month);
    case Level::kDay: return day.date.iso();
    case Level::kIsoYear: return fmt::format("{:04d}", day.iso_week_year);
    case Level::kWeek: return fmt::format("{:04d}-W{:02d}", day.iso_week_year, day.iso_week_no);
    default: break;
  }
  throw Error(ErrorCode::kInvalidArgument, fmt::format("{} is not a time level", level_name(level)));
}

// ---------------------------------------------------------------------------
// Validation

namespace {

/// Time hierarchy shared by the grain and every time level on the axes.
std::optional<Hierarchy> time_hierarchy(const PivotQuery& q) {
  for (auto h : hierarchies_of(q.time_grain)) {
    bool all = true;
    for (const auto* axis : {&q.row_levels, &q.col_levels}) {
      for (Level l : *axis) {
        if (is_time_level(l) && depth_in(l, h) < 0) all = false;
      }
    }
    if (all) return h;
  }
  return std::nullopt;
}

void validate_shape(const PivotQuery& q) {
  if (!is_time_level(q.time_grain)) {
    throw malformed(fmt::format("time_grain '{}' is not a time level", level_name(q.time_grain)));
  }
  std::set<Level> seen;
  for (const auto* axis : {&q.row_levels, &q.col_levels}) {
    for (Level l : *axis) {
      if (!seen.insert(l).second) {
        throw malformed(fmt::format("level '{}' appears more than once on the axes", level_name(l)));
      }
    }
  }
  auto h = time_hierarchy(q);
  if (!h) {
    throw malformed(fmt::format("time levels on the axes do not share a hierarchy with grain '{}'",
                                level_name(q.time_grain)));
  }
  int finest = -1;
  for (Level l : seen) {
    if (is_time_level(l)) finest = std::max(finest, depth_in(l, *h));
  }
  if (finest >= 0 && finest != depth_in(q.time_grain, *h)) {
    throw malformed(fmt::format("finest time level on the axes must equal grain '{}'",
                                level_name(q.time_grain)));
  }
}

}  // namespace

void validate_query(const PivotQuery& query, const TimeTable& time) {
  validate_shape(query);
  if (query.time_range) {
    const auto& r = *query.time_range;
    if (r.first > r.last) {
      throw malformed(fmt::format("time_range {}..{} is inverted", r.first.iso(), r.last.iso()));
    }
    if (!time.contains(r.first) || !time.contains(r.last)) {
      throw malformed(fmt::format("time_range {}..{} is outside the time table", r.first.iso(),
                                  r.last.iso()));
    }
  }
}

// ---------------------------------------------------------------------------
// Results

void fill_totals(PivotResult& r) {
  struct Acc {
    Cell value;
    bool mixed = false;
    void add(const Cell& c) {
      if (!c || mixed) return;
      if (!value) {
        value = c;
      } else if (value->currency != c->currency) {
        mixed = true;
        value.reset();
      } else {
        value->amount_minor += c->amount_minor;
      }
    }
  };
  const size_t nr = r.row_headers.size();
  const size_t nc = r.col_headers.size();
  std::vector<Acc> rows(nr), cols(nc);
  Acc grand;
  for (size_t i = 0; i < nr; ++i) {
    for (size_t j = 0; j < nc; ++j) {
      rows[i].add(r.cells[i][j]);
      cols[j].add(r.cells[i][j]);
      grand.add(r.cells[i][j]);
    }
  }
  r.row_totals.clear();
  r.col_totals.clear();
  for (auto& a : rows) r.row_totals.push_back(a.value);
  for (auto& a : cols) r.col_totals.push_back(a.value);
  r.grand_total = grand.value;
}

PivotResult transpose(const PivotResult& in) {
  PivotResult out;
  out.measure = in.measure;
  out.aggregator = in.aggregator;
  out.row_levels = in.col_levels;
  out.col_levels = in.row_levels;
  out.row_headers = in.col_headers;
  out.col_headers = in.row_headers;
  out.cells.assign(in.col_headers.size(), std::vector<Cell>(in.row_headers.size()));
  for (size_t i = 0; i < in.row_headers.size(); ++i) {
    for (size_t j = 0; j < in.col_headers.size(); ++j) out.cells[j][i] = in.cells[i][j];
  }
  out.row_totals = in.col_totals;
  out.col_totals = in.row_totals;
  out.grand_total = in.grand_total;
  return out;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep, std::string_view if_empty) {
  if (parts.empty()) return std::string(if_empty);
  std::string out = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) {
    out += sep;
    out += parts[i];
  }
  return out;
}

std::string level_list(const std::vector<Level>& levels) {
  std::vector<std::string> names;
  for (Level l : levels) names.emplace_back(level_name(l));
  return join(names, "|", "");
}

std::string cell_text(const Cell& c) { return c ? format_amount_minor(c->amount_minor) : std::string(); }

std::vector<std::vector<std::string>> grid_text(const PivotResult& r) {
  std::vector<std::vector<std::string>> g;
  std::vector<std::string> head{level_list(r.row_levels) + "\\" + level_list(r.col_levels)};
  for (const auto& c : r.col_headers) head.push_back(join(c, "|", "ALL"));
  head.emplace_back("TOTAL");
  g.push_back(std::move(head));
  for (size_t i = 0; i < r.row_headers.size(); ++i) {
    std::vector<std::string> line{join(r.row_headers[i], "|", "ALL")};
    for (const auto& c : r.cells[i]) line.push_back(cell_text(c));
    line.push_back(cell_text(r.row_totals[i]));
    g.push_back(std::move(line));
  }
  std::vector<std::string> tot{"TOTAL"};
  for (const auto& c : r.col_totals) tot.push_back(cell_text(c));
  tot.push_back(cell_text(r.grand_total));
  g.push_back(std::move(tot));
  return g;
}

}  // namespace

std::string pivot_to_csv(const PivotResult& r) {
  std::string out;
  for (const auto& line : grid_text(r)) {
    for (size_t i = 0; i < line.size(); ++i) {
      if (i) out += ',';
      append_csv_field(out, line[i]);
    }
    out += '\n';
  }
  return out;
}

std::string pivot_to_table(const PivotResult& r) {
  const auto g = grid_text(r);
  std::vector<size_t> width;
  for (const auto& line : g) {
    width.resize(std::max(width.size(), line.size()));
    for (size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out = fmt::format("{} {}\n", measure_name(r.measure), aggregator_name(r.aggregator));
  for (const auto& line : g) {
    for (size_t i = 0; i < line.size(); ++i) {
      if (i == 0) {
        fmt::format_to(std::back_inserter(out), "{:<{}}", line[i], width[i]);
      } else {
        fmt::format_to(std::back_inserter(out), "  {:>{}}", line[i], width[i]);
      }
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cube build

namespace {

struct Interval {
  int32_t lo;
  int32_t hi;  // inclusive
};

void intersect(const std::vector<Interval>& a, const std::vector<Interval>& b, std::vector<Interval>& out) {
  out.clear();
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    int32_t lo = std::max(a[i].lo, b[j].lo);
    int32_t hi = std::min(a[i].hi, b[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    (a[i].hi < b[j].hi) ? ++i : ++j;
  }
}

std::vector<Interval> normalize(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](auto& x, auto& y) { return x.lo < y.lo; });
  std::vector<Interval> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

std::optional<Period> period_of(Level l) {
  switch (l) {
    case Level::kYear: return Period::kYear;
    case Level::kSemester: return Period::kSemester;
    case Level::kQuarter: return Period::kQuarter;
    case Level::kMonth: return Period::kMonth;
    case Level::kWeek: return Period::kWeek;
    default: return std::nullopt;
  }
}

size_t measure_slot(Measure m) { return static_cast<size_t>(m); }

int64_t pick(const FactAmounts& a, Measure m) {
  switch (m) {
    case Measure::kBalanceEur: return a.balance_eur;
    case Measure::kBalanceOrig: return a.balance_orig;
    case Measure::kWorkingEur: return a.working_eur;
    case Measure::kWorkingOrig: return a.working_orig;
  }
  return 0;
}

}  // namespace

std::shared_ptr<const CubeSnapshot> CubeSnapshot::build(std::shared_ptr<const WarehouseData> data) {
  const auto rows = data->facts.rows();
  auto report = validate_star(data->dimensions, data->time, rows);
  if (!report.valid()) {
    throw Error(ErrorCode::kStarInvalid, fmt::format("cannot build cube: {}", report.summary()));
  }

  std::shared_ptr<CubeSnapshot> cube(new CubeSnapshot());
  cube->data_ = data;
  const TimeTable& time = data->time;
  const size_t n_days = time.size();
  cube->n_days_ = n_days;

  for (size_t li = 0; li < kTimeLevelCount; ++li) {
    const Level level = static_cast<Level>(li);
    auto& tm = cube->time_[li];
    tm.of_day.resize(n_days);
    for (size_t d = 0; d < n_days; ++d) {
      const auto& rec = time[d];
      auto key = time_member_key(level, rec);
      if (tm.keys.empty() || tm.keys.back() != key) {
        tm.keys.push_back(std::move(key));
        tm.first.push_back(static_cast<int32_t>(d));
        tm.last.push_back(static_cast<int32_t>(d));
        tm.flagged_last.push_back(-1);
      }
      tm.last.back() = static_cast<int32_t>(d);
      tm.of_day[d] = static_cast<int32_t>(tm.keys.size() - 1);

      bool flagged = false;
      if (level == Level::kDay) {
        flagged = true;
      } else if (auto p = period_of(level)) {
        flagged = rec.is_last_day_of(*p);
      } else if (level == Level::kIsoYear) {
        // ISO years end on the Sunday closing their last week.
        flagged = rec.is_last_day_of_week && time_attributes(rec.date + 1).iso_week_no == 1;
      }
      if (flagged) tm.flagged_last.back() = static_cast<int32_t>(d);
    }
  }

  const DimensionLookup lookup(data->dimensions);
  std::vector<const AccountRecord*> accounts;
  for (const auto& a : data->dimensions.accounts) accounts.push_back(&a);
  std::sort(accounts.begin(), accounts.end(),
            [](auto* a, auto* b) { return a->account_id < b->account_id; });

  // Attribute values per non-time level, in account order.
  constexpr size_t kAttr = kLevelCount - kTimeLevelCount;
  std::vector<std::array<std::string, kAttr>> attrs;
  for (const auto* a : accounts) {
    const auto* company = lookup.company(a->company_id);
    const auto* bank = lookup.bank(a->bank_id);
    attrs.push_back({company->country_code, a->company_id, bank->country_code, a->bank_id,
                     a->currency_code.str(), a->account_id});
  }
  for (size_t k = 0; k < kAttr; ++k) {
    std::set<std::string> keys;
    for (const auto& row : attrs) keys.insert(row[k]);
    cube->attribute_keys_[k].assign(keys.begin(), keys.end());
  }
  std::unordered_map<std::string_view, size_t> account_index;
  for (size_t i = 0; i < accounts.size(); ++i) {
    AccountInfo info{accounts[i]->account_id, accounts[i]->currency_code, {}};
    for (size_t k = 0; k < kAttr; ++k) {
      const auto& keys = cube->attribute_keys_[k];
      info.member[k] = static_cast<int32_t>(std::lower_bound(keys.begin(), keys.end(), attrs[i][k]) - keys.begin());
    }
    cube->accounts_.push_back(std::move(info));
  }
  for (size_t i = 0; i < cube->accounts_.size(); ++i) account_index.emplace(cube->accounts_[i].id, i);

  const size_t n_acc = cube->accounts_.size();
  for (auto& v : cube->values_) v.assign(n_acc * n_days, 0);
  std::vector<uint8_t> present(n_acc * n_days, 0);
  for (const auto& [key, amounts] : data->facts.facts()) {
    const size_t a = account_index.at(key.account_id);
    const size_t d = *time.index_of(key.value_date);
    for (auto m : {Measure::kBalanceEur, Measure::kBalanceOrig, Measure::kWorkingEur, Measure::kWorkingOrig}) {
      cube->values_[measure_slot(m)][cube->at(a, d)] = pick(amounts, m);
    }
    present[cube->at(a, d)] = 1;
  }

  for (size_t m = 0; m < 4; ++m) cube->prefix_[m].assign(n_acc * (n_days + 1), 0);
  cube->present_prefix_.assign(n_acc * (n_days + 1), 0);
  for (size_t a = 0; a < n_acc; ++a) {
    for (size_t d = 0; d < n_days; ++d) {
      for (size_t m = 0; m < 4; ++m) {
        cube->prefix_[m][cube->prefix_at(a, d + 1)] =
            cube->prefix_[m][cube->prefix_at(a, d)] + cube->values_[m][cube->at(a, d)];
      }
      cube->present_prefix_[cube->prefix_at(a, d + 1)] =
          cube->present_prefix_[cube->prefix_at(a, d)] + present[cube->at(a, d)];
    }
  }
  return cube;
}

std::shared_ptr<const CubeSnapshot> build_cube(std::shared_ptr<const WarehouseData> data) {
  return CubeSnapshot::build(std::move(data));
}

std::vector<std::string> CubeSnapshot::members(Level level) const {
  if (is_time_level(level)) return time_members(level).keys;
  return attribute_keys(level);
}

// ---------------------------------------------------------------------------
// Cube query

PivotResult CubeSnapshot::query(const PivotQuery& q) const {
  validate_query(q, data_->time);

  PivotResult res;
  res.measure = q.measure;
  res.aggregator = q.aggregator;
  res.row_levels = q.row_levels;
  res.col_levels = q.col_levels;
  const size_t n_acc = accounts_.size();
  if (n_days_ == 0 || n_acc == 0) {
    fill_totals(res);
    return res;
  }

  // Day scope: range intersected with every time filter.
  std::vector<Interval> scope{{0, static_cast<int32_t>(n_days_) - 1}};
  if (q.time_range) {
    scope = {{static_cast<int32_t>(*data_->time.index_of(q.time_range->first)),
              static_cast<int32_t>(*data_->time.index_of(q.time_range->last))}};
  }
  std::vector<uint8_t> account_ok(n_acc, 1);
  std::vector<Interval> scratch;
  for (const auto& f : q.filters) {
    if (is_time_level(f.level)) {
      const auto& tm = time_members(f.level);
      std::vector<Interval> allowed;
      for (const auto& key : f.members) {
        auto it = std::lower_bound(tm.keys.begin(), tm.keys.end(), key);
        if (it != tm.keys.end() && *it == key) {
          auto m = static_cast<size_t>(it - tm.keys.begin());
          allowed.push_back({tm.first[m], tm.last[m]});
        }
      }
      intersect(scope, normalize(std::move(allowed)), scratch);
      scope.swap(scratch);
    } else {
      const auto& keys = attribute_keys(f.level);
      std::vector<uint8_t> member_ok(keys.size(), 0);
      for (const auto& key : f.members) {
        auto it = std::lower_bound(keys.begin(), keys.end(), key);
        if (it != keys.end() && *it == key) member_ok[static_cast<size_t>(it - keys.begin())] = 1;
      }
      for (size_t a = 0; a < n_acc; ++a) {
        if (!member_ok[static_cast<size_t>(account_member(a, f.level))]) account_ok[a] = 0;
      }
    }
  }

  auto count_facts = [&](size_t a, const std::vector<Interval>& period) {
    int64_t n = 0;
    for (const auto& iv : period) {
      n += present_prefix_[prefix_at(a, static_cast<size_t>(iv.hi) + 1)] -
           present_prefix_[prefix_at(a, static_cast<size_t>(iv.lo))];
    }
    return n;
  };

  struct Tuple {
    int group;
    int time_member;  // -1: the whole scope
    std::vector<std::string> header;
  };
  struct AxisPlan {
    std::optional<Level> time_level;
    std::vector<std::vector<size_t>> groups;
    std::vector<int> group_of;  // per account, -1 when out of scope
    std::vector<Tuple> tuples;
  };

  auto plan_axis = [&](const std::vector<Level>& levels) {
    AxisPlan plan;
    std::vector<Level> attr_levels;
    for (Level l : levels) {
      if (!is_time_level(l)) {
        attr_levels.push_back(l);
      } else if (!plan.time_level || depth_in(l, Hierarchy::kCalendar) > depth_in(*plan.time_level, Hierarchy::kCalendar) ||
                 depth_in(l, Hierarchy::kIsoWeek) > depth_in(*plan.time_level, Hierarchy::kIsoWeek)) {
        plan.time_level = l;
      }
    }
    plan.group_of.assign(n_acc, -1);
    std::map<std::vector<int32_t>, int> group_ids;
    for (size_t a = 0; a < n_acc; ++a) {
      if (!account_ok[a]) continue;
      std::vector<int32_t> key;
      for (Level l : attr_levels) key.push_back(account_member(a, l));
      auto [it, inserted] = group_ids.try_emplace(std::move(key), static_cast<int>(plan.groups.size()));
      if (inserted) plan.groups.emplace_back();
      plan.groups[static_cast<size_t>(it->second)].push_back(a);
      plan.group_of[a] = it->second;
    }

    std::vector<int> time_ids{-1};
    if (plan.time_level) {
      time_ids.clear();
      const auto& tm = time_members(*plan.time_level);
      if (!scope.empty()) {
        for (int32_t m = tm.of_day[static_cast<size_t>(scope.front().lo)];
             m <= tm.of_day[static_cast<size_t>(scope.back().hi)]; ++m) {
          time_ids.push_back(m);
        }
      }
    }

    std::vector<Interval> span_scope;
    for (size_t g = 0; g < plan.groups.size(); ++g) {
      for (int t : time_ids) {
        if (t < 0) {
          span_scope = scope;
        } else {
          const auto& tm = time_members(*plan.time_level);
          intersect(scope, {{tm.first[static_cast<size_t>(t)], tm.last[static_cast<size_t>(t)]}}, span_scope);
        }
        bool any = false;
        for (size_t a : plan.groups[g]) {
          if (count_facts(a, span_scope) > 0) {
            any = true;
            break;
          }
        }
        if (!any) continue;
        Tuple tuple{static_cast<int>(g), t, {}};
        const size_t rep = plan.groups[g].front();
        for (Level l : levels) {
          if (is_time_level(l)) {
            const auto& tm = time_members(*plan.time_level);
            const auto day = static_cast<size_t>(tm.first[static_cast<size_t>(t)]);
            tuple.header.push_back(time_members(l).keys[static_cast<size_t>(time_members(l).of_day[day])]);
          } else {
            tuple.header.push_back(attribute_keys(l)[static_cast<size_t>(account_member(rep, l))]);
          }
        }
        plan.tuples.push_back(std::move(tuple));
      }
    }
    std::sort(plan.tuples.begin(), plan.tuples.end(),
              [](const Tuple& a, const Tuple& b) { return a.header < b.header; });
    return plan;
  };

  const AxisPlan rows = plan_axis(q.row_levels);
  const AxisPlan cols = plan_axis(q.col_levels);
  for (const auto& t : rows.tuples) res.row_headers.push_back(t.header);
  for (const auto& t : cols.tuples) res.col_headers.push_back(t.header);

  const size_t slot = measure_slot(q.measure);
  const auto& values = values_[slot];
  const auto& prefix = prefix_[slot];
  std::vector<Interval> period, tmp;

  auto member_span = [&](const AxisPlan& plan, int t) -> std::optional<Interval> {
    if (t < 0) return std::nullopt;
    const auto& tm = time_members(*plan.time_level);
    return Interval{tm.first[static_cast<size_t>(t)], tm.last[static_cast<size_t>(t)]};
  };

  res.cells.assign(rows.tuples.size(), std::vector<Cell>(cols.tuples.size()));
  for (size_t i = 0; i < rows.tuples.size(); ++i) {
    const auto& rt = rows.tuples[i];
    for (size_t j = 0; j < cols.tuples.size(); ++j) {
      const auto& ct = cols.tuples[j];

      period = scope;
      for (auto span : {member_span(rows, rt.time_member), member_span(cols, ct.time_member)}) {
        if (!span) continue;
        intersect(period, {*span}, tmp);
        period.swap(tmp);
      }
      if (period.empty()) continue;

      const auto& row_group = rows.groups[static_cast<size_t>(rt.group)];
      const auto& col_group = cols.groups[static_cast<size_t>(ct.group)];
      const bool iterate_rows = row_group.size() <= col_group.size();
      const auto& small = iterate_rows ? row_group : col_group;
      const auto& other_of = iterate_rows ? cols.group_of : rows.group_of;
      const int other_id = iterate_rows ? ct.group : rt.group;

      // Closing day: the period-end flag of the finest time member when it is
      // in scope, else the last day in scope.
      int32_t closing = period.back().hi;
      if (q.aggregator == TimeAggregator::kSumClosing) {
        const AxisPlan* fine = nullptr;
        int fine_member = -1;
        for (auto [plan, t] : {std::pair{&rows, rt.time_member}, std::pair{&cols, ct.time_member}}) {
          if (t >= 0 && *plan->time_level == q.time_grain) {
            fine = plan;
            fine_member = t;
          }
        }
        if (fine) {
          int32_t flagged = time_members(*fine->time_level).flagged_last[static_cast<size_t>(fine_member)];
          bool in_period = std::any_of(period.begin(), period.end(), [&](const Interval& iv) {
            return flagged >= iv.lo && flagged <= iv.hi;
          });
          if (flagged >= 0 && in_period) closing = flagged;
        }
      }

      int64_t facts = 0;
      Int128 sum = 0;
      std::optional<CurrencyCode> currency;
      for (size_t a : small) {
        if (other_of[a] != other_id) continue;
        const int64_t n = count_facts(a, period);
        if (n == 0) continue;
        facts += n;
        if (!is_eur_measure(q.measure)) {
          if (currency && *currency != accounts_[a].currency) {
            throw Error(ErrorCode::kMixedCurrency,
                        fmt::format("{} cell mixes {} and {}", measure_name(q.measure),
                                    currency->str(), accounts_[a].currency.str()));
          }
          currency = accounts_[a].currency;
        }
        if (q.aggregator == TimeAggregator::kSumClosing) {
          const auto d = static_cast<size_t>(closing);
          if (present_prefix_[prefix_at(a, d + 1)] - present_prefix_[prefix_at(a, d)] > 0) {
            sum += values[at(a, d)];
          }
        } else {
          for (const auto& iv : period) {
            sum += prefix[prefix_at(a, static_cast<size_t>(iv.hi) + 1)] -
                   prefix[prefix_at(a, static_cast<size_t>(iv.lo))];
          }
        }
      }
      if (facts == 0) continue;

      int64_t value = 0;
      if (q.aggregator == TimeAggregator::kSumClosing) {
        value = static_cast<int64_t>(sum);
      } else {
        int64_t days = 0;
        for (const auto& iv : period) days += iv.hi - iv.lo + 1;
        value = div_round_half_even(sum, days);
      }
      res.cells[i][j] = MoneyMinor{value, currency.value_or(kEur)};
    }
  }
  fill_totals(res);
  return res;
}

// ---------------------------------------------------------------------------
// Reference evaluator

PivotResult reference_evaluator(std::span<const FactAccountBalance> facts, const Dimensions& dims,
                                const TimeTable& time, const PivotQuery& q) {
  validate_query(q, time);

  PivotResult res;
  res.measure = q.measure;
  res.aggregator = q.aggregator;
  res.row_levels = q.row_levels;
  res.col_levels = q.col_levels;
  if (time.empty()) {
    fill_totals(res);
    return res;
  }
  const Date lo = q.time_range ? q.time_range->first : time.first_date();
  const Date hi = q.time_range ? q.time_range->last : time.last_date();
  const DimensionLookup lookup(dims);

  auto attribute = [&](Level l, const AccountRecord& a) -> std::string {
    switch (l) {
      case Level::kAccount: return a.account_id;
      case Level::kCompany: return a.company_id;
      case Level::kBank: return a.bank_id;
      case Level::kCurrency: return a.currency_code.str();
      case Level::kCompanyCountry: return lookup.company(a.company_id)->country_code;
      case Level::kBankCountry: return lookup.bank(a.bank_id)->country_code;
      default: return {};
    }
  };
  auto member = [&](Level l, const AccountRecord* a, const TimeRecord& day) {
    return is_time_level(l) ? time_member_key(l, day) : attribute(l, *a);
  };
  auto passes = [&](const AccountRecord* a, const TimeRecord& day, bool time_only) {
    if (day.date < lo || day.date > hi) return false;
    for (const auto& f : q.filters) {
      if (time_only && !is_time_level(f.level)) continue;
      const auto key = member(f.level, a, day);
      if (std::find(f.members.begin(), f.members.end(), key) == f.members.end()) return false;
    }
    return true;
  };

  struct Row {
    const FactAccountBalance* fact;
    const AccountRecord* account;
    std::vector<std::string> row_key, col_key;
    size_t row = 0, col = 0;
  };
  std::vector<Row> scoped;
  std::set<std::vector<std::string>> row_keys, col_keys;
  for (const auto& f : facts) {
    const AccountRecord* a = lookup.account(f.account_id);
    if (!a) continue;
    const TimeRecord day = time_attributes(f.value_date);
    if (!passes(a, day, false)) continue;
    Row r{&f, a, {}, {}};
    for (Level l : q.row_levels) r.row_key.push_back(member(l, a, day));
    for (Level l : q.col_levels) r.col_key.push_back(member(l, a, day));
    row_keys.insert(r.row_key);
    col_keys.insert(r.col_key);
    scoped.push_back(std::move(r));
  }
  res.row_headers.assign(row_keys.begin(), row_keys.end());
  res.col_headers.assign(col_keys.begin(), col_keys.end());
  for (auto& r : scoped) {
    r.row = static_cast<size_t>(std::lower_bound(res.row_headers.begin(), res.row_headers.end(), r.row_key) - res.row_headers.begin());
    r.col = static_cast<size_t>(std::lower_bound(res.col_headers.begin(), res.col_headers.end(), r.col_key) - res.col_headers.begin());
  }

  auto value_of = [&](const FactAccountBalance& f) {
    switch (q.measure) {
      case Measure::kBalanceEur: return f.balance_eur;
      case Measure::kBalanceOrig: return f.balance_orig;
      case Measure::kWorkingEur: return f.working_eur;
      case Measure::kWorkingOrig: return f.working_orig;
    }
    return int64_t{0};
  };
  auto time_matches = [&](const TimeRecord& day, const std::vector<Level>& levels,
                          const std::vector<std::string>& key) {
    for (size_t k = 0; k < levels.size(); ++k) {
      if (is_time_level(levels[k]) && time_member_key(levels[k], day) != key[k]) return false;
    }
    return true;
  };

  res.cells.assign(res.row_headers.size(), std::vector<Cell>(res.col_headers.size()));
  for (size_t i = 0; i < res.row_headers.size(); ++i) {
    for (size_t j = 0; j < res.col_headers.size(); ++j) {
      std::vector<const Row*> in_cell;
      for (const auto& r : scoped) {
        if (r.row == i && r.col == j) in_cell.push_back(&r);
      }
      if (in_cell.empty()) continue;

      int64_t period_days = 0;
      Date closing;
      for (const auto& day : time.records()) {
        if (!passes(nullptr, day, true)) continue;
        if (!time_matches(day, q.row_levels, res.row_headers[i])) continue;
        if (!time_matches(day, q.col_levels, res.col_headers[j])) continue;
        ++period_days;
        closing = day.date;
      }

      std::optional<CurrencyCode> currency;
      if (!is_eur_measure(q.measure)) {
        for (const Row* r : in_cell) {
          if (currency && *currency != r->account->currency_code) {
            throw Error(ErrorCode::kMixedCurrency,
                        fmt::format("{} cell mixes {} and {}", measure_name(q.measure),
                                    currency->str(), r->account->currency_code.str()));
          }
          currency = r->account->currency_code;
        }
      }

      Int128 sum = 0;
      for (const Row* r : in_cell) {
        if (q.aggregator == TimeAggregator::kAverage || r->fact->value_date == closing) {
          sum += value_of(*r->fact);
        }
      }
      const int64_t value = q.aggregator == TimeAggregator::kSumClosing
                                ? static_cast<int64_t>(sum)
                                : div_round_half_even(sum, period_days);
      res.cells[i][j] = MoneyMinor{value, currency.value_or(kEur)};
    }
  }
  fill_totals(res);
  return res;
}

// ---------------------------------------------------------------------------
// Transforms

TransformOp TransformOp::rollup(Axis axis, std::optional<Hierarchy> via) {
  TransformOp op;
  op.kind = Kind::kRollup;
  op.axis = axis;
  op.hierarchy = via;
  return op;
}

TransformOp TransformOp::drilldown(Axis axis) {
  TransformOp op;
  op.kind = Kind::kDrilldown;
  op.axis = axis;
  return op;
}

TransformOp TransformOp::slice(Level level, std::string member) {
  TransformOp op;
  op.kind = Kind::kSlice;
  op.level = level;
  op.members = {std::move(member)};
  return op;
}

TransformOp TransformOp::dice(Level level, std::vector<std::string> members) {
  TransformOp op;
  op.kind = Kind::kDice;
  op.level = level;
  op.members = std::move(members);
  return op;
}

TransformOp TransformOp::pivot_swap() { return TransformOp{}; }

namespace {

Error inapplicable(const std::string& message) { return Error(ErrorCode::kInapplicableOp, message); }

/// Hierarchy used to find the parent of `level`, from the explicit hint or
/// from the levels it is shown with.
Hierarchy rollup_hierarchy(Level level, const std::vector<Level>& context, std::optional<Hierarchy> hint) {
  const auto candidates = hierarchies_of(level);
  if (hint) {
    if (std::find(candidates.begin(), candidates.end(), *hint) == candidates.end()) {
      throw inapplicable(fmt::format("level '{}' is not in hierarchy '{}'", level_name(level),
                                     hierarchy_name(*hint)));
    }
    return *hint;
  }
  for (auto h : candidates) {
    for (Level other : context) {
      if (other != level && depth_in(other, h) >= 0) return h;
    }
  }
  return candidates.front();
}

Level finest_time_level(const PivotQuery& q, Level fallback) {
  std::optional<Level> finest;
  for (const auto* axis : {&q.row_levels, &q.col_levels}) {
    for (Level l : *axis) {
      if (!is_time_level(l)) continue;
      if (!finest) {
        finest = l;
        continue;
      }
      for (auto h : {Hierarchy::kCalendar, Hierarchy::kIsoWeek}) {
        if (depth_in(l, h) >= 0 && depth_in(*finest, h) >= 0 && depth_in(l, h) > depth_in(*finest, h)) {
          finest = l;
        }
      }
    }
  }
  return finest.value_or(fallback);
}

}  // namespace

PivotQuery transform_query(const PivotQuery& query, const TransformOp& op) {
  using Kind = TransformOp::Kind;
  PivotQuery out = query;
  switch (op.kind) {
    case Kind::kPivotSwap:
      std::swap(out.row_levels, out.col_levels);
      return out;
    case Kind::kSlice:
    case Kind::kDice:
      out.filters.push_back({op.level, op.members});
      return out;
    case Kind::kRollup:
    case Kind::kDrilldown:
      break;
  }

  const bool up = op.kind == Kind::kRollup;
  std::vector<Level> context = out.row_levels;
  context.insert(context.end(), out.col_levels.begin(), out.col_levels.end());

  auto step = [&](Level from, const std::vector<Level>& ctx) -> Level {
    std::optional<Level> to =
        up ? parent_level(from, rollup_hierarchy(from, ctx, op.hierarchy)) : child_level(from);
    if (!to) {
      throw inapplicable(fmt::format("'{}' is already at the {} of its hierarchy", level_name(from),
                                     up ? "root" : "leaf"));
    }
    return *to;
  };

  if (op.axis == Axis::kTime) {
    const Level from = out.time_grain;
    const Level to = step(from, context);
    for (auto* axis : {&out.row_levels, &out.col_levels}) {
      for (auto it = axis->begin(); it != axis->end(); ++it) {
        if (*it != from) continue;
        if (std::find(axis->begin(), axis->end(), to) != axis->end()) {
          axis->erase(it);
        } else {
          *it = to;
        }
        break;
      }
    }
    out.time_grain = to;
    out.time_grain = finest_time_level(out, to);
  } else {
    auto& axis = op.axis == Axis::kRows ? out.row_levels : out.col_levels;
    if (axis.empty()) throw inapplicable("axis has no level to navigate");
    const Level from = axis.back();
    const Level to = step(from, context);
    if (up && std::find(axis.begin(), axis.end(), to) != axis.end()) {
      axis.pop_back();
    } else {
      axis.back() = to;
    }
    if (is_time_level(from)) out.time_grain = finest_time_level(out, is_time_level(to) ? to : out.time_grain);
  }

  try {
    validate_shape(out);
  } catch (const Error& e) {
    throw inapplicable(e.what());
  }
  return out;
}

}  // namespace tdw
