#include "tdw/json_codec.hpp"

#include <fmt/format.h>

#include <set>

#include "tdw/error.hpp"

namespace tdw {

using nlohmann::json;

namespace {

Error bad_field(std::string_view field, std::string_view problem) {
  return Error(ErrorCode::kMalformedQuery, fmt::format("{}: {}", field, problem));
}

const json* member(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string string_field(const json& v, std::string_view field) {
  if (!v.is_string()) throw bad_field(field, "expected a string");
  return v.get<std::string>();
}

Level level_field(const json& v, const std::string& field) {
  const auto name = string_field(v, field);
  auto level = level_from_name(name);
  if (!level) throw bad_field(field, fmt::format("unknown level '{}'", name));
  return *level;
}

std::vector<Level> levels_field(const json& body, std::string_view key) {
  std::vector<Level> out;
  const json* v = member(body, key);
  if (!v) return out;
  if (!v->is_array()) throw bad_field(key, "expected an array of level names");
  for (size_t i = 0; i < v->size(); ++i) out.push_back(level_field((*v)[i], fmt::format("{}[{}]", key, i)));
  return out;
}

Date date_field(const json& v, std::string_view field) {
  Date d;
  if (!Date::try_parse(string_field(v, field), d)) throw bad_field(field, "expected a YYYY-MM-DD date");
  return d;
}

json cell_to_json(const Cell& c) {
  if (!c) return nullptr;
  return json{{"amount_minor", c->amount_minor}, {"currency", c->currency.str()}};
}

Cell cell_from_json(const json& v) {
  if (v.is_null()) return std::nullopt;
  return MoneyMinor{v.at("amount_minor").get<int64_t>(), CurrencyCode(v.at("currency").get<std::string>())};
}

json level_names(const std::vector<Level>& levels) {
  json out = json::array();
  for (Level l : levels) out.push_back(level_name(l));
  return out;
}

std::vector<Level> levels_from_names(const json& v) {
  std::vector<Level> out;
  for (const auto& name : v) {
    auto l = level_from_name(name.get<std::string>());
    if (!l) throw Error(ErrorCode::kParse, "unknown level " + name.get<std::string>());
    out.push_back(*l);
  }
  return out;
}

}  // namespace

PivotQuery query_from_json(const json& body) {
  if (!body.is_object()) throw bad_field("body", "expected a JSON object");
  static const std::set<std::string> known = {"measure", "aggregator", "rows", "cols", "grain",
                                              "from",    "to",         "filters", "name"};
  for (const auto& [key, _] : body.items()) {
    if (!known.count(key)) throw bad_field(key, "unknown field");
  }

  PivotQuery q;
  const json* measure = member(body, "measure");
  if (!measure) throw bad_field("measure", "required");
  const auto measure_text = string_field(*measure, "measure");
  const json* aggregator = member(body, "aggregator");
  if (measure_text == kAverageBalanceEur) {
    q.measure = Measure::kBalanceEur;
    q.aggregator = TimeAggregator::kAverage;
    if (aggregator && string_field(*aggregator, "aggregator") != "AVERAGE") {
      throw bad_field("aggregator", "average_balance_eur is always AVERAGE");
    }
  } else {
    auto m = measure_from_name(measure_text);
    if (!m) throw bad_field("measure", fmt::format("unknown measure '{}'", measure_text));
    q.measure = *m;
    if (!aggregator) throw bad_field("aggregator", "required");
    const auto agg_text = string_field(*aggregator, "aggregator");
    auto a = aggregator_from_name(agg_text);
    if (!a) throw bad_field("aggregator", fmt::format("unknown aggregator '{}'", agg_text));
    q.aggregator = *a;
  }

  q.row_levels = levels_field(body, "rows");
  q.col_levels = levels_field(body, "cols");

  if (const json* grain = member(body, "grain")) {
    q.time_grain = level_field(*grain, "grain");
  } else {
    std::optional<Level> finest;
    for (const auto* axis : {&q.row_levels, &q.col_levels}) {
      for (Level l : *axis) {
        if (!is_time_level(l)) continue;
        if (!finest || l == Level::kDay || (l > *finest && *finest != Level::kDay)) finest = l;
      }
    }
    q.time_grain = finest.value_or(Level::kDay);
  }

  const json* from = member(body, "from");
  const json* to = member(body, "to");
  if (static_cast<bool>(from) != static_cast<bool>(to)) {
    throw bad_field(from ? "to" : "from", "'from' and 'to' must be given together");
  }
  if (from) q.time_range = DateRange{date_field(*from, "from"), date_field(*to, "to")};

  if (const json* filters = member(body, "filters")) {
    if (!filters->is_array()) throw bad_field("filters", "expected an array");
    for (size_t i = 0; i < filters->size(); ++i) {
      const auto& f = (*filters)[i];
      const auto field = fmt::format("filters[{}]", i);
      if (!f.is_object()) throw bad_field(field, "expected an object");
      const json* level = member(f, "level");
      const json* members = member(f, "members");
      if (!level) throw bad_field(field + ".level", "required");
      if (!members || !members->is_array()) throw bad_field(field + ".members", "expected an array");
      LevelFilter lf{level_field(*level, field + ".level"), {}};
      for (size_t k = 0; k < members->size(); ++k) {
        lf.members.push_back(string_field((*members)[k], fmt::format("{}.members[{}]", field, k)));
      }
      q.filters.push_back(std::move(lf));
    }
  }
  return q;
}

json query_to_json(const PivotQuery& q) {
  json out{{"measure", measure_name(q.measure)},
           {"aggregator", aggregator_name(q.aggregator)},
           {"rows", level_names(q.row_levels)},
           {"cols", level_names(q.col_levels)},
           {"grain", level_name(q.time_grain)}};
  if (q.time_range) {
    out["from"] = q.time_range->first.iso();
    out["to"] = q.time_range->last.iso();
  }
  json filters = json::array();
  for (const auto& f : q.filters) filters.push_back({{"level", level_name(f.level)}, {"members", f.members}});
  out["filters"] = std::move(filters);
  return out;
}

json result_to_json(const PivotResult& r) {
  json cells = json::array();
  for (const auto& row : r.cells) {
    json line = json::array();
    for (const auto& c : row) line.push_back(cell_to_json(c));
    cells.push_back(std::move(line));
  }
  json row_totals = json::array(), col_totals = json::array();
  for (const auto& c : r.row_totals) row_totals.push_back(cell_to_json(c));
  for (const auto& c : r.col_totals) col_totals.push_back(cell_to_json(c));
  return json{{"measure", measure_name(r.measure)},
              {"aggregator", aggregator_name(r.aggregator)},
              {"rows", level_names(r.row_levels)},
              {"cols", level_names(r.col_levels)},
              {"row_headers", r.row_headers},
              {"col_headers", r.col_headers},
              {"cells", std::move(cells)},
              {"row_totals", std::move(row_totals)},
              {"col_totals", std::move(col_totals)},
              {"grand_total", cell_to_json(r.grand_total)}};
}

PivotResult result_from_json(const json& body) {
  try {
    PivotResult r;
    auto m = measure_from_name(body.at("measure").get<std::string>());
    auto a = aggregator_from_name(body.at("aggregator").get<std::string>());
    if (!m || !a) throw Error(ErrorCode::kParse, "bad measure or aggregator");
    r.measure = *m;
    r.aggregator = *a;
    r.row_levels = levels_from_names(body.at("rows"));
    r.col_levels = levels_from_names(body.at("cols"));
    r.row_headers = body.at("row_headers").get<std::vector<std::vector<std::string>>>();
    r.col_headers = body.at("col_headers").get<std::vector<std::vector<std::string>>>();
    for (const auto& row : body.at("cells")) {
      std::vector<Cell> line;
      for (const auto& c : row) line.push_back(cell_from_json(c));
      r.cells.push_back(std::move(line));
    }
    for (const auto& c : body.at("row_totals")) r.row_totals.push_back(cell_from_json(c));
    for (const auto& c : body.at("col_totals")) r.col_totals.push_back(cell_from_json(c));
    r.grand_total = cell_from_json(body.at("grand_total"));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("pivot result: {}", e.what()));
  }
}

json etl_report_to_json(const EtlReport& report) {
  json by_reason = json::object();
  for (const auto& [reason, n] : report.rejects_by_reason) by_reason[std::string(reject_reason_name(reason))] = n;
  return json{{"rows_read", report.rows_read},
              {"rows_rejected", report.rows_rejected},
              {"rejects_by_reason", std::move(by_reason)},
              {"balances_computed", report.balances_computed},
              {"facts_presented", report.facts_presented},
              {"facts_inserted", report.facts_inserted},
              {"facts_updated", report.facts_updated},
              {"facts_unchanged", report.facts_unchanged},
              {"store_digest", report.store_digest}};
}

json metadata_to_json(const CubeSnapshot& cube) {
  json dims = json::array();
  for (const auto& d : cube_dimensions()) {
    json hierarchies = json::array();
    for (auto h : d.hierarchies) {
      json levels = json::array();
      for (Level l : hierarchy_levels(h)) levels.push_back(level_name(l));
      hierarchies.push_back({{"name", hierarchy_name(h)}, {"levels", std::move(levels)}});
    }
    dims.push_back({{"name", d.name}, {"hierarchies", std::move(hierarchies)}});
  }
  json members = json::object();
  for (size_t i = 0; i < kLevelCount; ++i) {
    const Level l = static_cast<Level>(i);
    members[std::string(level_name(l))] = cube.members(l);
  }
  json measures = json::array();
  for (auto m : {Measure::kBalanceEur, Measure::kBalanceOrig, Measure::kWorkingEur, Measure::kWorkingOrig}) {
    measures.push_back(measure_name(m));
  }
  measures.push_back(kAverageBalanceEur);
  return json{{"dimensions", std::move(dims)},
              {"members", std::move(members)},
              {"measures", std::move(measures)},
              {"aggregators", {"SUM_CLOSING", "AVERAGE"}}};
}

}  // namespace tdw
