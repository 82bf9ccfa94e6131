#pragma once

#include <json.hpp>

#include "tdw/cube.hpp"
#include "tdw/etl.hpp"

namespace tdw {

/// Request body of a pivot call:
///   {"measure": "balance_eur", "aggregator": "SUM_CLOSING",
///    "rows": ["bank"], "cols": ["month"], "grain": "month",
///    "from": "2015-12-01", "to": "2016-01-31",
///    "filters": [{"level": "bank", "members": ["B1"]}]}
/// "average_balance_eur" implies AVERAGE over balance_eur. The grain
/// defaults to the finest time level on the axes, else day. Throws
/// Error(kMalformedQuery) naming the offending field.
PivotQuery query_from_json(const nlohmann::json& body);
nlohmann::json query_to_json(const PivotQuery& query);

/// Amounts are {"amount_minor": <int>, "currency": "EUR"}; empty cells null.
nlohmann::json result_to_json(const PivotResult& result);
PivotResult result_from_json(const nlohmann::json& body);

nlohmann::json etl_report_to_json(const EtlReport& report);

/// Dimensions with hierarchies and levels, members per level, measures and
/// aggregators.
nlohmann::json metadata_to_json(const CubeSnapshot& cube);

}  // namespace tdw
