#include "tdw/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>

#include "tdw/bench.hpp"
#include "tdw/error.hpp"
#include "tdw/json_codec.hpp"
#include "tdw/service.hpp"

namespace tdw {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

struct QueryFlags {
  std::string config = "etl.conf";
  std::string rows, cols;
  std::string measure = "balance_eur";
  std::string agg;
  std::string from, to, grain;
  std::vector<std::string> filters;
  std::string format = "table";
};

PivotQuery query_from_flags(const QueryFlags& f) {
  nlohmann::json body{{"measure", f.measure}, {"rows", split(f.rows, ',')}, {"cols", split(f.cols, ',')}};
  if (!f.agg.empty()) body["aggregator"] = f.agg;
  if (!f.grain.empty()) body["grain"] = f.grain;
  if (!f.from.empty()) body["from"] = f.from;
  if (!f.to.empty()) body["to"] = f.to;
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& spec : f.filters) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kMalformedQuery, fmt::format("--filter '{}': expected level=member|member", spec));
    }
    filters.push_back({{"level", spec.substr(0, eq)}, {"members", split(spec.substr(eq + 1), '|')}});
  }
  body["filters"] = std::move(filters);
  return query_from_json(body);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Treasury data warehouse: time table, ETL, pivot queries, benchmark and service", "tdw"};
  app.require_subcommand(1);

  // timegen
  auto* timegen = app.add_subcommand("timegen", "Build or extend the time table");
  int first_year = 0, last_year = 0, to_year = 0;
  std::string extend_path, timegen_out = "time_table.csv";
  auto* first_opt = timegen->add_option("--first", first_year, "First year of a new table");
  auto* last_opt = timegen->add_option("--last", last_year, "Last year of a new table");
  auto* extend_opt = timegen->add_option("--extend", extend_path, "Existing table to extend");
  auto* to_opt = timegen->add_option("--to", to_year, "Extend through this year");
  timegen->add_option("--out", timegen_out, "Output file")->capture_default_str();
  first_opt->needs(last_opt);
  last_opt->needs(first_opt);
  extend_opt->needs(to_opt);
  to_opt->needs(extend_opt);
  extend_opt->excludes(first_opt);

  // etl
  auto* etl = app.add_subcommand("etl", "Run the ETL pipeline");
  std::string etl_config;
  etl->add_option("--config", etl_config, "Pipeline configuration (key = value)")->required();

  // query
  auto* query = app.add_subcommand("query", "Answer one pivot query from the committed store");
  QueryFlags qf;
  query->add_option("--config", qf.config, "Pipeline configuration naming the store")->capture_default_str();
  query->add_option("--rows", qf.rows, "Comma-separated row levels");
  query->add_option("--cols", qf.cols, "Comma-separated column levels");
  query->add_option("--measure", qf.measure, "balance_eur, balance_orig, working_eur, working_orig or average_balance_eur")
      ->capture_default_str();
  query->add_option("--agg", qf.agg, "SUM_CLOSING or AVERAGE");
  query->add_option("--from", qf.from, "First day of the range (YYYY-MM-DD)");
  query->add_option("--to", qf.to, "Last day of the range (YYYY-MM-DD)");
  query->add_option("--grain", qf.grain, "Time grain level");
  query->add_option("--filter", qf.filters, "level=member|member (repeatable)");
  query->add_option("--format", qf.format, "table or csv")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  // bench
  auto* bench = app.add_subcommand("bench", "Generate a dataset and time both modalities");
  std::string bench_config, bench_out = "bench_out", locale = "comma";
  bench->add_option("--config", bench_config, "Generator parameters (key = value)");
  bench->add_option("--out-dir", bench_out, "Output directory")->capture_default_str();
  bench->add_option("--locale", locale, "Decimal separator in the text report")
      ->check(CLI::IsMember({"comma", "dot"}))
      ->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP/JSON query service");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service configuration (key = value)")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (timegen->parsed()) {
      TimeTable table;
      if (!extend_path.empty()) {
        table = extend_time_table(load_time_table(extend_path), to_year);
      } else if (*first_opt) {
        table = build_time_table(first_year, last_year);
      } else {
        err << "timegen: give --first/--last or --extend/--to\n";
        return 2;
      }
      save_time_table(timegen_out, table);
      out << fmt::format("wrote {} days to {}\n", table.size(), timegen_out);
    } else if (etl->parsed()) {
      const auto outcome = run_etl(EtlConfig::load(etl_config));
      out << etl_report_to_json(outcome.report).dump(2) << '\n';
    } else if (query->parsed()) {
      PivotQuery q;
      try {
        q = query_from_flags(qf);
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n" << "run 'tdw query --help' for usage\n";
        return 2;
      }
      const auto cube = build_cube(load_warehouse(EtlConfig::load(qf.config)));
      const auto result = cube->query(q);
      out << (qf.format == "csv" ? pivot_to_csv(result) : pivot_to_table(result));
    } else if (bench->parsed()) {
      const auto params = bench_config.empty() ? GeneratorParams::performance() : GeneratorParams::load(bench_config);
      const auto outcome =
          run_bench(params, bench_out, locale == "dot" ? DecimalLocale::kDot : DecimalLocale::kComma);
      out << render_report(outcome.scenarios, locale == "dot" ? DecimalLocale::kDot : DecimalLocale::kComma,
                           params.seed)
                 .text;
    } else if (serve->parsed()) {
      const auto config = ServiceConfig::load(serve_config);
      auto service = QueryService::open(config);
      HttpServer server(*service);
      const int port = server.bind(config.port);
      out << fmt::format("listening on {}:{}\n", config.host, port) << std::flush;
      server.listen();
    }
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace tdw
