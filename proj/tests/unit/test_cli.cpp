#include <doctest.h>

#include <sstream>

#include "tdw/cli.hpp"
#include "test_support.hpp"

using namespace tdw;
using namespace tdw::testing;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "tdw");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("timegen builds and extends") {
  TempDir tmp("cli_time");
  const auto file = (tmp.path() / "time_table.csv").string();
  auto r = run({"timegen", "--first", "2009", "--last", "2016", "--out", file});
  CHECK(r.code == 0);
  CHECK(load_time_table(file).size() == 2922);

  const auto extended = (tmp.path() / "extended.csv").string();
  r = run({"timegen", "--extend", file, "--to", "2017", "--out", extended});
  CHECK(r.code == 0);
  CHECK(load_time_table(extended).size() == 2922 + 365);

  CHECK(run({"timegen", "--first", "2009"}).code != 0);
  CHECK(run({"timegen"}).code != 0);
  CHECK(run({"timegen", "--first", "2016", "--last", "2009", "--out", file}).code != 0);
}

TEST_CASE("etl reports and fails on missing inputs") {
  TempDir tmp("cli_etl");
  const auto data = copy_fixture(tmp);
  auto r = run({"etl", "--config", (data / "etl.conf").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find(expected()["facts_sha256"].get<std::string>()) != std::string::npos);

  fs::remove(data / "movements.csv");
  r = run({"etl", "--config", (data / "etl.conf").string()});
  CHECK(r.code != 0);
  CHECK(r.err.find("movements.csv") != std::string::npos);
}

TEST_CASE("query output") {
  TempDir tmp("cli_query");
  const auto data = copy_fixture(tmp);
  const auto conf = (data / "etl.conf").string();
  REQUIRE(run({"etl", "--config", conf}).code == 0);

  auto r = run({"query", "--config", conf, "--rows", "bank", "--measure", "balance_eur", "--agg", "SUM_CLOSING",
                "--format", "csv"});
  CHECK(r.code == 0);
  const auto entry = expected()["queries"][2];
  CHECK(entry["query"]["name"] == "closing_eur_by_bank");
  const auto cube = build_cube(load_warehouse(EtlConfig::load(conf)));
  CHECK(r.out == pivot_to_csv(cube->query(expected_query(entry))));

  r = run({"query", "--config", conf, "--rows", "account", "--cols", "month", "--measure", "average_balance_eur"});
  CHECK(r.code == 0);
  CHECK(r.out.find("balance_eur AVERAGE") == 0);

  r = run({"query", "--config", conf, "--rows", "acount", "--measure", "balance_eur", "--agg", "AVERAGE"});
  CHECK(r.code != 0);
  CHECK(r.err.find("acount") != std::string::npos);
  CHECK(r.err.find("--help") != std::string::npos);

  r = run({"query", "--config", conf, "--rows", "country", "--filter", "bank"});
  CHECK(r.code != 0);

  r = run({"query", "--config", conf, "--rows", "account", "--measure", "balance_eur", "--agg", "SUM_CLOSING",
           "--filter", "bank=B1|B2", "--filter", "currency=EUR", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out.find("A2") == std::string::npos);
  CHECK(r.out.find("A3") != std::string::npos);

  r = run({"query", "--config", conf, "--rows", "company", "--measure", "balance_orig", "--agg", "SUM_CLOSING"});
  CHECK(r.code != 0);
  CHECK(r.err.find("MIXED_CURRENCY") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run({"frobnicate"}).code != 0);
  CHECK(run({}).code != 0);
  CHECK(run({"query", "--format", "xml"}).code != 0);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("bench subcommand") {
  TempDir tmp("cli_bench");
  const auto params = tmp.path() / "params.conf";
  {
    std::ofstream out(params);
    out << "seed = 4\nn_accounts = 3\nn_companies = 2\nn_banks = 2\nfirst_year = 2015\nlast_year = 2015\n"
           "movements_per_account_day = 1\n";
  }
  const auto out_dir = tmp.path() / "out";
  auto r = run({"bench", "--config", params.string(), "--out-dir", out_dir.string(), "--locale", "dot"});
  CHECK(r.code == 0);
  CHECK(fs::exists(out_dir / "bench_report.txt"));
  CHECK(fs::exists(out_dir / "bench_report.csv"));
  CHECK(r.out.find("seed: 4") != std::string::npos);
}
