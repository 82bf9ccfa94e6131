#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fmt/format.h>

#include "tdw/bench.hpp"
#include "tdw/cube.hpp"
#include "tdw/error.hpp"
#include "tdw/etl.hpp"
#include "tdw/json_codec.hpp"

namespace py = pybind11;
using namespace tdw;

namespace {

py::dict record_to_dict(const TimeRecord& r) {
  py::dict d;
  d["date"] = r.date.iso();
  d["iso_week_year"] = r.iso_week_year;
  d["iso_week_no"] = r.iso_week_no;
  d["month"] = r.month;
  d["quarter"] = r.quarter;
  d["semester"] = r.semester;
  d["year"] = r.year;
  d["eow"] = r.is_last_day_of_week;
  d["eom"] = r.is_last_day_of_month;
  d["eoq"] = r.is_last_day_of_quarter;
  d["eos"] = r.is_last_day_of_semester;
  d["eoy"] = r.is_last_day_of_year;
  return d;
}

class Warehouse {
 public:
  explicit Warehouse(const std::string& etl_config)
      : cube_(build_cube(load_warehouse(EtlConfig::load(etl_config)))) {}

  std::string query_json(const std::string& body) const {
    return result_to_json(cube_->query(query_from_json(nlohmann::json::parse(body)))).dump();
  }
  std::string query_csv(const std::string& body) const {
    return pivot_to_csv(cube_->query(query_from_json(nlohmann::json::parse(body))));
  }
  std::string metadata_json() const { return metadata_to_json(*cube_).dump(); }
  size_t fact_count() const { return cube_->data().facts.size(); }

 private:
  std::shared_ptr<const CubeSnapshot> cube_;
};

}  // namespace

PYBIND11_MODULE(_tdw, m) {
  m.doc() = "Treasury data warehouse core";

  static py::exception<Error> tdw_error(m, "TdwError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(tdw_error, fmt::format("{}: {}", e.name(), e.what()).c_str());
    } catch (const nlohmann::json::exception& e) {
      py::set_error(tdw_error, fmt::format("MALFORMED_QUERY: {}", e.what()).c_str());
    }
  });

  m.def("time_attributes", [](const std::string& date) { return record_to_dict(time_attributes(Date::parse(date))); },
        py::arg("date"));
  m.def(
      "build_time_table",
      [](int first_year, int last_year) {
        py::list out;
        const auto table = build_time_table(first_year, last_year);
        for (const auto& r : table.records()) out.append(record_to_dict(r));
        return out;
      },
      py::arg("first_year"), py::arg("last_year"));

  m.def(
      "summarize",
      [](const std::vector<double>& seconds) {
        const auto r = summarize("", seconds);
        return py::make_tuple(r.mean, r.std);
      },
      py::arg("seconds"));
  m.def(
      "pooled_t",
      [](double mean1, double std1, int n1, double mean2, double std2, int n2) {
        const auto r = pooled_t(mean1, std1, n1, mean2, std2, n2);
        py::dict d;
        d["t"] = r.t;
        d["df"] = r.df;
        d["crit95"] = r.crit95;
        d["crit99"] = r.crit99;
        d["significant95"] = r.significant95;
        d["significant99"] = r.significant99;
        return d;
      },
      py::arg("mean1"), py::arg("std1"), py::arg("n1"), py::arg("mean2"), py::arg("std2"), py::arg("n2"));
  m.def(
      "time_benefit",
      [](double mean_cube_s, double mean_naive_s) {
        const auto b = time_benefit(mean_cube_s, mean_naive_s);
        return py::make_tuple(b.per_day, b.per_month, b.per_year);
      },
      py::arg("mean_cube_s"), py::arg("mean_naive_s"));

  m.def(
      "run_etl_json",
      [](const std::string& config_path) {
        EtlOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_etl(EtlConfig::load(config_path));
        }
        return etl_report_to_json(outcome.report).dump();
      },
      py::arg("config_path"));

  m.def(
      "generate_dataset",
      [](const std::string& params_text, const std::string& dir) {
        const auto params = GeneratorParams::from_kv(KvConfig::parse(params_text, "<params>"));
        const auto r = generate_dataset(params, dir);
        return py::make_tuple(r.movement_count, r.forecast_count);
      },
      py::arg("params_text"), py::arg("dir"));

  py::class_<Warehouse>(m, "Warehouse")
      .def(py::init<const std::string&>(), py::arg("etl_config"))
      .def("query_json", &Warehouse::query_json, py::arg("body"))
      .def("query_csv", &Warehouse::query_csv, py::arg("body"))
      .def("metadata_json", &Warehouse::metadata_json)
      .def_property_readonly("fact_count", &Warehouse::fact_count);
}
