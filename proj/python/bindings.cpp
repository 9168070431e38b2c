#include "mildlevy/config.hpp"
#include "mildlevy/errors.hpp"
#include "mildlevy/monotone_ops.hpp"
#include "mildlevy/statistics.hpp"
#include "mildlevy/theory_checks.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

namespace py = pybind11;
using namespace mildlevy;
using nlohmann::json;

namespace {

// Function specs cross the boundary as JSON text: "neg_cbrt" or {"name": "affine", ...}.
ScalarFunction function_from(const std::string& spec) {
  json j;
  try {
    j = json::parse(spec);
  } catch (const json::parse_error&) {
    j = spec;
  }
  return parse_scalar_function(j);
}

py::dict run(const std::string& subcommand, const std::string& config_json, std::optional<std::uint64_t> seed,
             std::optional<std::size_t> paths) {
  RunResult result;
  {
    const ExperimentConfig cfg = parse_config(json::parse(config_json), ConfigOverrides{.seed = seed, .paths = paths});
    py::gil_scoped_release release;
    result = run_subcommand(subcommand, cfg);
  }
  py::list reports;
  for (const auto& r : result.reports) reports.append(to_json(r).dump());
  std::map<std::string, std::string> artifacts;
  for (auto& a : result.artifacts) artifacts[a.name] = std::move(a.contents);
  py::dict out;
  out["exit_code"] = result.exit_code;
  out["reports"] = reports;
  out["artifacts"] = artifacts;
  out["message"] = result.message;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  m.def("compute_constants", [](double M, double C, double alpha, double bdg) {
    const auto k = compute_constants(M, C, alpha, BDGConstant(bdg));
    return std::map<std::string, double>{{"C1", k.C1}, {"C2", k.C2}, {"gamma", k.gamma}};
  }, py::arg("M"), py::arg("C"), py::arg("alpha"), py::arg("bdg") = 3.0);

  m.def("resolvent", [](const std::string& f, double lambda, double x) { return resolvent(function_from(f), lambda, x); },
        py::arg("f"), py::arg("lam"), py::arg("x"));
  m.def("yosida", [](const std::string& f, double lambda, double x) { return yosida(function_from(f), lambda, x); },
        py::arg("f"), py::arg("lam"), py::arg("x"));

  m.def("ks_two_sample", [](std::vector<double> a, std::vector<double> b) {
    const auto r = ks_two_sample(std::move(a), std::move(b));
    return std::make_pair(r.statistic, r.p_value);
  });

  m.def("config_hash", [](const std::string& config_json) { return parse_config(json::parse(config_json)).hash; });
  m.def("run", &run, py::arg("subcommand"), py::arg("config_json"), py::arg("seed") = py::none(),
        py::arg("paths") = py::none());
  m.attr("subcommands") = subcommand_catalog();
  m.attr("models") = model_catalog();
}
