//===-- qsm_py.cpp - Python bindings --------------------------*- C++ -*-===//

#include "qsm/engine.h"
#include "qsm/smtlib.h"
#include "qsm/solve.h"

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

namespace py = pybind11;
using namespace qsm;

namespace {

py::object toPython(const nlohmann::json &j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::unique_ptr<Backend> makeBackend(const std::string &path) {
  if (path == "brute-force")
    return std::make_unique<BruteForceBackend>();
  std::string resolved = SmtProcessBackend::resolvePath(path);
  if (!SmtProcessBackend::available(resolved))
    throw ConfigError("SMT solver '" + resolved + "' cannot be started");
  return std::make_unique<SmtProcessBackend>(resolved);
}

std::string parse(const std::string &source) {
  return printProgram(parseProgram(source));
}

py::object run(const std::string &source, const std::string &mode,
               bool incremental, bool solveProcedure, bool mergeAllLoops,
               std::size_t patternThreshold, std::size_t stepBudget,
               const std::string &backend) {
  const Program program = parseProgram(source);
  RunConfig config;
  config.mode = parseMode(mode);
  config.incremental = incremental;
  config.solveProcedure = solveProcedure;
  config.mergeAllLoops = mergeAllLoops;
  config.patternThreshold = patternThreshold;
  config.stepBudget = stepBudget;
  std::unique_ptr<Backend> be = makeBackend(backend);
  nlohmann::json report;
  {
    py::gil_scoped_release release;
    Engine engine(program, config, *be);
    report = engine.run().toJson();
  }
  return toPython(report);
}

py::object solve(const std::string &smtlib, bool procedure,
                 const std::string &backend) {
  const SmtScript script = parseSmtScript(smtlib);
  std::unique_ptr<Backend> be = makeBackend(backend);
  Solver solver(*be, procedure);
  SatResult r;
  {
    py::gil_scoped_release release;
    r = solver.check(script.assertion);
  }
  const QueryLogEntry &e = solver.log().back();
  nlohmann::json j = {{"outcome", toString(r.outcome)},
                      {"quantified", e.quantified}};
  if (e.quantified)
    j["stage"] = toString(e.result.stage);
  if (r.model)
    j["model"] = toJson(*r.model);
  return toPython(j);
}

} // namespace

PYBIND11_MODULE(_qsm, m) {
  m.doc() = "Symbolic execution with pattern-based state merging";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("parse", &parse, py::arg("source"),
        "Parses a program and returns its canonical printed form.");
  m.def("run", &run, py::arg("source"), py::arg("mode") = "base",
        py::arg("incremental") = false, py::arg("solve_procedure") = true,
        py::arg("merge_all_loops") = false, py::arg("pattern_threshold") = 8,
        py::arg("step_budget") = 1'000'000,
        py::arg("backend") = "brute-force",
        "Runs a program and returns the report as a dict.");
  m.def("solve", &solve, py::arg("smtlib"), py::arg("procedure") = true,
        py::arg("backend") = "brute-force",
        "Solves one SMT-LIB query and returns outcome, stage and model.");
}
