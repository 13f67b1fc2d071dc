//===-- qsm.cpp - Command-line driver ---------------------------*- C++ -*-===//
//
// qsm run PROGRAM.mini [options]     explore a program
// qsm solve QUERY.smt2... [options]  run the solving procedure on queries
//
// Exit codes: 0 clean, 1 findings reported, 2 configuration or parse error,
// 3 step budget exceeded.
//
//===----------------------------------------------------------------------===//

#include "qsm/engine.h"
#include "qsm/smtlib.h"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace qsm;

namespace {

constexpr int ExitClean = 0;
constexpr int ExitFindings = 1;
constexpr int ExitConfig = 2;
constexpr int ExitBudget = 3;

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + path.string());
  out << text;
}

struct BackendOptions {
  std::string path;
  int timeoutMs = 10000;
};

std::unique_ptr<Backend> makeBackend(const BackendOptions &o) {
  std::string path = o.path;
  if (const char *env = std::getenv("QM_BACKEND"); env && *env)
    path = env;
  if (path == "brute-force")
    return std::make_unique<BruteForceBackend>();
  std::string resolved = SmtProcessBackend::resolvePath(path);
  if (!SmtProcessBackend::available(resolved))
    throw ConfigError("SMT solver '" + resolved +
                      "' cannot be started; use --backend PATH or "
                      "--backend brute-force");
  return std::make_unique<SmtProcessBackend>(
      resolved, std::chrono::milliseconds(o.timeoutMs));
}

std::string queryLog(const std::vector<QueryLogEntry> &log) {
  std::ostringstream os;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const QueryLogEntry &e = log[i];
    os << "; query " << i << " quantified=" << (e.quantified ? 1 : 0)
       << " outcome=" << toString(e.result.outcome);
    if (e.quantified)
      os << " stage=" << toString(e.result.stage);
    os << "\n(reset)\n" << toSmtScript(e.query) << "\n";
  }
  return os.str();
}

void writeArtifacts(const fs::path &dir, const RunReport &rep,
                    const Solver &solver) {
  fs::create_directories(dir);
  writeFile(dir / "report.json", rep.toJson().dump(2) + "\n");
  nlohmann::json merged = nlohmann::json::array();
  for (std::size_t i = 0; i < rep.regions.size(); ++i) {
    writeFile(dir / ("tree-" + std::to_string(i) + ".json"),
              rep.regions[i].tree.toJson().dump(2) + "\n");
    nlohmann::json ms = nlohmann::json::array();
    for (const MergedState &m : rep.regions[i].merged)
      ms.push_back(toJson(m));
    merged.push_back({{"visit", i}, {"merged", ms}});
  }
  if (rep.partialTree)
    writeFile(dir / "tree-partial.json", rep.partialTree->toJson().dump(2) + "\n");
  writeFile(dir / "merged.json", merged.dump(2) + "\n");
  nlohmann::json tests = nlohmann::json::array();
  for (const TestCase &t : rep.tests) {
    nlohmann::json j = {{"path", t.path},
                        {"pins", t.pins},
                        {"outcome", toString(t.outcome)}};
    if (t.model)
      j["model"] = toJson(*t.model);
    tests.push_back(std::move(j));
  }
  writeFile(dir / "tests.json", tests.dump(2) + "\n");
  writeFile(dir / "queries.smt2", queryLog(solver.log()));
}

void printSummary(const RunReport &rep) {
  std::cout << "program " << rep.program << " mode "
            << toString(rep.config.mode)
            << (rep.config.incremental ? " incremental" : "") << "\n";
  for (std::size_t i = 0; i < rep.regions.size(); ++i) {
    const RegionReport &r = rep.regions[i];
    std::cout << "region " << r.region << " visit " << i << ": "
              << r.treeNodes << " nodes, " << r.exitedLeaves
              << " exited leaves, " << r.partitions << " partitions, "
              << r.patterns << " patterns, " << r.fallbacks << " fallbacks, "
              << r.merged.size() << " states out\n";
    for (const MergedState &m : r.merged)
      if (m.kind == MergeKind::Pattern)
        std::cout << "  pc: " << toString(m.state.pc) << "\n";
  }
  for (const Finding &f : rep.findings)
    std::cout << toString(f.kind) << " at " << f.pos.line << ":" << f.pos.column
              << ": " << f.message << "\n";
  for (const std::string &w : rep.warnings)
    std::cout << "warning: " << w << "\n";
  const StageCounters &c = rep.counters;
  std::cout << "paths " << rep.paths.size() << ", tests " << rep.tests.size()
            << ", steps " << rep.steps << ", quantified queries " << c.total
            << " (S " << c.strip << ", D " << c.duplicate << ", R " << c.repair
            << ", fallback " << c.fallback << ")\n";
  if (rep.budgetExceeded)
    std::cout << "budget exceeded: " << rep.budgetMessage << "\n";
}

int runCommand(const std::string &file, RunConfig config,
               const BackendOptions &bo, const std::string &out, bool json) {
  Program program = parseProgram(readFile(file));
  std::unique_ptr<Backend> backend = makeBackend(bo);
  Engine engine(program, config, *backend);
  RunReport rep = engine.run();
  if (!out.empty())
    writeArtifacts(out, rep, engine.solver());
  if (json)
    std::cout << rep.toJson().dump(2) << "\n";
  else
    printSummary(rep);
  if (rep.budgetExceeded)
    return ExitBudget;
  return rep.findings.empty() ? ExitClean : ExitFindings;
}

int solveCommand(const std::vector<std::string> &files, bool procedure,
                 const BackendOptions &bo, bool json) {
  std::unique_ptr<Backend> backend = makeBackend(bo);
  Solver solver(*backend, procedure);
  nlohmann::json results = nlohmann::json::array();
  for (const std::string &f : files) {
    SmtScript script = parseSmtScript(readFile(f));
    SatResult r = solver.check(script.assertion);
    const QueryLogEntry &e = solver.log().back();
    nlohmann::json j = {{"file", fs::path(f).filename().string()},
                        {"outcome", toString(r.outcome)},
                        {"quantified", e.quantified}};
    if (e.quantified)
      j["stage"] = toString(e.result.stage);
    results.push_back(std::move(j));
    if (!json)
      std::cout << f << ": " << toString(r.outcome)
                << (e.quantified ? " (" + toString(e.result.stage) + ")" : "")
                << "\n";
  }
  nlohmann::json table = stageTable(solver.counters());
  if (json)
    std::cout << nlohmann::json{{"queries", results}, {"stages", table}}.dump(2)
              << "\n";
  else
    std::cout << table.dump() << "\n";
  return ExitClean;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Symbolic execution with pattern-based state merging"};
  app.require_subcommand(1);

  BackendOptions bo;
  bo.path = "z3";
  bool json = false;

  auto addBackend = [&](CLI::App *cmd) {
    cmd->add_option("--backend", bo.path,
                    "SMT solver binary, or brute-force (env QM_BACKEND wins)");
    cmd->add_option("--timeout-ms", bo.timeoutMs, "Per-query solver timeout");
    cmd->add_flag("--json", json, "Print the report as JSON");
  };

  CLI::App *run = app.add_subcommand("run", "Explore a .mini program");
  std::string file, out, mode = "base";
  RunConfig config;
  bool noProcedure = false, representative = false;
  run->add_option("program", file, "Program file")->required();
  run->add_option("--mode", mode, "base | merge-standard | merge-pattern")
      ->check(CLI::IsMember({"base", "merge-standard", "merge-pattern"}));
  run->add_flag("--incremental", config.incremental,
                "Merge incrementally while building region trees");
  run->add_flag("--no-solve-procedure", noProcedure,
                "Send quantified queries straight to the backend");
  run->add_flag("--merge-all-loops", config.mergeAllLoops,
                "Treat every outermost loop as a merge region");
  run->add_option("--pattern-threshold", config.patternThreshold,
                  "Maximum number of regular partitions per exit group");
  run->add_option("--step-budget", config.stepBudget,
                  "Maximum number of executed instructions");
  run->add_option("--out", out, "Directory for artifacts");
  run->add_flag("--representative-tests", representative,
                "One test per pattern-merged path instead of one per k");
  addBackend(run);

  CLI::App *solve = app.add_subcommand("solve", "Solve SMT-LIB queries");
  std::vector<std::string> queries;
  solve->add_option("queries", queries, "SMT-LIB files")->required();
  solve->add_flag("--no-solve-procedure", noProcedure,
                  "Send quantified queries straight to the backend");
  addBackend(solve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? ExitClean : ExitConfig;
  }

  try {
    if (*run) {
      config.mode = parseMode(mode);
      config.solveProcedure = !noProcedure;
      config.testPerK = !representative;
      return runCommand(file, config, bo, out, json);
    }
    return solveCommand(queries, !noProcedure, bo, json);
  } catch (const ParseError &e) {
    std::cerr << "error: " << e.line() << ":" << e.column() << ": " << e.what()
              << "\n";
    return ExitConfig;
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitConfig;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return ExitConfig;
  }
}
