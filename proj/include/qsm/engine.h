//===-- engine.h - Whole-program exploration with merge regions -*- C++ -*-===//
//
// Depth-first exploration of a .mini program. Each time a state reaches the
// head of a merge region, the region's execution tree is built and its exited
// leaves are handed on unmerged (base), merged per exit point (standard), or
// merged by regular pattern with standard merging as the fallback (pattern).
//
//===----------------------------------------------------------------------===//
#pragma once

#include "qsm/lang.h"
#include "qsm/merge.h"
#include "qsm/solve.h"
#include "qsm/symex.h"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qsm {

enum class Mode { Base, MergeStandard, MergePattern };
std::string toString(Mode m);
/// Throws Error on unknown names.
Mode parseMode(const std::string &s);

struct RunConfig {
  Mode mode = Mode::Base;
  bool incremental = false;
  bool solveProcedure = true;
  bool mergeAllLoops = false;
  std::size_t patternThreshold = 8;
  std::size_t stepBudget = 1'000'000;
  /// One test per k value of pattern-merged paths instead of one per path.
  bool testPerK = true;
};

/// Configuration problems (for example a merge mode without merge regions).
class ConfigError : public Error {
public:
  using Error::Error;
};

struct RegionReport {
  std::size_t region = 0;
  std::size_t head = 0;
  std::size_t treeNodes = 0;    // live nodes of the final tree
  std::size_t nodesCreated = 0; // including nodes removed by merging
  std::size_t leaves = 0;
  std::size_t exitedLeaves = 0;
  std::size_t incrementalMerges = 0;
  bool hashValid = true;
  std::size_t hashCollisions = 0;
  std::size_t prefixViolations = 0;
  std::size_t partitions = 0;
  std::size_t patterns = 0;
  std::size_t fallbacks = 0;
  std::size_t standardMerges = 0;
  bool thresholdExceeded = false;
  ExecTree tree{SymbolicState{}};
  std::vector<MergedState> merged;
};

struct KBinding {
  std::string k;
  std::vector<Int> domain;
};

struct CompletedPath {
  SymbolicState state;
  std::optional<Term> returnValue;
  std::vector<KBinding> ks;
};

struct TestCase {
  std::size_t path = 0;
  /// Extra constraints of this test (k = v), rendered.
  std::vector<std::string> pins;
  Outcome outcome = Outcome::Unknown;
  std::optional<Model> model;
};

struct RunReport {
  std::string program;
  RunConfig config;
  std::vector<RegionReport> regions;
  std::vector<Finding> findings;
  std::vector<std::string> warnings;
  std::vector<CompletedPath> paths;
  std::vector<TestCase> tests;
  StageCounters counters;
  std::size_t steps = 0;
  std::size_t feasibilityQueries = 0;
  bool budgetExceeded = false;
  std::string budgetMessage;
  std::optional<ExecTree> partialTree;

  std::size_t assertionFindings() const;
  /// Deterministic summary; no timing information.
  nlohmann::json toJson() const;
};

class Engine {
public:
  /// Throws ConfigError for inconsistent configurations.
  Engine(const Program &program, RunConfig config, Backend &backend);

  RunReport run();

  const Cfg &cfg() const { return cfg_; }
  Solver &solver() { return solver_; }

private:
  const Program &program_;
  RunConfig config_;
  Cfg cfg_;
  Solver solver_;
  FreshNames names_;
};

nlohmann::json toJson(const Model &m);
nlohmann::json toJson(const Finding &f);

} // namespace qsm
