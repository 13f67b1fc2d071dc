//===-- solve.h - Quantified query solving ----------------------*- C++ -*-===//
//
// Queries are conjunctions of quantifier-free clauses and bounded universal
// clauses  forall i. lo <= i <= hi -> psi  with quantifier-free psi. Models
// are found in four stages: quantifier stripping, assignment duplication,
// model repair and, as a last resort, the backend on the full query.
//
//===----------------------------------------------------------------------===//
#pragma once

#include "qsm/expr.h"
#include "qsm/model.h"

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qsm {

struct ClauseSet {
  std::vector<Formula> quantified;
  std::vector<Formula> qfree;
  /// False when some conjunct is neither quantifier-free nor a top-level
  /// bounded universal with a quantifier-free body.
  bool canonical = true;

  static ClauseSet fromFormula(const Formula &f);
  Formula toFormula() const;
};

/// (array symbol, index term).
using AccessPair = std::pair<std::string, Term>;
/// (array symbol, concrete offset).
using SemanticAccessPair = std::pair<std::string, Int>;

/// All select terms of `f` as access pairs, in order of first occurrence.
std::vector<AccessPair> reads(const Formula &f);
/// Access pairs of a quantified clause whose index mentions the bound
/// variable.
std::vector<AccessPair> qReads(const Formula &forall);
/// Arrays read through the bound variable of some quantified clause.
std::set<std::string> qArrays(const ClauseSet &q);

Formula strip(const ClauseSet &q);
Model duplicate(const ClauseSet &q, Model m,
                const std::set<SemanticAccessPair> &conflicts);

//===----------------------------------------------------------------------===//
// Backends
//===----------------------------------------------------------------------===//

class Backend {
public:
  virtual ~Backend() = default;
  virtual SatResult solve(const Formula &f) = 0;
  virtual std::string name() const = 0;
};

/// An SMT-LIB v2 solver in a child process, reused across queries.
class SmtProcessBackend : public Backend {
public:
  /// `path` empty: $QM_BACKEND, else `z3` on PATH.
  explicit SmtProcessBackend(std::string path = {},
                             std::chrono::milliseconds timeout =
                                 std::chrono::seconds(10));
  ~SmtProcessBackend() override;
  SmtProcessBackend(const SmtProcessBackend &) = delete;
  SmtProcessBackend &operator=(const SmtProcessBackend &) = delete;

  SatResult solve(const Formula &f) override;
  std::string name() const override { return path_; }
  const std::string &path() const { return path_; }

  /// Whether the solver binary can be started.
  static bool available(const std::string &path = {});
  static std::string resolvePath(const std::string &path);

private:
  struct Process;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<Process> proc_;

  bool ensureStarted(std::string &diag);
  void restart();
};

/// Answers from a queue; once it is empty, delegates (or answers unknown).
class ScriptedBackend : public Backend {
public:
  explicit ScriptedBackend(Backend *fallback = nullptr)
      : fallback_(fallback) {}
  void push(SatResult r) { answers_.push_back(std::move(r)); }
  void pushModel(Model m) { push({Outcome::Sat, std::move(m), {}}); }
  SatResult solve(const Formula &f) override;
  std::string name() const override { return "scripted"; }
  const std::vector<Formula> &queries() const { return queries_; }

private:
  Backend *fallback_;
  std::deque<SatResult> answers_;
  std::vector<Formula> queries_;
};

/// Value domains for bounded enumeration. Symbols without an entry use
/// `defaults`.
struct Domain {
  std::map<std::string, std::vector<Int>> scalars;
  std::map<std::string, std::vector<Int>> cells;
  std::vector<Int> defaults;
  /// Maximum number of search nodes before giving up.
  std::uint64_t limit = 2'000'000;
};

/// Every constant of `f` together with its neighbours, 0, and one value
/// larger than all of them.
Domain domainFor(const Formula &f);
std::vector<Int> constantsOf(const Formula &f);

/// Thrown when enumeration exceeds its limit.
class SearchLimit : public Error {
public:
  using Error::Error;
};

/// First model of `f` over the domain (deterministic search order), or none
/// when the domain holds no model. Array cells are assigned lazily, only when
/// read. Throws SearchLimit.
std::optional<Model> bruteForceModel(const Formula &f, const Domain &d);

/// Exhaustive bounded search. No model within the domain is reported as
/// unsat; exceeding the limit as unknown.
class BruteForceBackend : public Backend {
public:
  explicit BruteForceBackend(std::uint64_t limit = 2'000'000)
      : limit_(limit) {}
  SatResult solve(const Formula &f) override;
  std::string name() const override { return "brute-force"; }

private:
  std::uint64_t limit_;
};

//===----------------------------------------------------------------------===//
// The solving procedure
//===----------------------------------------------------------------------===//

enum class Stage { Strip, Duplicate, Repair, Fallback };
std::string toString(Stage s);

struct SolveResult {
  Outcome outcome = Outcome::Unknown;
  std::optional<Model> model;
  Stage stage = Stage::Fallback;
  std::string diagnostic;
};

struct StageCounters {
  std::uint64_t total = 0;
  std::uint64_t strip = 0;
  std::uint64_t duplicate = 0;
  std::uint64_t repair = 0;
  std::uint64_t fallback = 0;
  std::uint64_t sat = 0;
  std::uint64_t unsat = 0;
  std::uint64_t unknown = 0;

  void record(const SolveResult &r);
  nlohmann::json toJson() const;
};

struct RepairTrace {
  std::set<SemanticAccessPair> conflicts;
  Formula strengthened;
  std::optional<Model> solved;
};

/// Model repair; absent when the strengthened query has no model.
std::optional<Model> repair(const ClauseSet &q, const Model &md,
                            Backend &backend, RepairTrace *trace = nullptr);

struct QueryLogEntry {
  Formula query;
  bool quantified = false;
  SolveResult result;
};

class Solver {
public:
  /// Without the procedure, quantified queries go straight to the backend.
  explicit Solver(Backend &backend, bool procedure = true)
      : backend_(backend), procedure_(procedure) {}

  /// The four-stage procedure. Every Sat model satisfies `q`.
  SolveResult computeModel(const Formula &q);
  /// Quantifier-free queries go to the backend; quantified ones through
  /// computeModel (or the backend when the procedure is off). Sat models are
  /// verified.
  SatResult check(const Formula &f);

  const StageCounters &counters() const { return counters_; }
  const std::vector<QueryLogEntry> &log() const { return log_; }
  Backend &backend() { return backend_; }

private:
  Backend &backend_;
  bool procedure_;
  StageCounters counters_;
  std::vector<QueryLogEntry> log_;

  SatResult backendVerified(const Formula &f);
};

/// Aggregate statistics over a set of queries.
nlohmann::json stageTable(const StageCounters &c);

} // namespace qsm
