//===-- support.h - Shared helpers for the test binaries --------*- C++ -*-===//
#pragma once

#include "qsm/engine.h"
#include "qsm/merge.h"
#include "qsm/solve.h"

#include <memory>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace qsm::testing {

/// Directory with the .mini fixtures.
std::string fixtureDir();
/// Directory with the SMT-LIB query corpus.
std::string corpusDir();
std::string readFile(const std::string &path);

/// Fixture names (file stems), sorted.
std::vector<std::string> fixtureNames();
Program loadFixture(const std::string &name);

/// memspn with the given charset, a buffer of `m` bytes and n <= m.
std::string memspnSource(Int m, const std::string &chars);

/// z3 when it can be started, otherwise bounded enumeration.
std::unique_ptr<Backend> defaultBackend();
bool haveSmtSolver();

/// Runs `p` up to its first merge region and builds that region's tree.
ExecTree exploreFirstRegion(const Program &p, bool incremental,
                            Backend &backend, ExploreStats *stats = nullptr);

RunReport runFixture(const Program &p, Mode mode, Backend &backend,
                     bool incremental = false);

/// (kind, line, column) of every assertion failure.
using FindingKey = std::tuple<int, int, int>;
std::set<FindingKey> assertionKeys(const RunReport &r);

/// The default domain of `f`, shrunk per class of symbols that are only
/// compared with each other and with constants.
Domain refinedDomain(const Formula &f);

/// Bidirectional model correspondence between a pattern-merged state and the
/// standard merge of the same leaves, plus agreement of merged memory on
/// shared models, all decided by bounded enumeration.
struct CorrespondenceResult {
  bool ok = true;
  std::string detail;
};
CorrespondenceResult checkCorrespondence(const ExecTree &t,
                                         const MergedState &pattern);

/// Seeded random linear terms, formulas, canonical queries and models over
/// the scalars n, k, x and the arrays s, t.
class FormulaGen {
public:
  explicit FormulaGen(std::uint64_t seed) : rng_(seed) {}

  Int range(Int lo, Int hi);
  Term term(int depth);
  /// Quantifier-free unless `quantifiers`; then bounded universals may occur
  /// at any position.
  Formula formula(int depth, bool quantifiers = false);
  /// A conjunction of quantifier-free clauses and universals
  /// forall i. 1 <= i <= k -> psi.
  Formula query();
  /// Values in [-3, 12] for every free symbol of `f`, cells 0..11.
  Model model(const Formula &f);

private:
  std::mt19937_64 rng_;
  int bound_ = 0;
  std::vector<std::string> scope_;
};

} // namespace qsm::testing
