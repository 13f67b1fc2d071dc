//===-- solve_test.cpp - Strip, duplicate, repair, backends -----*- C++ -*-===//

#include "support.h"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

using namespace qsm;
using namespace qsm::testing;

namespace {

const Term n = var("n"), k = var("k"), i = var("i");

Formula workedQuery() {
  return conj({eq(select("s", n), lit(0)), inRange(lit(1), k, lit(10)),
               eq(select("s", k - 1), lit(8)),
               forallRange("i", lit(1), k, ne(select("s", i - 1), lit(0)))});
}

Formula workedStrip() {
  return conj({eq(select("s", n), lit(0)), inRange(lit(1), k, lit(10)),
               eq(select("s", k - 1), lit(8)),
               implies(ge(k, lit(1)), ne(select("s", lit(0)), lit(0))),
               negate(inRange(lit(1), n + 1, k))});
}

Model sModel(Int nv, Int kv, std::vector<Int> cells) {
  Model m;
  m.scalars = {{"n", nv}, {"k", kv}};
  for (std::size_t c = 0; c < cells.size(); ++c)
    m.arrays["s"].set(static_cast<Int>(c), cells[c]);
  m.arrays["s"].normalize();
  return m;
}

Model normalized(Model m) {
  for (auto &[_, am] : m.arrays)
    am.normalize();
  return m;
}

bool noModel(const Formula &f) {
  Domain d = refinedDomain(f);
  d.limit = 20'000'000;
  return !bruteForceModel(f, d);
}

std::set<std::string> arraysOf(const std::vector<AccessPair> &pairs) {
  std::set<std::string> out;
  for (const auto &[a, _] : pairs)
    out.insert(a);
  return out;
}

std::vector<Formula> randomQueries(std::uint64_t seed, int count) {
  FormulaGen gen(seed);
  std::vector<Formula> out;
  for (int j = 0; j < count; ++j)
    out.push_back(gen.query());
  return out;
}

} // namespace

TEST(Strip, WorkedExample) {
  EXPECT_EQ(strip(ClauseSet::fromFormula(workedQuery())), workedStrip());
}

TEST(Strip, QuantifierFreeUnchanged) {
  const Formula q = conj({gt(n, lit(0)), eq(select("s", n), lit(3))});
  EXPECT_EQ(strip(ClauseSet::fromFormula(q)), q);
}

TEST(Strip, NoMatchOnlyInstantiates) {
  const Formula q = conj({gt(n, lit(0)), forallRange("i", lit(1), k,
                                                     gt(select("t", i), lit(2)))});
  EXPECT_EQ(strip(ClauseSet::fromFormula(q)),
            conj({gt(n, lit(0)),
                  implies(ge(k, lit(1)), gt(select("t", lit(1)), lit(2)))}));
}

TEST(ClauseSetTest, Canonical) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  EXPECT_TRUE(q.canonical);
  EXPECT_EQ(q.quantified.size(), 1u);
  EXPECT_EQ(q.qfree.size(), 4u);
  const ClauseSet nested = ClauseSet::fromFormula(disj(
      {gt(n, lit(0)), forallRange("i", lit(1), k, gt(select("s", i), lit(0)))}));
  EXPECT_FALSE(nested.canonical);
}

TEST(Reads, QuantifiedAccessPairs) {
  const Formula f =
      forallRange("i", lit(1), k,
                  conj({ne(select("s", i - 1), lit(0)), gt(select("t", n), lit(1))}));
  const auto q = qReads(f);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].first, "s");
  EXPECT_EQ(reads(f.body()).size(), 2u);
}

TEST(Duplicate, WorkedExample) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  const Model m = sModel(7, 7, {1, 0, 0, 0, 0, 0, 8, 0});
  EXPECT_EQ(normalized(duplicate(q, m, {})), sModel(7, 7, {1, 1, 1, 1, 1, 1, 1, 0}));
}

TEST(Duplicate, SingleIterationUnchanged) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  const Model m = sModel(7, 1, {1, 0, 0, 0, 0, 0, 8, 0});
  EXPECT_EQ(normalized(duplicate(q, m, {})), m);
}

TEST(Duplicate, ConflictCellPreserved) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  const Model m = sModel(7, 7, {1, 0, 0, 0, 0, 0, 8, 0});
  EXPECT_EQ(normalized(duplicate(q, m, {{"s", 6}})),
            sModel(7, 7, {1, 1, 1, 1, 1, 1, 8, 0}));
}

TEST(Duplicate, NegativeBoundIsEmptyRange) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  const Model m = sModel(7, -2, {1, 0, 0});
  EXPECT_EQ(normalized(duplicate(q, m, {})), m);
}

TEST(Repair, WorkedExample) {
  const ClauseSet q = ClauseSet::fromFormula(workedQuery());
  ScriptedBackend scripted;
  scripted.pushModel(sModel(7, 7, {1, 0, 0, 0, 0, 0, 8, 0}));
  RepairTrace trace;
  const auto mr =
      repair(q, sModel(7, 7, {1, 1, 1, 1, 1, 1, 1, 0}), scripted, &trace);
  EXPECT_EQ(trace.strengthened,
            conj({workedStrip(), ne(select("s", lit(6)), lit(0)),
                  eq(n, lit(7)), eq(k, lit(7))}));
  EXPECT_EQ(trace.conflicts, (std::set<SemanticAccessPair>{{"s", 6}}));
  ASSERT_TRUE(mr);
  EXPECT_EQ(normalized(*mr), sModel(7, 7, {1, 1, 1, 1, 1, 1, 8, 0}));
}

TEST(Repair, QuantifierFreeConflictsOnly) {
  const Formula phi =
      conj({eq(k, lit(2)), eq(select("t", lit(0)), lit(5)),
            forallRange("i", lit(1), k, ne(select("s", i - 1), lit(0)))});
  Model md;
  md.scalars["k"] = 2;
  md.arrays["s"].fallback = 1;
  md.arrays["t"].fallback = 0;
  BruteForceBackend be;
  RepairTrace trace;
  const auto mr = repair(ClauseSet::fromFormula(phi), md, be, &trace);
  EXPECT_EQ(trace.conflicts, (std::set<SemanticAccessPair>{{"t", 0}}));
  // t is not quantified, so t[0] stays pinned to its value in md.
  EXPECT_FALSE(mr);
}

TEST(Repair, QuantifiedArrayConflictRepaired) {
  const Formula phi =
      conj({eq(k, lit(2)), eq(select("s", lit(1)), lit(5)),
            forallRange("i", lit(1), k, ne(select("s", i - 1), lit(0)))});
  Model md;
  md.scalars["k"] = 2;
  md.arrays["s"].fallback = 1;
  BruteForceBackend be;
  RepairTrace trace;
  const auto mr = repair(ClauseSet::fromFormula(phi), md, be, &trace);
  EXPECT_EQ(trace.conflicts, (std::set<SemanticAccessPair>{{"s", 1}}));
  ASSERT_TRUE(mr);
  EXPECT_TRUE(evaluate(*mr, phi));
}

TEST(Repair, PinnedScalarsContradict) {
  const Formula phi =
      conj({eq(select("s", n), lit(0)), eq(k, lit(2)),
            forallRange("i", lit(1), k, ne(select("s", i - 1), lit(0)))});
  Model md;
  md.scalars = {{"n", 0}, {"k", 2}};
  md.arrays["s"].fallback = 0;
  BruteForceBackend be;
  EXPECT_FALSE(repair(ClauseSet::fromFormula(phi), md, be));
  ScriptedBackend unsat;
  unsat.push({Outcome::Unsat, std::nullopt, {}});
  EXPECT_FALSE(repair(ClauseSet::fromFormula(workedQuery()),
                      sModel(7, 7, {1, 1, 1, 1, 1, 1, 1, 0}), unsat));
}

TEST(ComputeModel, WorkedExampleReachesRepair) {
  ScriptedBackend scripted;
  scripted.pushModel(sModel(7, 7, {1, 0, 0, 0, 0, 0, 8, 0}));
  scripted.pushModel(sModel(7, 7, {1, 0, 0, 0, 0, 0, 8, 0}));
  Solver solver(scripted);
  const SolveResult r = solver.computeModel(workedQuery());
  EXPECT_EQ(r.outcome, Outcome::Sat);
  EXPECT_EQ(r.stage, Stage::Repair);
  ASSERT_TRUE(r.model);
  EXPECT_TRUE(evaluate(*r.model, workedQuery()));
}

TEST(ComputeModel, WorkedExampleWithDefaultBackend) {
  auto be = defaultBackend();
  Solver solver(*be);
  const SolveResult r = solver.computeModel(workedQuery());
  ASSERT_EQ(r.outcome, Outcome::Sat);
  EXPECT_NE(r.stage, Stage::Fallback);
  EXPECT_TRUE(evaluate(*r.model, workedQuery()));
}

TEST(ComputeModel, ContradictionUnsatAtStrip) {
  BruteForceBackend be;
  Solver solver(be);
  const SolveResult r = solver.computeModel(
      conj({eq(k, lit(1)), eq(k, lit(2)),
            forallRange("i", lit(1), k, eq(select("s", i - 1), lit(0)))}));
  EXPECT_EQ(r.outcome, Outcome::Unsat);
  EXPECT_EQ(r.stage, Stage::Strip);
}

TEST(ComputeModel, VacuousQuantifierSatAtStrip) {
  BruteForceBackend be;
  Solver solver(be);
  const Formula q = conj(
      {eq(k, lit(0)), forallRange("i", lit(1), k, eq(select("s", i - 1), lit(0)))});
  const SolveResult r = solver.computeModel(q);
  EXPECT_EQ(r.outcome, Outcome::Sat);
  EXPECT_EQ(r.stage, Stage::Strip);
  EXPECT_TRUE(evaluate(*r.model, q));
}

class BackendTest : public ::testing::TestWithParam<std::string> {
protected:
  std::unique_ptr<Backend> make() {
    if (GetParam() == "brute-force")
      return std::make_unique<BruteForceBackend>();
    return std::make_unique<SmtProcessBackend>();
  }
  void SetUp() override {
    if (GetParam() != "brute-force" && !haveSmtSolver())
      GTEST_SKIP() << "no SMT solver on PATH";
  }
};

TEST_P(BackendTest, Examples) {
  auto be = make();
  const SatResult a = be->solve(conj({le(n, lit(3)), gt(n, lit(2))}));
  ASSERT_EQ(a.outcome, Outcome::Sat);
  EXPECT_EQ(a.model->scalars.at("n"), 3);
  EXPECT_EQ(be->solve(truth(false)).outcome, Outcome::Unsat);
  const SatResult qf = be->solve(workedStrip());
  ASSERT_EQ(qf.outcome, Outcome::Sat);
  EXPECT_TRUE(evaluate(*qf.model, workedStrip()));
}

TEST_P(BackendTest, QuantifiedQuery) {
  auto be = make();
  const SatResult r = be->solve(workedQuery());
  ASSERT_EQ(r.outcome, Outcome::Sat);
  EXPECT_TRUE(evaluate(*r.model, workedQuery()));
}

INSTANTIATE_TEST_SUITE_P(Backends, BackendTest,
                         ::testing::Values("brute-force", "smt"));

TEST(SmtProcess, MissingBinary) {
  EXPECT_FALSE(SmtProcessBackend::available("/nonexistent/solver"));
  SmtProcessBackend be("/nonexistent/solver");
  const SatResult r = be.solve(gt(n, lit(0)));
  EXPECT_EQ(r.outcome, Outcome::Unknown);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(BruteForce, Examples) {
  Domain d;
  for (Int v = 0; v <= 10; ++v) {
    d.scalars["n"].push_back(v);
    d.scalars["k"].push_back(v);
  }
  d.cells["s"] = {0, 1, 8};
  const auto m = bruteForceModel(workedQuery(), d);
  ASSERT_TRUE(m);
  EXPECT_TRUE(evaluate(*m, workedQuery()));

  Domain small;
  for (Int v = -5; v <= 5; ++v)
    small.defaults.push_back(v);
  const Term x = var("x");
  EXPECT_FALSE(bruteForceModel(conj({gt(x, lit(0)), lt(x, lit(1))}), small));
}

TEST(BruteForce, LimitThrows) {
  Domain d = domainFor(workedQuery());
  d.limit = 10;
  EXPECT_THROW(bruteForceModel(conj({workedQuery(), gt(n, lit(100))}), d),
               SearchLimit);
}

TEST(BruteForce, DeterministicFirstModel) {
  const Formula f = conj({gt(n, lit(2)), lt(n, lit(9)), ne(select("s", n), lit(0))});
  const Domain d = domainFor(f);
  EXPECT_EQ(bruteForceModel(f, d), bruteForceModel(f, d));
}

TEST(SolveProperty, Weakening) {
  int checked = 0;
  for (const Formula &q : randomQueries(101, 500)) {
    const Formula qf = strip(ClauseSet::fromFormula(q));
    EXPECT_TRUE(isQuantifierFree(qf));
    Domain d = refinedDomain(conj({q, negate(qf)}));
    d.limit = 200'000;
    try {
      EXPECT_FALSE(bruteForceModel(conj({q, negate(qf)}), d)) << toString(q);
      ++checked;
    } catch (const SearchLimit &) {
    }
  }
  EXPECT_GE(checked, 450) << checked;
}

TEST(SolveProperty, ModelsVerifiedAndUnsatSound) {
  BruteForceBackend brute;
  std::unique_ptr<Backend> smt;
  if (haveSmtSolver())
    smt = std::make_unique<SmtProcessBackend>();
  for (Backend *be : {static_cast<Backend *>(&brute), smt.get()}) {
    if (!be)
      continue;
    Solver solver(*be);
    std::size_t stripUnsat = 0;
    for (const Formula &q : randomQueries(202, 500)) {
      const SolveResult r = solver.computeModel(q);
      if (r.outcome == Outcome::Sat) {
        ASSERT_TRUE(r.model);
        EXPECT_TRUE(evaluate(*r.model, q)) << toString(q);
      }
      if (r.outcome == Outcome::Unsat && r.stage == Stage::Strip) {
        ++stripUnsat;
        EXPECT_TRUE(noModel(q)) << toString(q);
      }
    }
    const StageCounters &c = solver.counters();
    EXPECT_EQ(c.total, 500u);
    EXPECT_EQ(c.strip + c.duplicate + c.repair + c.fallback, c.total);
    EXPECT_EQ(c.sat + c.unsat + c.unknown, c.total);
    EXPECT_GT(stripUnsat, 0u) << be->name();
  }
}

TEST(SolveProperty, DuplicateIdempotent) {
  FormulaGen gen(303);
  int checked = 0;
  for (const Formula &q : randomQueries(303, 500)) {
    const ClauseSet cs = ClauseSet::fromFormula(q);
    std::set<std::string> seen;
    bool shared = false;
    for (const Formula &c : cs.quantified)
      for (const std::string &a : arraysOf(qReads(c)))
        shared = !seen.insert(a).second || shared;
    if (shared)
      continue;
    ++checked;
    Model m = gen.model(q);
    m.scalars["k"] = gen.range(0, 6);
    const Model once = normalized(duplicate(cs, m, {}));
    EXPECT_EQ(normalized(duplicate(cs, once, {})), once) << toString(q);
  }
  EXPECT_GT(checked, 100);
}

TEST(StageTable, Fields) {
  StageCounters c;
  c.total = 4;
  c.strip = 2;
  c.duplicate = 1;
  c.fallback = 1;
  c.sat = 4;
  const nlohmann::json t = stageTable(c);
  EXPECT_EQ(t["Total"], 4);
  EXPECT_EQ(t["S"], 2);
  EXPECT_EQ(t["S+D"], 3);
  EXPECT_EQ(t["S+D+R"], 3);
  EXPECT_EQ(t["Fallback"], 1);
}
