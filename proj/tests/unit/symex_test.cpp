//===-- symex_test.cpp - Executor and execution trees -----------*- C++ -*-===//

#include "support.h"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

using namespace qsm;
using namespace qsm::testing;

namespace {

const Term n = var("n");

bool hasModel(const Formula &f) {
  Domain d = domainFor(f);
  d.limit = 5'000'000;
  return bruteForceModel(f, d).has_value();
}

bool equivalent(const Formula &a, const Formula &b) {
  return !hasModel(conj({a, negate(b)})) && !hasModel(conj({b, negate(a)}));
}

ExecTree memspnTree(const std::string &chars, bool incremental) {
  BruteForceBackend be;
  return exploreFirstRegion(parseProgram(memspnSource(3, chars)), incremental,
                            be);
}

NodeId childWithCond(const ExecTree &t, NodeId parent, const Formula &cond) {
  for (NodeId c : t.node(parent).children)
    if (t.node(c).cond == cond)
      return c;
  throw Error("no child with condition " + toString(cond));
}

void checkValidity(const ExecTree &t, const std::string &label) {
  const Formula rootPc = t.node(t.root()).state.pc;
  for (NodeId id : t.liveNodes()) {
    const ExecNode &node = t.node(id);
    EXPECT_TRUE(equivalent(node.state.pc, conj({rootPc, t.tpc(id)})))
        << label << " node " << id;
    for (std::size_t a = 0; a < node.children.size(); ++a)
      for (std::size_t b = a + 1; b < node.children.size(); ++b)
        EXPECT_FALSE(hasModel(conj({t.node(node.children[a]).cond,
                                    t.node(node.children[b]).cond})))
            << label << " siblings of " << id;
  }
}

} // namespace

TEST(Explore, MemspnTreeShape) {
  const ExecTree t = memspnTree("a", false);
  EXPECT_EQ(t.liveCount(), 14u);
  EXPECT_EQ(t.leaves().size(), 7u);
  EXPECT_EQ(t.exitedLeaves().size(), 7u);
  for (NodeId id : t.liveNodes())
    EXPECT_LE(t.node(id).children.size(), 2u);
}

TEST(Explore, NoSymbolicBranchesGivesSingleLeaf) {
  const Program p = parseProgram(R"(program p {
  int i = 0;
  int s = 0;
  @merge while (i < 3) {
    s = s + i;
    i = i + 1;
  }
  return s;
})");
  BruteForceBackend be;
  const ExecTree t = exploreFirstRegion(p, false, be);
  EXPECT_EQ(t.liveCount(), 1u);
  EXPECT_EQ(t.leaves().size(), 1u);
}

TEST(Explore, DisjunctiveCharsetHasMoreLeaves) {
  EXPECT_GT(memspnTree("ab", false).leaves().size(),
            memspnTree("a", false).leaves().size());
}

TEST(Tpc, PathConditions) {
  const ExecTree t = memspnTree("a", false);
  const NodeId n3 = childWithCond(t, t.root(), gt(n, lit(0)));
  const NodeId n4 = childWithCond(t, n3, eq(select("s", lit(0)), lit(97)));
  const NodeId n7 = childWithCond(t, n4, gt(n, lit(1)));
  EXPECT_EQ(toString(t.tpc(n3, n7)), "n > 0 && s[0] = 97 && n > 1");
  EXPECT_EQ(toString(t.tpcTail(n3, n7)), "s[0] = 97 && n > 1");
  EXPECT_EQ(t.tpc(n7, n7), t.node(n7).cond);
  EXPECT_THROW(t.tpc(n7, n3), Error);
}

TEST(Fork, BothSidesFeasible) {
  const Program p = parseProgram(memspnSource(3, "a"));
  const Cfg cfg = lowerToCfg(p);
  BruteForceBackend be;
  Solver solver(be);
  Executor ex(p, cfg, [&](const Formula &f) { return solver.check(f); }, 1000);
  SymbolicState s = ex.initialState();
  s.pc = le(n, lit(3));
  s.witness.reset();
  EXPECT_EQ(ex.check(s, gt(n, lit(0))).outcome, Outcome::Sat);
  EXPECT_EQ(ex.check(s, negate(gt(n, lit(0)))).outcome, Outcome::Sat);
  s.pc = conj({le(n, lit(3)), gt(n, lit(2))});
  EXPECT_EQ(ex.check(s, gt(n, lit(3))).outcome, Outcome::Unsat);
  EXPECT_EQ(ex.check(s, negate(gt(n, lit(3)))).outcome, Outcome::Sat);
}

TEST(Explore, BudgetExceededCarriesPartialTree) {
  const Program p = parseProgram(memspnSource(3, "a"));
  const Cfg cfg = lowerToCfg(p);
  BruteForceBackend be;
  Solver solver(be);
  Executor ex(p, cfg, [&](const Formula &f) { return solver.check(f); }, 12);
  SymbolicState s = ex.initialState();
  while (s.ic != cfg.regions[0].head) {
    RunOutcome o = ex.run(std::move(s), nullptr);
    ASSERT_TRUE(o.reason == StopReason::Branched ||
                o.reason == StopReason::AtRegion);
    s = o.reason == StopReason::Branched ? std::move(o.successors[0].state)
                                         : std::move(*o.state);
  }
  try {
    ex.exploreRegion(s, cfg.regions[0], {});
    FAIL() << "expected the budget to run out";
  } catch (const BudgetExceeded &e) {
    ASSERT_TRUE(e.partial);
    EXPECT_GE(e.partial->size(), 1u);
  }
}

TEST(Explore, OutOfBoundsReported) {
  auto be = defaultBackend();
  const RunReport r = runFixture(loadFixture("off_by_one"), Mode::Base, *be);
  bool oob = false;
  for (const Finding &f : r.findings)
    oob = oob || f.kind == FindingKind::OutOfBounds;
  EXPECT_TRUE(oob);
}

TEST(ExploreProperty, TreeValidityAndSiblingInconsistency) {
  for (const std::string chars : {"a", "ab"})
    for (bool inc : {false, true})
      checkValidity(memspnTree(chars, inc),
                    chars + (inc ? " incremental" : ""));
  BruteForceBackend be;
  for (const std::string name : {"strnlen", "copy", "digits", "stride2"})
    checkValidity(exploreFirstRegion(loadFixture(name), false, be), name);
}

TEST(ExploreProperty, Deterministic) {
  for (bool inc : {false, true}) {
    const ExecTree a = memspnTree("ab", inc), b = memspnTree("ab", inc);
    EXPECT_EQ(a.toJson().dump(), b.toJson().dump());
  }
}

TEST(ExploreProperty, IncrementalPreservesLeafConstraints) {
  for (const std::string chars : {"a", "ab"}) {
    const ExecTree plain = memspnTree(chars, false);
    const ExecTree inc = memspnTree(chars, true);
    std::vector<Formula> a, b;
    for (NodeId l : plain.exitedLeaves())
      a.push_back(plain.node(l).final->pc);
    for (NodeId l : inc.exitedLeaves())
      b.push_back(inc.node(l).final->pc);
    EXPECT_TRUE(equivalent(disj(a), disj(b))) << chars;
    EXPECT_LE(inc.liveCount(), plain.liveCount());
  }
}

TEST(Incremental, CompressedCharsetConditions) {
  const ExecTree t = memspnTree("ab", true);
  EXPECT_EQ(t.liveCount(), 14u);
  for (Int c = 0; c < 3; ++c) {
    const Formula is97 = eq(select("s", lit(c)), lit(97));
    const Formula is98 = eq(select("s", lit(c)), lit(98));
    const Formula match = disj({is97, conj({negate(is97), is98})});
    const Formula miss = conj({negate(is97), negate(is98)});
    bool seenMatch = false, seenMiss = false;
    for (NodeId id : t.liveNodes()) {
      seenMatch = seenMatch || t.node(id).cond == match;
      seenMiss = seenMiss || t.node(id).cond == miss;
    }
    EXPECT_TRUE(seenMatch) << c;
    EXPECT_TRUE(seenMiss) << c;
  }
}
