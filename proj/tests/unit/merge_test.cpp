//===-- merge_test.cpp - Path hashes, patterns and merging ------*- C++ -*-===//

#include "support.h"

#include "qsm/generalize.h"

#include <gtest/gtest.h>

#include <set>

using namespace qsm;
using namespace qsm::testing;

namespace {

const Term n = var("n");
const Term x = var(PatternVar);

ExecTree memspnTree(const std::string &chars = "a", bool incremental = false) {
  BruteForceBackend be;
  return exploreFirstRegion(parseProgram(memspnSource(3, chars)), incremental,
                            be);
}

/// Exited leaves whose condition is a failed character match, and the rest.
std::pair<std::vector<NodeId>, std::vector<NodeId>>
memspnRows(const ExecTree &t) {
  std::vector<NodeId> miss, bound;
  for (NodeId l : t.exitedLeaves()) {
    const Formula &c = t.node(l).cond;
    const bool isMiss = c.kind() == FormulaKind::Not &&
                        c.operands()[0].kind() == FormulaKind::Cmp &&
                        c.operands()[0].lhs().kind() == TermKind::Select;
    (isMiss ? miss : bound).push_back(l);
  }
  return {miss, bound};
}

HashValue h(const Formula &f) { return structuralHash(f); }

const RegularPartition &partitionWith(const Partitioning &p, NodeId leaf) {
  for (const RegularPartition &rp : p.partitions)
    for (const PartitionMember &m : rp.members)
      if (m.leaf == leaf)
        return rp;
  throw Error("leaf in no partition");
}

} // namespace

TEST(MergeStandard, IteChainOverLeaves) {
  const ExecTree t = memspnTree();
  const auto [miss, bound] = memspnRows(t);
  ASSERT_EQ(miss.size(), 3u);
  const MergedState m = mergeLeavesStandard(t, miss);
  EXPECT_EQ(m.kind, MergeKind::Standard);
  const Term expected =
      ite(t.tpc(miss[0]), lit(0), ite(t.tpc(miss[1]), lit(1), lit(2)));
  EXPECT_EQ(m.state.scalar("count"), expected);
  EXPECT_EQ(m.state.scalar("n"), n);
}

TEST(MergeStandard, SingleStateUnchanged) {
  const ExecTree t = memspnTree();
  const NodeId leaf = t.exitedLeaves().front();
  const SymbolicState &s = *t.node(leaf).final;
  const SymbolicState m = mergeStandard({s});
  EXPECT_EQ(m.pc, s.pc);
  EXPECT_EQ(m.scalar("count"), s.scalar("count"));
  EXPECT_EQ(mergeLeavesStandard(t, {leaf}).kind, MergeKind::None);
}

TEST(MergeStandard, IncompatibleStatesRejected) {
  const ExecTree t = memspnTree();
  SymbolicState a = *t.node(t.exitedLeaves()[0]).final;
  SymbolicState b = a;
  b.ic += 1;
  EXPECT_THROW(mergeStandard({a, b}), Error);
}

TEST(HashPath, MemspnTreeWords) {
  const ExecTree t = memspnTree();
  const auto [miss, bound] = memspnRows(t);
  const HashValue W = h(truth(true)), G = h(gt(n, lit(0))),
                  B = h(eq(select("s", lit(0)), lit(97))),
                  Y = h(negate(eq(select("s", lit(0)), lit(97)))),
                  R = h(negate(gt(n, lit(0))));
  EXPECT_EQ(hashPath(t, t.root()), (HashWord{W}));
  EXPECT_EQ(hashPath(t, miss[0]), (HashWord{W, G, Y}));
  EXPECT_EQ(hashPath(t, miss[2]), (HashWord{W, G, B, G, B, G, Y}));
  EXPECT_EQ(hashPath(t, bound[0]), (HashWord{W, R}));
  EXPECT_EQ(std::set<HashValue>({W, G, B, Y, R}).size(), 5u);
}

TEST(HashValidity, Cases) {
  EXPECT_TRUE(checkHashValidity(memspnTree()));
  const ExecTree full = memspnTree();
  ExecTree single(full.node(full.root()).state);
  EXPECT_TRUE(checkHashValidity(single));
  ExecTree clash(full.node(full.root()).state);
  clash.addChild(clash.root(), gt(n, lit(1)), clash.node(0).state);
  clash.addChild(clash.root(), gt(n, lit(2)), clash.node(0).state);
  EXPECT_EQ(h(gt(n, lit(1))), h(gt(n, lit(2))));
  EXPECT_FALSE(checkHashValidity(clash));
}

TEST(Partition, TableRows) {
  const ExecTree t = memspnTree();
  const auto [miss, bound] = memspnRows(t);
  const Partitioning p = findRegularPartitioning(t, t.exitedLeaves());
  EXPECT_FALSE(p.exceeded);
  EXPECT_TRUE(p.residual.empty());
  ASSERT_EQ(p.partitions.size(), 2u);

  const HashValue W = h(truth(true)), G = h(gt(n, lit(0))),
                  B = h(eq(select("s", lit(0)), lit(97))),
                  Y = h(negate(eq(select("s", lit(0)), lit(97)))),
                  R = h(negate(gt(n, lit(0))));
  const RegularPartition &row1 = partitionWith(p, miss[0]);
  EXPECT_EQ(row1.pattern, (RegularPattern{{W}, {G, B}, {G, Y}}));
  ASSERT_EQ(row1.members.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(row1.members[j].leaf, miss[j]);
    EXPECT_EQ(row1.members[j].k, static_cast<Int>(j));
  }
  const RegularPartition &row2 = partitionWith(p, bound[0]);
  EXPECT_EQ(row2.pattern, (RegularPattern{{W}, {G, B}, {R}}));
  ASSERT_EQ(row2.members.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j)
    EXPECT_EQ(row2.members[j].k, static_cast<Int>(j));
}

TEST(Partition, SingletonIsResidual) {
  const ExecTree t = memspnTree();
  const NodeId leaf = t.exitedLeaves().front();
  const Partitioning p = findRegularPartitioning(t, {leaf});
  EXPECT_TRUE(p.partitions.empty());
  EXPECT_EQ(p.residual, std::vector<NodeId>{leaf});
}

TEST(Partition, ThresholdExceeded) {
  const ExecTree t = memspnTree();
  const Partitioning p = findRegularPartitioning(t, t.exitedLeaves(), 1);
  EXPECT_TRUE(p.exceeded);
  EXPECT_TRUE(p.partitions.empty());
  EXPECT_EQ(p.residual.size(), t.exitedLeaves().size());
}

TEST(Extract, Examples) {
  const ExecTree t = memspnTree();
  const HashValue W = h(truth(true)), G = h(gt(n, lit(0))),
                  B = h(eq(select("s", lit(0)), lit(97))),
                  Y = h(negate(eq(select("s", lit(0)), lit(97))));
  EXPECT_TRUE(extract(t, {W}).isTrue());
  EXPECT_EQ(extract(t, {W}, {W, G, B}),
            conj({gt(n, lit(0)), eq(select("s", lit(0)), lit(97))}));
  EXPECT_EQ(extract(t, {W, G, B}, {W, G, B, G, Y}),
            conj({gt(n, lit(1)), negate(eq(select("s", lit(1)), lit(97)))}));
  EXPECT_THROW(extract(t, {W, W}), Error);
}

TEST(LinearTerm, Examples) {
  EXPECT_EQ(synthesizeLinearTerm({{1, 0}, {2, 1}}), (std::pair<Int, Int>{1, -1}));
  EXPECT_EQ(synthesizeLinearTerm({{0, 5}, {1, 5}, {2, 5}}),
            (std::pair<Int, Int>{0, 5}));
  EXPECT_EQ(synthesizeLinearTerm({{3, 7}}), (std::pair<Int, Int>{0, 7}));
  EXPECT_FALSE(synthesizeLinearTerm({{0, 0}, {1, 1}, {2, 4}}));
  EXPECT_FALSE(synthesizeLinearTerm({{0, 0}, {2, 1}}));
}

TEST(FormulaPatternSynthesis, TableRows) {
  const ExecTree t = memspnTree();
  const auto [miss, bound] = memspnRows(t);
  const Partitioning p = findRegularPartitioning(t, t.exitedLeaves());
  const Formula phi2 = conj({gt(n, x - 1), eq(select("s", x - 1), lit(97))});

  auto fp1 = synthesizeFormulaPattern(t, partitionWith(p, miss[0]));
  ASSERT_TRUE(fp1);
  EXPECT_TRUE(fp1->phi1.isTrue());
  EXPECT_EQ(fp1->phi2, phi2);
  EXPECT_EQ(fp1->phi3,
            conj({gt(n, x), negate(eq(select("s", x), lit(97)))}));

  auto fp2 = synthesizeFormulaPattern(t, partitionWith(p, bound[0]));
  ASSERT_TRUE(fp2);
  EXPECT_TRUE(fp2->phi1.isTrue());
  EXPECT_EQ(fp2->phi2, phi2);
  EXPECT_EQ(fp2->phi3, negate(gt(n, x)));
}

TEST(FormulaPatternSynthesis, NonLinearConstantsRejected) {
  const Program p = parseProgram(R"(program keyed {
  sym byte s[3];
  byte key[3] = {5, 7, 6};
  int i = 0;
  @merge while (i < 3 && s[i] == key[i]) {
    i = i + 1;
  }
  return i;
})");
  BruteForceBackend be;
  const ExecTree t = exploreFirstRegion(p, false, be);
  const Partitioning part = findRegularPartitioning(t, t.exitedLeaves());
  ASSERT_FALSE(part.partitions.empty());
  bool rejected = false;
  for (const RegularPartition &rp : part.partitions)
    if (rp.members.size() > 2)
      rejected = rejected || !synthesizeFormulaPattern(t, rp);
  EXPECT_TRUE(rejected);

  const RunReport r = runFixture(p, Mode::MergePattern, be);
  ASSERT_EQ(r.regions.size(), 1u);
  EXPECT_GT(r.regions[0].fallbacks, 0u);
  const RunReport base = runFixture(p, Mode::Base, be);
  EXPECT_EQ(r.paths.size() > 0, base.paths.size() > 0);
}

TEST(PatternMerge, CounterAndDomain) {
  const ExecTree t = memspnTree();
  const auto [miss, bound] = memspnRows(t);
  const Partitioning p = findRegularPartitioning(t, t.exitedLeaves());
  FreshNames names;
  const RegularPartition &row1 = partitionWith(p, miss[0]);
  const MergedState m1 =
      mergePatternBased(t, row1, *synthesizeFormulaPattern(t, row1), names);
  EXPECT_EQ(m1.kind, MergeKind::Pattern);
  EXPECT_EQ(m1.k, "k!0");
  EXPECT_EQ(m1.kDomain, (std::vector<Int>{0, 1, 2}));
  EXPECT_EQ(m1.state.scalar("count"), var(m1.k));
  EXPECT_TRUE(m1.state.witness);
  EXPECT_TRUE(evaluate(*m1.state.witness, m1.state.pc));

  const RegularPartition &row2 = partitionWith(p, bound[0]);
  const MergedState m2 =
      mergePatternBased(t, row2, *synthesizeFormulaPattern(t, row2), names);
  EXPECT_EQ(m2.k, "k!1");
  EXPECT_EQ(m2.kDomain, (std::vector<Int>{0, 1, 2, 3}));
  EXPECT_EQ(m2.state.scalar("count"), var(m2.k));
  EXPECT_EQ(m2.state.scalar("n"), n);
}

TEST(MergeProperty, PartitionAndPatternInvariants) {
  auto be = defaultBackend();
  std::size_t patterns = 0;
  for (const std::string &name : fixtureNames())
    for (bool inc : {false, true}) {
      const RunReport r =
          runFixture(loadFixture(name), Mode::MergePattern, *be, inc);
      for (const RegionReport &rr : r.regions) {
        const ExecTree &t = rr.tree;
        EXPECT_EQ(countHashCollisions(t), 0u) << name;
        EXPECT_EQ(countPrefixViolations(t), 0u) << name;
        for (const MergedState &m : rr.merged) {
          if (m.kind != MergeKind::Pattern)
            continue;
          ++patterns;
          ASSERT_TRUE(m.pattern && m.formulas);
          EXPECT_FALSE(m.pattern->w2.empty());
          RegularPartition rp{*m.pattern, {}};
          std::set<NodeId> distinct(m.leaves.begin(), m.leaves.end());
          EXPECT_EQ(distinct.size(), m.leaves.size());
          for (std::size_t j = 0; j < m.leaves.size(); ++j) {
            EXPECT_EQ(hashPath(t, m.leaves[j]),
                      m.pattern->word(static_cast<std::size_t>(m.kDomain[j])))
                << name;
            rp.members.push_back({m.leaves[j], m.kDomain[j]});
          }
          EXPECT_TRUE(patternMatches(t, rp, *m.formulas)) << name;
          for (const auto &[v, _] : m.state.mem)
            EXPECT_NE(v, m.k);
          EXPECT_FALSE(mentions(t.node(t.root()).state.pc, m.k));
        }
      }
    }
  EXPECT_GT(patterns, 10u);
}

TEST(MergeProperty, CorrespondenceOnMemspnVariants) {
  for (const std::string chars : {"a", "ab"})
    for (Int m = 2; m <= 4; ++m) {
      auto be = defaultBackend();
      const RunReport r = runFixture(parseProgram(memspnSource(m, chars)),
                                     Mode::MergePattern, *be, true);
      for (const RegionReport &rr : r.regions)
        for (const MergedState &ms : rr.merged)
          if (ms.kind == MergeKind::Pattern) {
            const CorrespondenceResult c = checkCorrespondence(rr.tree, ms);
            EXPECT_TRUE(c.ok) << chars << " m=" << m << ": " << c.detail;
          }
    }
}

TEST(MergeProperty, EncodingSizeIndependentOfBound) {
  std::set<std::size_t> patternSizes;
  std::vector<std::size_t> standardDisjuncts;
  for (Int m = 3; m <= 6; ++m) {
    BruteForceBackend be;
    const ExecTree t =
        exploreFirstRegion(parseProgram(memspnSource(m, "a")), false, be);
    const Partitioning p = findRegularPartitioning(t, t.exitedLeaves());
    FreshNames names;
    for (const RegularPartition &rp : p.partitions)
      patternSizes.insert(nodeCount(
          mergePatternBased(t, rp, *synthesizeFormulaPattern(t, rp), names)
              .state.pc));
    standardDisjuncts.push_back(
        mergeLeavesStandard(t, t.exitedLeaves()).state.pc.operands().size());
  }
  EXPECT_EQ(patternSizes.size(), 2u);
  for (std::size_t j = 1; j < standardDisjuncts.size(); ++j)
    EXPECT_GE(standardDisjuncts[j], standardDisjuncts[j - 1] + 2);
}
