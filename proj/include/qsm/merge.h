//===-- merge.h - Standard and pattern-based state merging ------*- C++ -*-===//
//
// Leaves of an execution tree whose path-hash words share a regular
// structure w1 w2^k w3 are merged into one state whose path constraint uses a
// fresh counter k and a bounded universal quantifier.
//
//===----------------------------------------------------------------------===//
#pragma once

#include "qsm/expr.h"
#include "qsm/symex.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qsm {

using HashWord = std::vector<HashValue>;

/// Structural hashes of the conditions on the root-to-node path.
HashWord hashPath(const ExecTree &t, NodeId n);
/// Sibling conditions have pairwise distinct hashes.
bool checkHashValidity(const ExecTree &t);

/// Live nodes whose path hash equals `w`; throws when there is none.
NodeId nodeByHash(const ExecTree &t, const HashWord &w);
/// tpc-tail from the root to the node hashed `w1`.
Formula extract(const ExecTree &t, const HashWord &w1);
/// tpc-tail between the nodes hashed `w1` and `w2`.
Formula extract(const ExecTree &t, const HashWord &w1, const HashWord &w2);

struct RegularPattern {
  HashWord w1, w2, w3;
  /// w1 w2^k w3.
  HashWord word(std::size_t k) const;
  /// k such that `w` = w1 w2^k w3.
  std::optional<std::size_t> match(const HashWord &w) const;
  friend bool operator==(const RegularPattern &, const RegularPattern &) =
      default;
};

struct PartitionMember {
  NodeId leaf = 0;
  Int k = 0;
};

struct RegularPartition {
  RegularPattern pattern;
  /// Ordered by k.
  std::vector<PartitionMember> members;
};

struct Partitioning {
  std::vector<RegularPartition> partitions;
  std::vector<NodeId> residual;
  /// More partitions than the threshold; everything is residual.
  bool exceeded = false;
};

Partitioning findRegularPartitioning(const ExecTree &t,
                                     const std::vector<NodeId> &group,
                                     std::size_t threshold = 8);

/// Name of the synthesis parameter in formula patterns.
inline constexpr const char *PatternVar = "x!";

struct FormulaPattern {
  Formula phi1;
  Formula phi2; // mentions PatternVar
  Formula phi3; // mentions PatternVar
};

std::optional<FormulaPattern>
synthesizeFormulaPattern(const ExecTree &t, const RegularPartition &p);

/// tpc(leaf) == phi1 && phi2[1/x] && ... && phi2[k/x] && phi3[k/x].
bool patternMatches(const ExecTree &t, const RegularPartition &p,
                    const FormulaPattern &fp);

enum class MergeKind { None, Standard, Pattern };

struct MergedState {
  SymbolicState state;
  MergeKind kind = MergeKind::None;
  std::vector<NodeId> leaves;
  /// Pattern merges only.
  std::string k;
  std::vector<Int> kDomain;
  std::optional<RegularPattern> pattern;
  std::optional<FormulaPattern> formulas;
};

/// Def-2.1 merge: pc is the disjunction of the pcs and every variable an ite
/// chain guarded by them. One state is returned unchanged.
SymbolicState mergeStandard(const std::vector<SymbolicState> &states);
/// Standard merge of exited leaves, guarded by their tree path conditions.
MergedState mergeLeavesStandard(const ExecTree &t,
                                const std::vector<NodeId> &leaves);

/// Source of fresh symbol names (k!0, i!0, ...).
class FreshNames {
public:
  std::string next(const std::string &prefix) {
    return prefix + "!" + std::to_string(counters_[prefix]++);
  }

private:
  std::map<std::string, std::size_t> counters_;
};

MergedState mergePatternBased(const ExecTree &t, const RegularPartition &p,
                              const FormulaPattern &fp, FreshNames &names);

/// Whether every pair of leaves has distinct path hashes.
std::size_t countHashCollisions(const ExecTree &t);
/// Pairs (n1, n2) where hash_path(n1) is a prefix of hash_path(n2) but n1 is
/// not an ancestor of n2.
std::size_t countPrefixViolations(const ExecTree &t);

nlohmann::json toJson(const RegularPattern &p);
nlohmann::json toJson(const FormulaPattern &fp);
nlohmann::json toJson(const MergedState &m);

/// Variable synthesis: a term t(x) with t[k_j/x] equal to each value.
std::optional<Term>
synthesizeValue(const std::vector<std::pair<Int, Term>> &points);

} // namespace qsm
