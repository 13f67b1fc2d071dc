//===-- symex.h - Symbolic states, execution trees, executor ----*- C++ -*-===//
#pragma once

#include "qsm/expr.h"
#include "qsm/lang.h"
#include "qsm/model.h"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qsm {

struct ArrayChoice;

/// An array in the symbolic store: a symbolic base array (or all zeros, or a
/// guarded choice between two arrays) plus a list of writes, oldest first.
/// Reads fold the writes into ite terms.
struct ArrayValue {
  std::optional<std::string> base;
  Int length = 0;
  std::shared_ptr<const ArrayChoice> choice;
  std::vector<std::pair<Term, Term>> writes;

  Term read(const Term &index) const;
  void write(const Term &index, const Term &value);
  /// Every write index is a constant.
  bool concreteWrites() const;
  friend bool operator==(const ArrayValue &a, const ArrayValue &b);
};

/// ite(guard, then, otherwise) over whole arrays.
struct ArrayChoice {
  Formula guard;
  ArrayValue then;
  ArrayValue otherwise;
  friend bool operator==(const ArrayChoice &a, const ArrayChoice &b);
};

using Value = std::variant<Term, ArrayValue>;

struct SymbolicState {
  Formula pc;
  std::map<std::string, Value> mem;
  std::size_t ic = 0;
  /// A model of `pc` when one is known; used to decide one branch side
  /// without a solver query.
  std::optional<Model> witness;

  const Term &scalar(const std::string &v) const;
  const ArrayValue &array(const std::string &v) const;
};

/// Same instruction counter and the same variables in the store.
bool mergeCompatible(const SymbolicState &a, const SymbolicState &b);

/// ite(g1, v1, ite(g2, v2, ... vn)); equal neighbours collapse.
Value mergeValues(const std::vector<Formula> &guards,
                  const std::vector<const Value *> &values);
/// mergeValues applied to every variable of merge-compatible states.
std::map<std::string, Value>
mergeStores(const std::vector<Formula> &guards,
            const std::vector<const SymbolicState *> &states);

std::string toString(const ArrayValue &a);
/// 16 lowercase hex digits.
std::string hashHex(HashValue h);
std::string toString(const Value &v);
nlohmann::json toJson(const SymbolicState &s);

//===----------------------------------------------------------------------===//
// Execution trees
//===----------------------------------------------------------------------===//

using NodeId = std::size_t;
inline constexpr NodeId NoNode = static_cast<NodeId>(-1);

enum class NodeStatus {
  Active,     // waiting to be (re)run
  Internal,   // has children
  Exited,     // left the region; `final` holds the exit state
  Terminated, // infeasible assumption, failed check, or return
  Removed,    // replaced during incremental merging
};

struct ExecNode {
  NodeId id = 0;
  NodeId parent = NoNode;
  std::vector<NodeId> children;
  Formula cond;
  /// Snapshot taken when the node was created.
  SymbolicState state;
  std::optional<SymbolicState> final;
  NodeStatus status = NodeStatus::Active;
};

class ExecTree {
public:
  explicit ExecTree(SymbolicState rootState);

  NodeId root() const { return 0; }
  const ExecNode &node(NodeId id) const { return nodes_.at(id); }
  ExecNode &node(NodeId id) { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

  NodeId addChild(NodeId parent, Formula cond, SymbolicState state);

  /// Nodes not removed by incremental merging.
  std::vector<NodeId> liveNodes() const;
  std::size_t liveCount() const { return liveNodes().size(); }
  /// Live nodes without children, in id order.
  std::vector<NodeId> leaves() const;
  /// Exited leaves, in id order.
  std::vector<NodeId> exitedLeaves() const;

  /// Nodes from `from` down to `to` inclusive. Throws if `to` is not below
  /// `from`.
  std::vector<NodeId> path(NodeId from, NodeId to) const;
  std::vector<NodeId> path(NodeId to) const { return path(root(), to); }
  Formula tpc(NodeId from, NodeId to) const;
  Formula tpcTail(NodeId from, NodeId to) const;
  Formula tpc(NodeId to) const { return tpc(root(), to); }
  Formula tpcTail(NodeId to) const { return tpcTail(root(), to); }

  bool isAncestor(NodeId anc, NodeId n) const;
  NodeId lca(NodeId a, NodeId b) const;
  std::size_t depth(NodeId n) const;

  /// Marks `n` and its descendants removed and detaches `n` from its parent.
  void removeSubtree(NodeId n);
  /// Replaces `p` (which must have exactly one child) by its child, whose
  /// condition becomes p.cond && child.cond. Returns the child.
  NodeId collapse(NodeId p);

  nlohmann::json toJson() const;

private:
  std::vector<ExecNode> nodes_;
};

//===----------------------------------------------------------------------===//
// Executor
//===----------------------------------------------------------------------===//

/// Decides satisfiability of path constraints.
using FeasibilityOracle = std::function<SatResult(const Formula &)>;

enum class FindingKind { AssertionFailure, OutOfBounds };

struct Finding {
  FindingKind kind = FindingKind::AssertionFailure;
  std::size_t ic = 0;
  SourcePos pos;
  std::string message;
  std::optional<Model> model;
};

std::string toString(FindingKind k);

/// Thrown when the configured instruction budget is exhausted.
class BudgetExceeded : public Error {
public:
  BudgetExceeded(const std::string &msg, std::optional<ExecTree> partial)
      : Error(msg), partial(std::move(partial)) {}
  std::optional<ExecTree> partial;
};

enum class StopReason {
  Branched,   // the path constraint was extended; see successors
  Exited,     // left the current region
  AtRegion,   // reached the head of a merge region
  Returned,   // executed a return
  Terminated, // infeasible or failed
};

struct Successor {
  Formula cond;
  SymbolicState state;
};

struct RunOutcome {
  StopReason reason = StopReason::Terminated;
  /// Final state for Exited / AtRegion / Returned.
  std::optional<SymbolicState> state;
  std::vector<Successor> successors;
};

struct ExploreOptions {
  bool incremental = false;
};

struct ExploreStats {
  std::size_t merges = 0;     // incremental merges performed
  std::size_t nodesCreated = 0;
};

class Executor {
public:
  Executor(const Program &program, const Cfg &cfg, FeasibilityOracle oracle,
           std::size_t stepBudget);

  SymbolicState initialState() const;

  /// Runs `s` until its path constraint is extended or it stops. With a
  /// region, leaving it stops the run; without one, reaching any region head
  /// (other than at the very first instruction) stops it.
  RunOutcome run(SymbolicState s, const Region *region);

  /// Builds the execution tree of `region` starting from `entry`.
  ExecTree exploreRegion(const SymbolicState &entry, const Region &region,
                         const ExploreOptions &opts,
                         ExploreStats *stats = nullptr);

  const std::vector<Finding> &findings() const { return findings_; }
  const std::vector<std::string> &warnings() const { return warnings_; }
  std::size_t steps() const { return steps_; }
  std::size_t queries() const { return queries_; }
  const Cfg &cfg() const { return cfg_; }
  const Liveness &liveness() const { return live_; }

  /// Checks `pc && cond` using the state's witness first.
  SatResult check(const SymbolicState &s, const Formula &cond);

private:
  const Program &program_;
  const Cfg &cfg_;
  Liveness live_;
  FeasibilityOracle oracle_;
  std::size_t budget_;
  std::size_t steps_ = 0;
  std::size_t queries_ = 0;
  std::vector<Finding> findings_;
  std::vector<std::string> warnings_;

  void report(FindingKind kind, const SymbolicState &s,
              const std::optional<Model> &model, const std::string &msg);
  bool sameLiveStore(const SymbolicState &a, const SymbolicState &b) const;
  void mergeIncrementally(ExecTree &tree, NodeId fresh,
                          std::vector<NodeId> &stack, ExploreStats *stats);
};

/// A bounds check produced by an array access.
struct Obligation {
  Formula inBounds;
  SourcePos pos;
  std::string array;
};

/// Evaluates source expressions under a state, collecting bounds checks.
struct Evaluator {
  const SymbolicState &state;
  std::vector<Obligation> obligations;

  Term term(const Expr &e);
  Formula cond(const Expr &e);
};

Term evalTerm(const Expr &e, const SymbolicState &s);
Formula evalCond(const Expr &e, const SymbolicState &s);

/// cmp(op, a, b), with the operands swapped when only `a` is constant.
Formula orientedCmp(CmpOp op, const Term &a, const Term &b);

} // namespace qsm
