//===-- executor.cpp - Instruction stepping and region exploration --------===//

#include "qsm/symex.h"

#include <algorithm>

namespace qsm {

std::string toString(FindingKind k) {
  return k == FindingKind::AssertionFailure ? "assertion-failure"
                                            : "out-of-bounds";
}

Executor::Executor(const Program &program, const Cfg &cfg,
                   FeasibilityOracle oracle, std::size_t stepBudget)
    : program_(program), cfg_(cfg), live_(computeLiveness(cfg)),
      oracle_(std::move(oracle)), budget_(stepBudget) {}

SymbolicState Executor::initialState() const {
  SymbolicState s;
  s.pc = truth(true);
  s.ic = 0;
  s.witness = Model{};
  for (const Decl *d : program_.decls()) {
    if (!d->isArray()) {
      s.mem.emplace(d->name, d->kind == DeclKind::Input ? var(d->name) : lit(0));
      continue;
    }
    ArrayValue a;
    a.length = *d->length;
    if (d->kind == DeclKind::Input) {
      a.base = d->name;
    } else if (d->text) {
      for (std::size_t i = 0; i < d->text->size() && Int(i) < a.length; ++i)
        if ((*d->text)[i] != 0)
          a.write(lit(Int(i)), lit(static_cast<unsigned char>((*d->text)[i])));
    } else {
      for (std::size_t i = 0; i < d->init.size() && Int(i) < a.length; ++i) {
        Term v = evalTerm(d->init[i], s);
        if (!v.isConst(0))
          a.write(lit(Int(i)), v);
      }
    }
    s.mem.emplace(d->name, std::move(a));
  }
  return s;
}

SatResult Executor::check(const SymbolicState &s, const Formula &cond) {
  if (cond.isFalse())
    return {Outcome::Unsat, std::nullopt, {}};
  Formula f = conj({s.pc, cond});
  if (f.isFalse())
    return {Outcome::Unsat, std::nullopt, {}};
  if (s.witness) {
    Model m = *s.witness;
    m.complete(cond);
    try {
      if (evaluate(m, cond))
        return {Outcome::Sat, std::move(m), {}};
    } catch (const EvalError &) {
    }
  }
  ++queries_;
  SatResult r = oracle_(f);
  if (r.outcome == Outcome::Unknown)
    warnings_.push_back("solver returned unknown for a path condition at "
                        "instruction " +
                        std::to_string(s.ic) +
                        "; treating the branch as feasible");
  return r;
}

void Executor::report(FindingKind kind, const SymbolicState &s,
                      const std::optional<Model> &model,
                      const std::string &msg) {
  for (const Finding &f : findings_)
    if (f.kind == kind && f.ic == s.ic)
      return;
  Finding f;
  f.kind = kind;
  f.ic = s.ic;
  f.pos = cfg_.instrs[s.ic].pos;
  f.message = msg;
  f.model = model;
  findings_.push_back(std::move(f));
}

namespace {

bool implied(const SymbolicState &s, const Formula &c) {
  if (c.isTrue())
    return true;
  for (const Formula &x : conjuncts(s.pc))
    if (x == c)
      return true;
  return false;
}

bool feasible(const SatResult &f) { return f.outcome != Outcome::Unsat; }

SymbolicState extended(const SymbolicState &s, const Formula &c,
                       std::size_t ic, const SatResult &f) {
  SymbolicState r = s;
  r.pc = conj({s.pc, c});
  r.ic = ic;
  r.witness = f.model;
  return r;
}

} // namespace

RunOutcome Executor::run(SymbolicState s, const Region *region) {
  RunOutcome out;
  auto stop = [&](StopReason why) {
    out.reason = why;
    out.state = std::move(s);
    return out;
  };
  // Checks a condition that must hold for the current instruction to proceed.
  // Returns false when the run stopped (out is filled in).
  auto obligation = [&](const Formula &ok, FindingKind kind,
                        const std::string &msg) -> bool {
    if (implied(s, ok))
      return true;
    if (ok.isFalse()) {
      report(kind, s, s.witness, msg);
      stop(StopReason::Terminated);
      return false;
    }
    SatResult bad = check(s, negate(ok));
    if (feasible(bad))
      report(kind, s, bad.model, msg);
    if (!feasible(bad))
      return true;
    SatResult good = check(s, ok);
    if (!feasible(good)) {
      stop(StopReason::Terminated);
      return false;
    }
    out.reason = StopReason::Branched;
    out.successors.push_back({ok, extended(s, ok, s.ic, good)});
    return false;
  };

  for (;;) {
    if (region && !region->contains(s.ic))
      return stop(StopReason::Exited);
    if (!region && std::any_of(cfg_.regions.begin(), cfg_.regions.end(),
                               [&](const Region &r) { return r.head == s.ic; }))
      return stop(StopReason::AtRegion);
    if (s.ic >= cfg_.instrs.size())
      throw Error("instruction counter out of range");
    if (++steps_ > budget_)
      throw BudgetExceeded("step budget of " + std::to_string(budget_) +
                               " instructions exceeded",
                           std::nullopt);

    const Instr &in = cfg_.instrs[s.ic];
    Evaluator ev{s, {}};
    Term value;
    Term index;
    Formula c;
    switch (in.kind) {
    case InstrKind::Assign:
    case InstrKind::Return:
      if (!in.exprs.empty())
        value = ev.term(in.exprs[0]);
      break;
    case InstrKind::Store: {
      index = ev.term(in.exprs[0]);
      value = ev.term(in.exprs[1]);
      const ArrayValue &a = s.array(in.target);
      ev.obligations.push_back(
          {inRange(lit(0), index, lit(a.length - 1)), in.pos, in.target});
      break;
    }
    case InstrKind::Branch:
    case InstrKind::Assume:
    case InstrKind::Assert:
      c = ev.cond(in.exprs[0]);
      break;
    case InstrKind::Jump:
      break;
    }
    for (const Obligation &o : ev.obligations)
      if (!obligation(o.inBounds, FindingKind::OutOfBounds,
                      "index out of bounds for array '" + o.array + "'"))
        return out;

    switch (in.kind) {
    case InstrKind::Assign:
      s.mem[in.target] = value;
      ++s.ic;
      break;
    case InstrKind::Store:
      std::get<ArrayValue>(s.mem[in.target]).write(index, value);
      ++s.ic;
      break;
    case InstrKind::Jump:
      s.ic = in.onTrue;
      break;
    case InstrKind::Return:
      return stop(StopReason::Returned);
    case InstrKind::Assume: {
      if (c.isFalse())
        return stop(StopReason::Terminated);
      if (implied(s, c)) {
        ++s.ic;
        break;
      }
      SatResult good = check(s, c);
      if (!feasible(good))
        return stop(StopReason::Terminated);
      if (!feasible(check(s, negate(c)))) {
        ++s.ic;
        break;
      }
      out.reason = StopReason::Branched;
      out.successors.push_back({c, extended(s, c, s.ic + 1, good)});
      return out;
    }
    case InstrKind::Assert:
      if (!obligation(c, FindingKind::AssertionFailure, "assertion failed")) {
        for (Successor &succ : out.successors)
          ++succ.state.ic;
        return out;
      }
      ++s.ic;
      break;
    case InstrKind::Branch: {
      if (c.isTrue() || implied(s, c)) {
        s.ic = in.onTrue;
        break;
      }
      if (c.isFalse() || implied(s, negate(c))) {
        s.ic = in.onFalse;
        break;
      }
      SatResult t = check(s, c);
      SatResult f = check(s, negate(c));
      if (feasible(t))
        out.successors.push_back({c, extended(s, c, in.onTrue, t)});
      if (feasible(f))
        out.successors.push_back(
            {negate(c), extended(s, negate(c), in.onFalse, f)});
      if (out.successors.empty())
        return stop(StopReason::Terminated);
      out.reason = StopReason::Branched;
      return out;
    }
    }
  }
}

bool Executor::sameLiveStore(const SymbolicState &a,
                             const SymbolicState &b) const {
  if (!mergeCompatible(a, b))
    return false;
  if (a.ic >= live_.liveIn.size())
    return a.mem == b.mem;
  for (const std::string &v : live_.liveIn[a.ic])
    if (!(a.mem.at(v) == b.mem.at(v)))
      return false;
  return true;
}

void Executor::mergeIncrementally(ExecTree &tree, NodeId fresh,
                                  std::vector<NodeId> &stack,
                                  ExploreStats *stats) {
  NodeId n = fresh;
  for (;;) {
    const ExecNode &nn = tree.node(n);
    NodeId best = NoNode;
    std::size_t bestDepth = 0;
    for (NodeId m : tree.liveNodes()) {
      const ExecNode &mn = tree.node(m);
      if (m == n || mn.status == NodeStatus::Terminated ||
          mn.state.ic != nn.state.ic)
        continue;
      if (tree.isAncestor(m, n) || tree.isAncestor(n, m))
        continue;
      NodeId l = tree.lca(m, n);
      if (l != mn.parent && l != nn.parent)
        continue;
      if (!sameLiveStore(mn.state, nn.state))
        continue;
      std::size_t d = tree.depth(m);
      if (best == NoNode || d < bestDepth) {
        best = m;
        bestDepth = d;
      }
    }
    if (best == NoNode)
      return;

    const NodeId m = best;
    const NodeId l = tree.lca(m, n);
    const NodeId pm = tree.node(m).parent, pn = tree.node(n).parent;
    Formula gm = tree.tpcTail(l, m), gn = tree.tpcTail(l, n);

    SymbolicState merged;
    merged.ic = tree.node(n).state.ic;
    Formula cond = disj({gm, gn});
    merged.pc = conj({tree.node(l).state.pc, cond});
    merged.mem = mergeStores({gm, gn}, {&tree.node(m).state, &tree.node(n).state});
    merged.witness = tree.node(m).state.witness;
    if (merged.witness) {
      Model w = *merged.witness;
      w.complete(merged.pc);
      try {
        if (!evaluate(w, merged.pc))
          merged.witness.reset();
      } catch (const EvalError &) {
        merged.witness.reset();
      }
    }

    const auto &lc = tree.node(l).children;
    std::size_t slot = std::find(lc.begin(), lc.end(), pm == l ? m : n) -
                       lc.begin();
    tree.removeSubtree(m);
    tree.removeSubtree(n);
    NodeId nw = tree.addChild(l, cond, std::move(merged));
    auto &children = tree.node(l).children;
    children.pop_back();
    children.insert(children.begin() +
                        static_cast<std::ptrdiff_t>(
                            std::min(slot, children.size())),
                    nw);

    for (NodeId x : {pm, pn}) {
      while (x != l && tree.node(x).status != NodeStatus::Removed) {
        ExecNode &xn = tree.node(x);
        if (xn.children.empty()) {
          NodeId up = xn.parent;
          tree.removeSubtree(x);
          x = up;
          continue;
        }
        if (xn.children.size() == 1)
          tree.collapse(x);
        break;
      }
    }
    if (l != tree.root() && tree.node(l).children.size() == 1)
      tree.collapse(l);

    stack.erase(std::remove_if(stack.begin(), stack.end(),
                               [&](NodeId id) {
                                 return tree.node(id).status ==
                                        NodeStatus::Removed;
                               }),
                stack.end());
    stack.push_back(nw);
    if (stats)
      ++stats->merges;
    n = nw;
  }
}

ExecTree Executor::exploreRegion(const SymbolicState &entry,
                                 const Region &region,
                                 const ExploreOptions &opts,
                                 ExploreStats *stats) {
  ExecTree tree(entry);
  std::vector<NodeId> stack{tree.root()};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (tree.node(id).status != NodeStatus::Active)
      continue;
    RunOutcome out;
    try {
      out = run(tree.node(id).state, &region);
    } catch (const BudgetExceeded &e) {
      throw BudgetExceeded(e.what(), tree);
    }
    ExecNode &node = tree.node(id);
    switch (out.reason) {
    case StopReason::Exited:
      node.status = NodeStatus::Exited;
      node.final = std::move(out.state);
      break;
    case StopReason::Returned:
      node.status = NodeStatus::Terminated;
      node.final = std::move(out.state);
      break;
    case StopReason::Terminated:
    case StopReason::AtRegion:
      node.status = NodeStatus::Terminated;
      break;
    case StopReason::Branched: {
      std::vector<NodeId> kids;
      for (Successor &succ : out.successors)
        kids.push_back(tree.addChild(id, succ.cond, std::move(succ.state)));
      if (stats)
        stats->nodesCreated += kids.size();
      for (auto it = kids.rbegin(); it != kids.rend(); ++it)
        stack.push_back(*it);
      if (opts.incremental)
        for (NodeId k : kids)
          if (tree.node(k).status == NodeStatus::Active)
            mergeIncrementally(tree, k, stack, stats);
      break;
    }
    }
  }
  return tree;
}

} // namespace qsm
