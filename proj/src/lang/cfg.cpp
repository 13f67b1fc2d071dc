//===-- cfg.cpp - Lowering, basic blocks and liveness -----------*- C++ -*-===//

#include "qsm/lang.h"

#include <algorithm>
#include <sstream>

namespace qsm {

namespace {

class Lowering {
public:
  Lowering(Cfg &cfg, bool mergeAll) : cfg_(cfg), mergeAll_(mergeAll) {}

  void stmts(const std::vector<Stmt> &ss) {
    for (const Stmt &s : ss)
      stmt(s);
  }

  void item(const Item &it) {
    if (it.stmt) {
      stmt(*it.stmt);
      return;
    }
    const Decl &d = *it.decl;
    if (d.kind == DeclKind::Local && !d.isArray() && !d.init.empty()) {
      Instr i;
      i.kind = InstrKind::Assign;
      i.target = d.name;
      i.exprs = {d.init[0]};
      i.pos = d.pos;
      emit(std::move(i));
    }
  }

  std::size_t emit(Instr i) {
    cfg_.instrs.push_back(std::move(i));
    return cfg_.instrs.size() - 1;
  }

private:
  Cfg &cfg_;
  bool mergeAll_;
  int regionDepth_ = 0;

  std::size_t here() const { return cfg_.instrs.size(); }

  std::size_t jump(SourcePos pos) {
    Instr i;
    i.kind = InstrKind::Jump;
    i.pos = pos;
    return emit(std::move(i));
  }

  /// Emits a short-circuit evaluation of `e`; returns the indices of the
  /// instructions whose true / false exits still need patching.
  void cond(const Expr &e, std::vector<std::pair<std::size_t, bool>> &onTrue,
            std::vector<std::pair<std::size_t, bool>> &onFalse) {
    if (e.kind == ExprKind::Binary &&
        (e.binary == BinaryOp::And || e.binary == BinaryOp::Or)) {
      std::vector<std::pair<std::size_t, bool>> t, f;
      cond(e.children[0], t, f);
      auto &cont = e.binary == BinaryOp::And ? t : f;
      patch(cont, here());
      auto &done = e.binary == BinaryOp::And ? f : t;
      (e.binary == BinaryOp::And ? onFalse : onTrue)
          .insert((e.binary == BinaryOp::And ? onFalse : onTrue).end(),
                  done.begin(), done.end());
      cond(e.children[1], onTrue, onFalse);
      return;
    }
    if (e.kind == ExprKind::Unary && e.unary == UnaryOp::Not &&
        e.children[0].kind == ExprKind::Binary &&
        (e.children[0].binary == BinaryOp::And ||
         e.children[0].binary == BinaryOp::Or)) {
      cond(e.children[0], onFalse, onTrue);
      return;
    }
    Instr i;
    i.kind = InstrKind::Branch;
    i.exprs = {e};
    i.pos = e.pos;
    std::size_t at = emit(std::move(i));
    onTrue.emplace_back(at, true);
    onFalse.emplace_back(at, false);
  }

  void patch(const std::vector<std::pair<std::size_t, bool>> &sites,
             std::size_t target) {
    for (auto [at, which] : sites) {
      if (cfg_.instrs[at].kind == InstrKind::Jump || which)
        cfg_.instrs[at].onTrue = target;
      else
        cfg_.instrs[at].onFalse = target;
    }
  }

  void stmt(const Stmt &s) {
    switch (s.kind) {
    case StmtKind::Assign:
    case StmtKind::Store:
    case StmtKind::Assume:
    case StmtKind::Assert:
    case StmtKind::Return: {
      Instr i;
      i.kind = s.kind == StmtKind::Assign   ? InstrKind::Assign
               : s.kind == StmtKind::Store  ? InstrKind::Store
               : s.kind == StmtKind::Assume ? InstrKind::Assume
               : s.kind == StmtKind::Assert ? InstrKind::Assert
                                            : InstrKind::Return;
      i.target = s.target;
      i.exprs = s.exprs;
      i.pos = s.pos;
      emit(std::move(i));
      return;
    }
    case StmtKind::If: {
      std::vector<std::pair<std::size_t, bool>> t, f;
      cond(s.exprs[0], t, f);
      patch(t, here());
      stmts(s.body);
      if (s.orelse.empty()) {
        patch(f, here());
        return;
      }
      std::size_t skip = jump(s.pos);
      patch(f, here());
      stmts(s.orelse);
      patch({{skip, true}}, here());
      return;
    }
    case StmtKind::While: {
      const bool isRegion = (s.merge || mergeAll_) && regionDepth_ == 0;
      std::size_t head = here();
      std::vector<std::pair<std::size_t, bool>> t, f;
      cond(s.exprs[0], t, f);
      patch(t, here());
      if (isRegion)
        ++regionDepth_;
      stmts(s.body);
      if (isRegion)
        --regionDepth_;
      std::size_t back = jump(s.pos);
      cfg_.instrs[back].onTrue = head;
      patch(f, here());
      Region r{head, here(), s.pos};
      cfg_.loops.push_back(r);
      if (isRegion)
        cfg_.regions.push_back(r);
      return;
    }
    }
  }
};

} // namespace

std::size_t Cfg::blockOf(std::size_t ic) const {
  for (std::size_t b = 0; b < blocks.size(); ++b)
    if (blocks[b].first <= ic && ic <= blocks[b].last)
      return b;
  throw Error("instruction " + std::to_string(ic) + " is not in any block");
}

std::vector<std::size_t> Cfg::successors(std::size_t ic) const {
  const Instr &i = instrs.at(ic);
  switch (i.kind) {
  case InstrKind::Branch:
    return {i.onTrue, i.onFalse};
  case InstrKind::Jump:
    return {i.onTrue};
  case InstrKind::Return:
    return {};
  default:
    return {ic + 1};
  }
}

std::size_t Cfg::branchCount() const {
  return static_cast<std::size_t>(
      std::count_if(instrs.begin(), instrs.end(), [](const Instr &i) {
        return i.kind == InstrKind::Branch;
      }));
}

Cfg lowerToCfg(const Program &p, bool mergeAllLoops) {
  Cfg cfg;
  Lowering low(cfg, mergeAllLoops);
  for (const Item &it : p.items)
    low.item(it);
  if (cfg.instrs.empty() || cfg.instrs.back().kind != InstrKind::Return ||
      std::any_of(cfg.instrs.begin(), cfg.instrs.end(), [&](const Instr &i) {
        return (i.kind == InstrKind::Jump && i.onTrue == cfg.instrs.size()) ||
               (i.kind == InstrKind::Branch &&
                (i.onTrue == cfg.instrs.size() ||
                 i.onFalse == cfg.instrs.size()));
      })) {
    Instr ret;
    ret.kind = InstrKind::Return;
    low.emit(std::move(ret));
  }

  std::vector<bool> leader(cfg.instrs.size(), false);
  leader[0] = true;
  for (std::size_t ic = 0; ic < cfg.instrs.size(); ++ic) {
    const Instr &i = cfg.instrs[ic];
    if (i.kind == InstrKind::Branch || i.kind == InstrKind::Jump ||
        i.kind == InstrKind::Return) {
      if (ic + 1 < cfg.instrs.size())
        leader[ic + 1] = true;
      for (std::size_t s : cfg.successors(ic))
        leader[s] = true;
    }
  }
  for (std::size_t ic = 0; ic < cfg.instrs.size(); ++ic) {
    if (leader[ic])
      cfg.blocks.push_back({ic, ic, {}});
    else
      cfg.blocks.back().last = ic;
  }
  for (BasicBlock &b : cfg.blocks)
    for (std::size_t s : cfg.successors(b.last))
      b.succs.push_back(cfg.blockOf(s));
  return cfg;
}

//===----------------------------------------------------------------------===//
// Liveness
//===----------------------------------------------------------------------===//

namespace {

void uses(const Expr &e, std::set<std::string> &out) {
  if (e.kind == ExprKind::Name || e.kind == ExprKind::Index)
    out.insert(e.name);
  for (const Expr &c : e.children)
    uses(c, out);
}

} // namespace

Liveness computeLiveness(const Cfg &cfg) {
  const std::size_t n = cfg.instrs.size();
  std::vector<std::set<std::string>> use(n);
  std::vector<std::string> def(n);
  for (std::size_t ic = 0; ic < n; ++ic) {
    const Instr &i = cfg.instrs[ic];
    for (const Expr &e : i.exprs)
      uses(e, use[ic]);
    if (i.kind == InstrKind::Store)
      use[ic].insert(i.target);
    if (i.kind == InstrKind::Assign)
      def[ic] = i.target;
  }

  Liveness live;
  live.liveIn.assign(n, {});
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t k = n; k-- > 0;) {
      std::set<std::string> out;
      for (std::size_t s : cfg.successors(k))
        out.insert(live.liveIn[s].begin(), live.liveIn[s].end());
      if (!def[k].empty())
        out.erase(def[k]);
      out.insert(use[k].begin(), use[k].end());
      if (out != live.liveIn[k]) {
        live.liveIn[k] = std::move(out);
        changed = true;
      }
    }
  }
  return live;
}

std::string toString(const Instr &i) {
  std::ostringstream os;
  switch (i.kind) {
  case InstrKind::Assign:
    os << i.target << " = " << printExpr(i.exprs[0]);
    break;
  case InstrKind::Store:
    os << i.target << "[" << printExpr(i.exprs[0])
       << "] = " << printExpr(i.exprs[1]);
    break;
  case InstrKind::Branch:
    os << "branch " << printExpr(i.exprs[0]) << " ? " << i.onTrue << " : "
       << i.onFalse;
    break;
  case InstrKind::Jump:
    os << "jump " << i.onTrue;
    break;
  case InstrKind::Assume:
    os << "assume " << printExpr(i.exprs[0]);
    break;
  case InstrKind::Assert:
    os << "assert " << printExpr(i.exprs[0]);
    break;
  case InstrKind::Return:
    os << "return";
    if (!i.exprs.empty())
      os << " " << printExpr(i.exprs[0]);
    break;
  }
  return os.str();
}

} // namespace qsm
