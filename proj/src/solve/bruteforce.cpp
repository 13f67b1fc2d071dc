//===-- bruteforce.cpp - Bounded model enumeration --------------*- C++ -*-===//
//
// Depth-first search over partial assignments. The formula is evaluated in
// three-valued logic; the first symbol (or array cell) that blocks evaluation
// is the next one to branch on, so only cells that are actually read get
// enumerated.
//
//===----------------------------------------------------------------------===//

#include "qsm/solve.h"

#include <algorithm>
#include <variant>

namespace qsm {

namespace {

enum class Tri { False, True, Unknown };

Tri fromBool(bool b) { return b ? Tri::True : Tri::False; }

class Search {
public:
  Search(const Formula &f, const Domain &d) : f_(f), d_(d) {}

  std::optional<Model> run() {
    if (!dfs())
      return std::nullopt;
    Model m;
    for (const auto &[s, v] : scalars_)
      m.scalars[s] = v;
    for (const auto &[cell, v] : cells_)
      m.arrays[cell.first].set(cell.second, v);
    m.complete(f_);
    return m;
  }

private:
  using Cell = std::pair<std::string, Int>;
  using Want = std::variant<std::monostate, std::string, Cell>;

  const Formula &f_;
  const Domain &d_;
  std::map<std::string, Int> scalars_;
  std::map<Cell, Int> cells_;
  std::vector<std::pair<std::string, Int>> env_;
  Want want_;
  std::uint64_t nodes_ = 0;

  const std::vector<Int> &values(const std::map<std::string, std::vector<Int>> &m,
                                 const std::string &name) const {
    auto it = m.find(name);
    return it == m.end() ? d_.defaults : it->second;
  }

  bool dfs() {
    if (++nodes_ > d_.limit)
      throw SearchLimit("bounded search exceeded " + std::to_string(d_.limit) +
                        " nodes");
    want_ = std::monostate{};
    Tri r = formula(f_);
    if (r != Tri::Unknown)
      return r == Tri::True;
    Want w = want_;
    if (auto *s = std::get_if<std::string>(&w)) {
      for (Int v : values(d_.scalars, *s)) {
        scalars_[*s] = v;
        if (dfs())
          return true;
      }
      scalars_.erase(*s);
      return false;
    }
    if (auto *c = std::get_if<Cell>(&w)) {
      for (Int v : values(d_.cells, c->first)) {
        cells_[*c] = v;
        if (dfs())
          return true;
      }
      cells_.erase(*c);
      return false;
    }
    throw Error("bounded search: undetermined formula without a free symbol");
  }

  void wantSymbol(Want w) {
    if (std::holds_alternative<std::monostate>(want_))
      want_ = std::move(w);
  }

  std::optional<Int> term(const Term &t) {
    switch (t.kind()) {
    case TermKind::Const:
      return t.value();
    case TermKind::Var: {
      for (auto it = env_.rbegin(); it != env_.rend(); ++it)
        if (it->first == t.name())
          return it->second;
      auto it = scalars_.find(t.name());
      if (it != scalars_.end())
        return it->second;
      wantSymbol(t.name());
      return std::nullopt;
    }
    case TermKind::Select: {
      auto idx = term(t.args()[0]);
      if (!idx)
        return std::nullopt;
      Cell c{t.name(), *idx};
      auto it = cells_.find(c);
      if (it != cells_.end())
        return it->second;
      wantSymbol(c);
      return std::nullopt;
    }
    case TermKind::Add: {
      auto a = term(t.args()[0]);
      auto b = term(t.args()[1]);
      if (!a || !b)
        return std::nullopt;
      return *a + *b;
    }
    case TermKind::Mul: {
      auto a = term(t.args()[0]);
      if (!a)
        return std::nullopt;
      return t.value() * *a;
    }
    case TermKind::Ite: {
      Tri g = formula(t.guard());
      if (g == Tri::True)
        return term(t.args()[0]);
      if (g == Tri::False)
        return term(t.args()[1]);
      auto a = term(t.args()[0]);
      auto b = term(t.args()[1]);
      if (a && b && *a == *b)
        return a;
      return std::nullopt;
    }
    }
    return std::nullopt;
  }

  Tri formula(const Formula &f) {
    switch (f.kind()) {
    case FormulaKind::True:
      return Tri::True;
    case FormulaKind::False:
      return Tri::False;
    case FormulaKind::Cmp: {
      auto a = term(f.lhs());
      auto b = term(f.rhs());
      if (!a || !b)
        return Tri::Unknown;
      switch (f.op()) {
      case CmpOp::Eq:
        return fromBool(*a == *b);
      case CmpOp::Ne:
        return fromBool(*a != *b);
      case CmpOp::Lt:
        return fromBool(*a < *b);
      case CmpOp::Le:
        return fromBool(*a <= *b);
      case CmpOp::Gt:
        return fromBool(*a > *b);
      case CmpOp::Ge:
        return fromBool(*a >= *b);
      }
      return Tri::Unknown;
    }
    case FormulaKind::Not: {
      Tri r = formula(f.operands()[0]);
      return r == Tri::Unknown ? r : fromBool(r == Tri::False);
    }
    case FormulaKind::And: {
      Tri acc = Tri::True;
      for (const Formula &g : f.operands()) {
        Tri r = formula(g);
        if (r == Tri::False)
          return r;
        if (r == Tri::Unknown)
          acc = r;
      }
      return acc;
    }
    case FormulaKind::Or: {
      Tri acc = Tri::False;
      for (const Formula &g : f.operands()) {
        Tri r = formula(g);
        if (r == Tri::True)
          return r;
        if (r == Tri::Unknown)
          acc = r;
      }
      return acc;
    }
    case FormulaKind::Implies: {
      Tri a = formula(f.operands()[0]);
      if (a == Tri::False)
        return Tri::True;
      Tri b = formula(f.operands()[1]);
      if (b == Tri::True)
        return Tri::True;
      if (a == Tri::True && b == Tri::False)
        return Tri::False;
      return Tri::Unknown;
    }
    case FormulaKind::Forall: {
      auto lo = term(f.lower());
      auto hi = term(f.upper());
      if (!lo || !hi)
        return Tri::Unknown;
      if (*hi - *lo > (1 << 16))
        throw SearchLimit("quantifier range too large to enumerate");
      Tri acc = Tri::True;
      for (Int v = *lo; v <= *hi; ++v) {
        env_.emplace_back(f.boundVar(), v);
        Tri r = formula(f.body());
        env_.pop_back();
        if (r == Tri::False)
          return r;
        if (r == Tri::Unknown)
          acc = r;
      }
      return acc;
    }
    }
    return Tri::Unknown;
  }
};

void constants(const Term &t, std::vector<Int> &out);

void constants(const Formula &f, std::vector<Int> &out) {
  switch (f.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return;
  case FormulaKind::Cmp:
    constants(f.lhs(), out);
    constants(f.rhs(), out);
    return;
  case FormulaKind::Not:
  case FormulaKind::And:
  case FormulaKind::Or:
  case FormulaKind::Implies:
    for (const Formula &g : f.operands())
      constants(g, out);
    return;
  case FormulaKind::Forall:
    constants(f.lower(), out);
    constants(f.upper(), out);
    constants(f.body(), out);
    return;
  }
}

void constants(const Term &t, std::vector<Int> &out) {
  switch (t.kind()) {
  case TermKind::Const:
    out.push_back(t.value());
    return;
  case TermKind::Ite:
    constants(t.guard(), out);
    break;
  default:
    break;
  }
  for (const Term &a : t.args())
    constants(a, out);
}

} // namespace

std::vector<Int> constantsOf(const Formula &f) {
  std::vector<Int> out;
  constants(f, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Domain domainFor(const Formula &f) {
  std::vector<Int> vals{0};
  for (Int c : constantsOf(f)) {
    vals.push_back(c - 1);
    vals.push_back(c);
    vals.push_back(c + 1);
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  vals.push_back(vals.back() + 1);
  Domain d;
  d.defaults = std::move(vals);
  return d;
}

std::optional<Model> bruteForceModel(const Formula &f, const Domain &d) {
  return Search(f, d).run();
}

SatResult BruteForceBackend::solve(const Formula &f) {
  Domain d = domainFor(f);
  d.limit = limit_;
  try {
    if (auto m = bruteForceModel(f, d))
      return {Outcome::Sat, std::move(m), {}};
    return {Outcome::Unsat, std::nullopt, "no model within the bounded domain"};
  } catch (const SearchLimit &e) {
    return {Outcome::Unknown, std::nullopt, e.what()};
  }
}

SatResult ScriptedBackend::solve(const Formula &f) {
  queries_.push_back(f);
  if (!answers_.empty()) {
    SatResult r = std::move(answers_.front());
    answers_.pop_front();
    return r;
  }
  if (fallback_)
    return fallback_->solve(f);
  return {Outcome::Unknown, std::nullopt, "no scripted answer left"};
}

} // namespace qsm
