//===-- model.cpp - Concrete assignments and evaluation ---------*- C++ -*-===//

#include "qsm/model.h"

#include <sstream>

namespace qsm {

static constexpr Int MaxEnumeration = 1 << 20;

Int ArrayModel::at(Int offset) const {
  auto it = cells.find(offset);
  return it == cells.end() ? fallback : it->second;
}

void ArrayModel::set(Int offset, Int value) { cells[offset] = value; }

void ArrayModel::normalize() {
  for (auto it = cells.begin(); it != cells.end();)
    it = it->second == fallback ? cells.erase(it) : std::next(it);
}

bool operator==(const ArrayModel &a, const ArrayModel &b) {
  ArrayModel x = a, y = b;
  x.normalize();
  y.normalize();
  return x.fallback == y.fallback && x.cells == y.cells;
}

bool operator==(const Model &a, const Model &b) {
  return a.scalars == b.scalars && a.arrays == b.arrays;
}

Model Model::updateSelect(const std::string &a, Int offset, Int value) const {
  Model m = *this;
  m.arrays[a].set(offset, value);
  return m;
}

Model Model::with(const std::string &s, Int value) const {
  Model m = *this;
  m.scalars[s] = value;
  return m;
}

void Model::complete(const Formula &f) {
  Symbols syms = freeSymbols(f);
  for (const std::string &s : syms.scalars)
    scalars.try_emplace(s, 0);
  for (const std::string &a : syms.arrays)
    arrays.try_emplace(a);
}

std::string toString(const Model &m) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto &[name, v] : m.scalars) {
    os << (first ? "" : ", ") << name << " -> " << v;
    first = false;
  }
  for (const auto &[name, arr] : m.arrays) {
    os << (first ? "" : ", ") << name << " -> [";
    bool firstCell = true;
    for (const auto &[off, v] : arr.cells) {
      if (v == arr.fallback)
        continue;
      os << (firstCell ? "" : ", ") << off << ": " << v;
      firstCell = false;
    }
    os << (firstCell ? "" : ", ") << "else: " << arr.fallback << "]";
    first = false;
  }
  os << "}";
  return os.str();
}

std::string toString(Outcome o) {
  switch (o) {
  case Outcome::Sat:
    return "sat";
  case Outcome::Unsat:
    return "unsat";
  case Outcome::Unknown:
    return "unknown";
  }
  return "unknown";
}

Int evaluate(const Model &m, const Term &t) {
  switch (t.kind()) {
  case TermKind::Const:
    return t.value();
  case TermKind::Var: {
    auto it = m.scalars.find(t.name());
    if (it == m.scalars.end())
      throw EvalError("unassigned symbol '" + t.name() + "'");
    return it->second;
  }
  case TermKind::Select: {
    auto it = m.arrays.find(t.name());
    if (it == m.arrays.end())
      throw EvalError("unassigned array '" + t.name() + "'");
    return it->second.at(evaluate(m, t.args()[0]));
  }
  case TermKind::Add:
    return evaluate(m, t.args()[0]) + evaluate(m, t.args()[1]);
  case TermKind::Mul:
    return t.value() * evaluate(m, t.args()[0]);
  case TermKind::Ite:
    return evaluate(m, t.guard()) ? evaluate(m, t.args()[0])
                                  : evaluate(m, t.args()[1]);
  }
  return 0;
}

bool evaluate(const Model &m, const Formula &f) {
  switch (f.kind()) {
  case FormulaKind::True:
    return true;
  case FormulaKind::False:
    return false;
  case FormulaKind::Cmp: {
    Int a = evaluate(m, f.lhs());
    Int b = evaluate(m, f.rhs());
    switch (f.op()) {
    case CmpOp::Eq:
      return a == b;
    case CmpOp::Ne:
      return a != b;
    case CmpOp::Lt:
      return a < b;
    case CmpOp::Le:
      return a <= b;
    case CmpOp::Gt:
      return a > b;
    case CmpOp::Ge:
      return a >= b;
    }
    return false;
  }
  case FormulaKind::Not:
    return !evaluate(m, f.operands()[0]);
  case FormulaKind::And:
    for (const Formula &g : f.operands())
      if (!evaluate(m, g))
        return false;
    return true;
  case FormulaKind::Or:
    for (const Formula &g : f.operands())
      if (evaluate(m, g))
        return true;
    return false;
  case FormulaKind::Implies:
    return !evaluate(m, f.operands()[0]) || evaluate(m, f.operands()[1]);
  case FormulaKind::Forall: {
    Int lo = evaluate(m, f.lower());
    Int hi = evaluate(m, f.upper());
    if (hi - lo > MaxEnumeration)
      throw EvalError("quantifier range too large to enumerate");
    Model local = m;
    for (Int i = lo; i <= hi; ++i) {
      local.scalars[f.boundVar()] = i;
      if (!evaluate(local, f.body()))
        return false;
    }
    return true;
  }
  }
  return false;
}

} // namespace qsm
