//===-- expr_ops.cpp - Traversals over terms and formulas -------*- C++ -*-===//

#include "qsm/expr.h"

#include <algorithm>
#include <sstream>

namespace qsm {

namespace {

void checkArrayUse(const Term &t, std::string_view v) {
  if (t.kind() == TermKind::Select && t.name() == v)
    throw SortError("symbol '" + std::string(v) +
                    "' is an array and cannot be replaced by a term");
}

std::string freshBinder(const std::string &base, const Term &repl,
                        const Formula &body) {
  std::string candidate = base + "'";
  while (mentions(repl, candidate) || mentions(body, candidate))
    candidate += "'";
  return candidate;
}

} // namespace

Term substitute(const Term &t, std::string_view v, const Term &repl) {
  checkArrayUse(t, v);
  switch (t.kind()) {
  case TermKind::Const:
    return t;
  case TermKind::Var:
    return t.name() == v ? repl : t;
  case TermKind::Select: {
    Term idx = substitute(t.args()[0], v, repl);
    return idx == t.args()[0] ? t : select(t.name(), idx);
  }
  case TermKind::Add:
    return add(substitute(t.args()[0], v, repl),
               substitute(t.args()[1], v, repl));
  case TermKind::Mul:
    return mul(t.value(), substitute(t.args()[0], v, repl));
  case TermKind::Ite:
    return ite(substitute(t.guard(), v, repl),
               substitute(t.args()[0], v, repl),
               substitute(t.args()[1], v, repl));
  }
  return t;
}

Formula substitute(const Formula &f, std::string_view v, const Term &repl) {
  switch (f.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return f;
  case FormulaKind::Cmp:
    return cmp(f.op(), substitute(f.lhs(), v, repl),
               substitute(f.rhs(), v, repl));
  case FormulaKind::Not:
    return negate(substitute(f.operands()[0], v, repl));
  case FormulaKind::And:
  case FormulaKind::Or: {
    std::vector<Formula> ops;
    ops.reserve(f.operands().size());
    for (const Formula &g : f.operands())
      ops.push_back(substitute(g, v, repl));
    return f.kind() == FormulaKind::And ? conj(ops) : disj(ops);
  }
  case FormulaKind::Implies:
    return implies(substitute(f.operands()[0], v, repl),
                   substitute(f.operands()[1], v, repl));
  case FormulaKind::Forall: {
    Term lo = substitute(f.lower(), v, repl);
    Term hi = substitute(f.upper(), v, repl);
    if (f.boundVar() == v)
      return forallRange(f.boundVar(), lo, hi, f.body());
    if (!mentions(repl, f.boundVar()))
      return forallRange(f.boundVar(), lo, hi,
                         substitute(f.body(), v, repl));
    std::string fresh = freshBinder(f.boundVar(), repl, f.body());
    Formula renamed = substitute(f.body(), f.boundVar(), var(fresh));
    return forallRange(fresh, lo, hi, substitute(renamed, v, repl));
  }
  }
  return f;
}

std::vector<Formula> conjuncts(const Formula &f) {
  if (f.isTrue())
    return {};
  if (f.kind() == FormulaKind::And)
    return {f.operands().begin(), f.operands().end()};
  return {f};
}

namespace {

void addUnique(std::vector<std::string> &xs, const std::string &s) {
  if (std::find(xs.begin(), xs.end(), s) == xs.end())
    xs.push_back(s);
}

void symbolsOf(const Term &t, std::vector<std::string> &bound, Symbols &out);

void symbolsOf(const Formula &f, std::vector<std::string> &bound,
               Symbols &out) {
  switch (f.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return;
  case FormulaKind::Cmp:
    symbolsOf(f.lhs(), bound, out);
    symbolsOf(f.rhs(), bound, out);
    return;
  case FormulaKind::Forall:
    symbolsOf(f.lower(), bound, out);
    symbolsOf(f.upper(), bound, out);
    bound.push_back(f.boundVar());
    symbolsOf(f.body(), bound, out);
    bound.pop_back();
    return;
  default:
    for (const Formula &g : f.operands())
      symbolsOf(g, bound, out);
  }
}

void symbolsOf(const Term &t, std::vector<std::string> &bound, Symbols &out) {
  switch (t.kind()) {
  case TermKind::Const:
    return;
  case TermKind::Var:
    if (std::find(bound.begin(), bound.end(), t.name()) == bound.end())
      addUnique(out.scalars, t.name());
    return;
  case TermKind::Select:
    addUnique(out.arrays, t.name());
    symbolsOf(t.args()[0], bound, out);
    return;
  case TermKind::Ite:
    symbolsOf(t.guard(), bound, out);
    break;
  default:
    break;
  }
  for (const Term &a : t.args())
    symbolsOf(a, bound, out);
}

} // namespace

void collectFreeSymbols(const Formula &f, Symbols &out) {
  std::vector<std::string> bound;
  symbolsOf(f, bound, out);
}

void collectFreeSymbols(const Term &t, Symbols &out) {
  std::vector<std::string> bound;
  symbolsOf(t, bound, out);
}

Symbols freeSymbols(const Formula &f) {
  Symbols s;
  collectFreeSymbols(f, s);
  return s;
}

Symbols freeSymbols(const Term &t) {
  Symbols s;
  collectFreeSymbols(t, s);
  return s;
}

void collectSelects(const Term &t, std::vector<Term> &out) {
  if (t.kind() == TermKind::Select)
    out.push_back(t);
  if (t.kind() == TermKind::Ite)
    collectSelects(t.guard(), out);
  for (const Term &a : t.args())
    collectSelects(a, out);
}

void collectSelects(const Formula &f, std::vector<Term> &out) {
  switch (f.kind()) {
  case FormulaKind::Cmp:
  case FormulaKind::Forall:
    collectSelects(f.lhs(), out);
    collectSelects(f.rhs(), out);
    break;
  default:
    break;
  }
  for (const Formula &g : f.operands())
    collectSelects(g, out);
}

bool mentions(const Term &t, std::string_view v) {
  switch (t.kind()) {
  case TermKind::Const:
    return false;
  case TermKind::Var:
    return t.name() == v;
  case TermKind::Ite:
    if (mentions(t.guard(), v))
      return true;
    break;
  default:
    break;
  }
  return std::any_of(t.args().begin(), t.args().end(),
                     [&](const Term &a) { return mentions(a, v); });
}

bool mentions(const Formula &f, std::string_view v) {
  switch (f.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return false;
  case FormulaKind::Cmp:
    return mentions(f.lhs(), v) || mentions(f.rhs(), v);
  case FormulaKind::Forall:
    if (mentions(f.lower(), v) || mentions(f.upper(), v))
      return true;
    return f.boundVar() != v && mentions(f.body(), v);
  default:
    return std::any_of(f.operands().begin(), f.operands().end(),
                       [&](const Formula &g) { return mentions(g, v); });
  }
}

bool isQuantifierFree(const Formula &f) {
  if (f.kind() == FormulaKind::Forall)
    return false;
  return std::all_of(f.operands().begin(), f.operands().end(),
                     [](const Formula &g) { return isQuantifierFree(g); });
}

std::size_t nodeCount(const Term &t) {
  std::size_t n = 1;
  if (t.kind() == TermKind::Ite)
    n += nodeCount(t.guard());
  for (const Term &a : t.args())
    n += nodeCount(a);
  return n;
}

std::size_t nodeCount(const Formula &f) {
  std::size_t n = 1;
  if (f.kind() == FormulaKind::Cmp || f.kind() == FormulaKind::Forall)
    n += nodeCount(f.lhs()) + nodeCount(f.rhs());
  for (const Formula &g : f.operands())
    n += nodeCount(g);
  return n;
}

Formula negationNormalForm(const Formula &f) {
  switch (f.kind()) {
  case FormulaKind::And:
  case FormulaKind::Or: {
    std::vector<Formula> ops;
    for (const Formula &g : f.operands())
      ops.push_back(negationNormalForm(g));
    return f.kind() == FormulaKind::And ? conj(ops) : disj(ops);
  }
  case FormulaKind::Implies:
    return disj({negationNormalForm(negate(f.operands()[0])),
                 negationNormalForm(f.operands()[1])});
  case FormulaKind::Forall:
    return forallRange(f.boundVar(), f.lower(), f.upper(),
                       negationNormalForm(f.body()));
  case FormulaKind::Not:
    break;
  default:
    return f;
  }
  const Formula &g = f.operands()[0];
  switch (g.kind()) {
  case FormulaKind::Cmp:
    return cmp(negateOp(g.op()), g.lhs(), g.rhs());
  case FormulaKind::And:
  case FormulaKind::Or: {
    std::vector<Formula> ops;
    for (const Formula &h : g.operands())
      ops.push_back(negationNormalForm(negate(h)));
    return g.kind() == FormulaKind::And ? disj(ops) : conj(ops);
  }
  case FormulaKind::Implies:
    return conj({negationNormalForm(g.operands()[0]),
                 negationNormalForm(negate(g.operands()[1]))});
  default:
    return f;
  }
}

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

std::string toString(CmpOp op) {
  switch (op) {
  case CmpOp::Eq:
    return "=";
  case CmpOp::Ne:
    return "!=";
  case CmpOp::Lt:
    return "<";
  case CmpOp::Le:
    return "<=";
  case CmpOp::Gt:
    return ">";
  case CmpOp::Ge:
    return ">=";
  }
  return "?";
}

namespace {

void print(std::ostream &os, const Term &t);
void print(std::ostream &os, const Formula &f, bool nested);

void printSummand(std::ostream &os, const Term &t, bool first) {
  if (t.kind() == TermKind::Const) {
    if (first)
      os << t.value();
    else if (t.value() < 0)
      os << " - " << -t.value();
    else
      os << " + " << t.value();
    return;
  }
  if (t.kind() == TermKind::Mul && t.value() < 0 && !first) {
    os << " - ";
    if (t.value() != -1)
      os << -t.value() << "*";
    print(os, t.args()[0]);
    return;
  }
  if (!first)
    os << " + ";
  print(os, t);
}

void printSum(std::ostream &os, const Term &t, bool &first) {
  if (t.kind() == TermKind::Add) {
    printSum(os, t.args()[0], first);
    printSum(os, t.args()[1], first);
    return;
  }
  printSummand(os, t, first);
  first = false;
}

void print(std::ostream &os, const Term &t) {
  switch (t.kind()) {
  case TermKind::Const:
    os << t.value();
    return;
  case TermKind::Var:
    os << t.name();
    return;
  case TermKind::Select:
    os << t.name() << "[";
    print(os, t.args()[0]);
    os << "]";
    return;
  case TermKind::Add: {
    bool first = true;
    printSum(os, t, first);
    return;
  }
  case TermKind::Mul:
    if (t.value() == -1)
      os << "-";
    else
      os << t.value() << "*";
    print(os, t.args()[0]);
    return;
  case TermKind::Ite:
    os << "ite(";
    print(os, t.guard(), false);
    os << ", ";
    print(os, t.args()[0]);
    os << ", ";
    print(os, t.args()[1]);
    os << ")";
    return;
  }
}

bool isRangePair(const Formula &a, const Formula &b) {
  return a.kind() == FormulaKind::Cmp && b.kind() == FormulaKind::Cmp &&
         a.op() == CmpOp::Le && b.op() == CmpOp::Le && a.rhs() == b.lhs();
}

void print(std::ostream &os, const Formula &f, bool nested) {
  switch (f.kind()) {
  case FormulaKind::True:
    os << "true";
    return;
  case FormulaKind::False:
    os << "false";
    return;
  case FormulaKind::Cmp:
    print(os, f.lhs());
    os << " " << toString(f.op()) << " ";
    print(os, f.rhs());
    return;
  case FormulaKind::Not:
    os << "!(";
    print(os, f.operands()[0], false);
    os << ")";
    return;
  case FormulaKind::Forall:
    os << "(forall " << f.boundVar() << ". ";
    print(os, f.lower());
    os << " <= " << f.boundVar() << " <= ";
    print(os, f.upper());
    os << " -> ";
    print(os, f.body(), true);
    os << ")";
    return;
  case FormulaKind::Implies:
    if (nested)
      os << "(";
    print(os, f.operands()[0], true);
    os << " -> ";
    print(os, f.operands()[1], true);
    if (nested)
      os << ")";
    return;
  case FormulaKind::And:
  case FormulaKind::Or: {
    const char *sep = f.kind() == FormulaKind::And ? " && " : " || ";
    if (nested)
      os << "(";
    auto ops = f.operands();
    for (std::size_t i = 0; i < ops.size(); ++i) {
      if (i)
        os << sep;
      if (f.kind() == FormulaKind::And && i + 1 < ops.size() &&
          isRangePair(ops[i], ops[i + 1])) {
        print(os, ops[i].lhs());
        os << " <= ";
        print(os, ops[i].rhs());
        os << " <= ";
        print(os, ops[i + 1].rhs());
        ++i;
        continue;
      }
      print(os, ops[i], true);
    }
    if (nested)
      os << ")";
    return;
  }
  }
}

} // namespace

std::string toString(const Term &t) {
  std::ostringstream os;
  print(os, t);
  return os.str();
}

std::string toString(const Formula &f) {
  std::ostringstream os;
  print(os, f, false);
  return os.str();
}

} // namespace qsm
