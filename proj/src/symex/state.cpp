//===-- state.cpp - Symbolic values, stores and expression evaluation -----===//

#include "qsm/symex.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace qsm {

bool operator==(const ArrayChoice &a, const ArrayChoice &b) {
  return a.guard == b.guard && a.then == b.then && a.otherwise == b.otherwise;
}

bool operator==(const ArrayValue &a, const ArrayValue &b) {
  if (a.base != b.base || a.length != b.length || a.writes != b.writes)
    return false;
  if (!a.choice || !b.choice)
    return !a.choice && !b.choice;
  return *a.choice == *b.choice;
}

Term ArrayValue::read(const Term &index) const {
  Term r = choice ? ite(choice->guard, choice->then.read(index),
                        choice->otherwise.read(index))
           : base ? select(*base, index)
                  : lit(0);
  for (const auto &[at, value] : writes) {
    Formula hit = eq(index, at);
    if (hit.isTrue())
      r = value;
    else if (!hit.isFalse())
      r = ite(hit, value, r);
  }
  return r;
}

bool ArrayValue::concreteWrites() const {
  return std::all_of(writes.begin(), writes.end(),
                     [](const auto &w) { return w.first.isConst(); });
}

void ArrayValue::write(const Term &index, const Term &value) {
  if (index.isConst() && concreteWrites()) {
    for (auto &w : writes)
      if (w.first == index) {
        w.second = value;
        return;
      }
    auto pos = std::lower_bound(
        writes.begin(), writes.end(), index.value(),
        [](const auto &w, Int v) { return w.first.value() < v; });
    writes.insert(pos, {index, value});
    return;
  }
  writes.emplace_back(index, value);
}

const Term &SymbolicState::scalar(const std::string &v) const {
  auto it = mem.find(v);
  if (it == mem.end() || !std::holds_alternative<Term>(it->second))
    throw Error("no scalar '" + v + "' in the store");
  return std::get<Term>(it->second);
}

const ArrayValue &SymbolicState::array(const std::string &v) const {
  auto it = mem.find(v);
  if (it == mem.end() || !std::holds_alternative<ArrayValue>(it->second))
    throw Error("no array '" + v + "' in the store");
  return std::get<ArrayValue>(it->second);
}

bool mergeCompatible(const SymbolicState &a, const SymbolicState &b) {
  if (a.ic != b.ic || a.mem.size() != b.mem.size())
    return false;
  for (auto ia = a.mem.begin(), ib = b.mem.begin(); ia != a.mem.end();
       ++ia, ++ib)
    if (ia->first != ib->first || ia->second.index() != ib->second.index())
      return false;
  return true;
}

namespace {

ArrayValue mergeArrays(const Formula &guard, const ArrayValue &a,
                       const ArrayValue &b) {
  if (a == b)
    return a;
  if (a.length != b.length)
    throw Error("cannot merge arrays of different lengths");
  if (!a.choice && !b.choice && a.base == b.base && a.concreteWrites() &&
      b.concreteWrites()) {
    std::vector<Int> cells;
    for (const auto *arr : {&a, &b})
      for (const auto &w : arr->writes)
        cells.push_back(w.first.value());
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    ArrayValue r{a.base, a.length, nullptr, {}};
    for (Int c : cells) {
      Term va = a.read(lit(c)), vb = b.read(lit(c));
      r.writes.emplace_back(lit(c), va == vb ? va : ite(guard, va, vb));
    }
    return r;
  }
  ArrayValue r{std::nullopt, a.length, nullptr, {}};
  r.choice = std::make_shared<const ArrayChoice>(ArrayChoice{guard, a, b});
  return r;
}

} // namespace

Value mergeValues(const std::vector<Formula> &guards,
                  const std::vector<const Value *> &values) {
  if (guards.size() != values.size() || values.empty())
    throw Error("mergeValues: mismatched inputs");
  Value acc = *values.back();
  for (std::size_t i = values.size() - 1; i-- > 0;) {
    const Value &v = *values[i];
    if (v.index() != acc.index())
      throw Error("mergeValues: sort mismatch");
    if (std::holds_alternative<Term>(v)) {
      const Term &t = std::get<Term>(v), &e = std::get<Term>(acc);
      acc = t == e ? t : ite(guards[i], t, e);
    } else {
      acc = mergeArrays(guards[i], std::get<ArrayValue>(v),
                        std::get<ArrayValue>(acc));
    }
  }
  return acc;
}

std::map<std::string, Value>
mergeStores(const std::vector<Formula> &guards,
            const std::vector<const SymbolicState *> &states) {
  std::map<std::string, Value> out;
  for (const auto &[name, _] : states.front()->mem) {
    std::vector<const Value *> vs;
    for (const SymbolicState *s : states)
      vs.push_back(&s->mem.at(name));
    out.emplace(name, mergeValues(guards, vs));
  }
  return out;
}

std::string toString(const ArrayValue &a) {
  std::ostringstream os;
  if (a.choice)
    os << "ite(" << toString(a.choice->guard) << ", "
       << toString(a.choice->then) << ", " << toString(a.choice->otherwise)
       << ")";
  else if (a.base)
    os << *a.base;
  else
    os << "zeros";
  os << "[" << a.length << "]";
  for (const auto &[at, value] : a.writes)
    os << "{" << toString(at) << " := " << toString(value) << "}";
  return os.str();
}

std::string toString(const Value &v) {
  if (std::holds_alternative<Term>(v))
    return toString(std::get<Term>(v));
  return toString(std::get<ArrayValue>(v));
}

nlohmann::json toJson(const SymbolicState &s) {
  nlohmann::json mem = nlohmann::json::object();
  for (const auto &[name, v] : s.mem)
    mem[name] = toString(v);
  return {{"ic", s.ic}, {"pc", toString(s.pc)}, {"mem", mem}};
}

//===----------------------------------------------------------------------===//
// Expression evaluation
//===----------------------------------------------------------------------===//

Formula orientedCmp(CmpOp op, const Term &a, const Term &b) {
  if (a.isConst() && !b.isConst())
    return cmp(flipOp(op), b, a);
  return cmp(op, a, b);
}

namespace {

CmpOp toCmp(BinaryOp op) {
  switch (op) {
  case BinaryOp::Eq:
    return CmpOp::Eq;
  case BinaryOp::Ne:
    return CmpOp::Ne;
  case BinaryOp::Lt:
    return CmpOp::Lt;
  case BinaryOp::Le:
    return CmpOp::Le;
  case BinaryOp::Gt:
    return CmpOp::Gt;
  case BinaryOp::Ge:
    return CmpOp::Ge;
  default:
    throw Error("not a comparison");
  }
}

bool isBoolean(const Expr &e) {
  if (e.kind == ExprKind::Unary)
    return e.unary == UnaryOp::Not;
  if (e.kind != ExprKind::Binary)
    return false;
  return e.binary != BinaryOp::Add && e.binary != BinaryOp::Sub &&
         e.binary != BinaryOp::Mul;
}

} // namespace

Term Evaluator::term(const Expr &e) {
  switch (e.kind) {
  case ExprKind::IntLit:
  case ExprKind::CharLit:
    return lit(e.value);
  case ExprKind::Name:
    return state.scalar(e.name);
  case ExprKind::Index: {
    const ArrayValue &a = state.array(e.name);
    Term idx = term(e.children[0]);
    obligations.push_back(
        {inRange(lit(0), idx, lit(a.length - 1)), e.pos, e.name});
    return a.read(idx);
  }
  case ExprKind::Unary:
    if (e.unary == UnaryOp::Neg)
      return mul(-1, term(e.children[0]));
    break;
  case ExprKind::Binary:
    switch (e.binary) {
    case BinaryOp::Add:
      return add(term(e.children[0]), term(e.children[1]));
    case BinaryOp::Sub:
      return sub(term(e.children[0]), term(e.children[1]));
    case BinaryOp::Mul: {
      Term a = term(e.children[0]), b = term(e.children[1]);
      if (a.isConst())
        return mul(a.value(), b);
      if (b.isConst())
        return mul(b.value(), a);
      throw Error("line " + std::to_string(e.pos.line) +
                  ": non-linear multiplication");
    }
    default:
      break;
    }
    break;
  }
  return ite(cond(e), lit(1), lit(0));
}

Formula Evaluator::cond(const Expr &e) {
  if (!isBoolean(e))
    return orientedCmp(CmpOp::Ne, term(e), lit(0));
  if (e.kind == ExprKind::Unary)
    return negate(cond(e.children[0]));
  switch (e.binary) {
  case BinaryOp::And:
    return conj({cond(e.children[0]), cond(e.children[1])});
  case BinaryOp::Or:
    return disj({cond(e.children[0]), cond(e.children[1])});
  default: {
    Term a = term(e.children[0]);
    Term b = term(e.children[1]);
    return orientedCmp(toCmp(e.binary), a, b);
  }
  }
}

Term evalTerm(const Expr &e, const SymbolicState &s) {
  Evaluator ev{s, {}};
  return ev.term(e);
}

Formula evalCond(const Expr &e, const SymbolicState &s) {
  Evaluator ev{s, {}};
  return ev.cond(e);
}

} // namespace qsm
