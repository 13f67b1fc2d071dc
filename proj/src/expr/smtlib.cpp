//===-- smtlib.cpp - SMT-LIB v2 printing and parsing ------------*- C++ -*-===//

#include "qsm/smtlib.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace qsm {

ParseError::ParseError(const std::string &msg, int line, int column)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line), column_(column) {}

namespace {

const char *const Reserved[] = {
    "and",    "or",      "not",   "=>",     "=",     "distinct", "ite",
    "select", "store",   "forall", "exists", "let",  "true",     "false",
    "assert", "declare-const", "declare-fun", "check-sat", "get-value",
    "Int",    "Bool",    "Array", "as",     "const", "par",      "_",
    "!",      "div",     "mod",   "abs",    "push",  "pop",      "reset"};

bool isSimpleSymbol(std::string_view s) {
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front())))
    return false;
  static const std::string_view extra = "~!@$%^&*_-+=<>.?/";
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) ||
           extra.find(c) != std::string_view::npos;
  });
}


std::string numeral(Int v) {
  return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v);
}

void summands(const Term &t, std::vector<Term> &out) {
  if (t.kind() == TermKind::Add) {
    summands(t.args()[0], out);
    summands(t.args()[1], out);
  } else {
    out.push_back(t);
  }
}

void print(std::ostream &os, const Formula &f);

void print(std::ostream &os, const Term &t) {
  switch (t.kind()) {
  case TermKind::Const:
    os << numeral(t.value());
    return;
  case TermKind::Var:
    os << smtSymbol(t.name());
    return;
  case TermKind::Select:
    os << "(select " << smtSymbol(t.name()) << " ";
    print(os, t.args()[0]);
    os << ")";
    return;
  case TermKind::Add: {
    std::vector<Term> xs;
    summands(t, xs);
    os << "(+";
    for (const Term &x : xs) {
      os << " ";
      print(os, x);
    }
    os << ")";
    return;
  }
  case TermKind::Mul:
    os << "(* " << numeral(t.value()) << " ";
    print(os, t.args()[0]);
    os << ")";
    return;
  case TermKind::Ite:
    os << "(ite ";
    print(os, t.guard());
    os << " ";
    print(os, t.args()[0]);
    os << " ";
    print(os, t.args()[1]);
    os << ")";
    return;
  }
}

const char *smtOp(CmpOp op) {
  switch (op) {
  case CmpOp::Eq:
    return "=";
  case CmpOp::Ne:
    return "distinct";
  case CmpOp::Lt:
    return "<";
  case CmpOp::Le:
    return "<=";
  case CmpOp::Gt:
    return ">";
  case CmpOp::Ge:
    return ">=";
  }
  return "=";
}

void print(std::ostream &os, const Formula &f) {
  switch (f.kind()) {
  case FormulaKind::True:
    os << "true";
    return;
  case FormulaKind::False:
    os << "false";
    return;
  case FormulaKind::Cmp:
    os << "(" << smtOp(f.op()) << " ";
    print(os, f.lhs());
    os << " ";
    print(os, f.rhs());
    os << ")";
    return;
  case FormulaKind::Forall: {
    std::string i = smtSymbol(f.boundVar());
    os << "(forall ((" << i << " Int)) (=> (and (<= ";
    print(os, f.lower());
    os << " " << i << ") (<= " << i << " ";
    print(os, f.upper());
    os << ")) ";
    print(os, f.body());
    os << "))";
    return;
  }
  default:
    break;
  }
  const char *head = f.kind() == FormulaKind::Not       ? "not"
                     : f.kind() == FormulaKind::And     ? "and"
                     : f.kind() == FormulaKind::Or      ? "or"
                                                        : "=>";
  os << "(" << head;
  for (const Formula &g : f.operands()) {
    os << " ";
    print(os, g);
  }
  os << ")";
}

} // namespace

bool isSmtReserved(std::string_view name) {
  return std::find(std::begin(Reserved), std::end(Reserved), name) !=
         std::end(Reserved);
}

std::string toSmtLib(const Term &t) {
  std::ostringstream os;
  print(os, t);
  return os.str();
}

std::string toSmtLib(const Formula &f) {
  std::ostringstream os;
  print(os, f);
  return os.str();
}

std::string smtLogic(const Formula &f) {
  return isQuantifierFree(f) ? "QF_AUFLIA" : "AUFLIA";
}

std::string smtSymbol(const std::string &s) {
  return isSimpleSymbol(s) ? s : "|" + s + "|";
}

std::string toSmtScript(const Formula &f) {
  std::ostringstream os;
  os << "(set-logic " << smtLogic(f) << ")\n";
  Symbols syms = freeSymbols(f);
  for (const std::string &s : syms.scalars)
    os << "(declare-const " << smtSymbol(s) << " Int)\n";
  for (const std::string &a : syms.arrays)
    os << "(declare-const " << smtSymbol(a) << " (Array Int Int))\n";
  for (const Formula &c : conjuncts(f))
    os << "(assert " << toSmtLib(c) << ")\n";
  if (f.isFalse())
    os << "(assert false)\n";
  os << "(check-sat)\n";
  return os.str();
}

//===----------------------------------------------------------------------===//
// S-expressions
//===----------------------------------------------------------------------===//

namespace {

class SExprReader {
public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  std::vector<SExpr> readAll() {
    std::vector<SExpr> out;
    skip();
    while (pos_ < text_.size()) {
      out.push_back(read());
      skip();
    }
    return out;
  }

private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n')
          advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    SExpr e;
    e.line = line_;
    e.column = col_;
    char c = text_[pos_];
    if (c == ')')
      throw ParseError("unexpected ')'", line_, col_);
    if (c == '(') {
      advance();
      e.isList = true;
      skip();
      while (pos_ < text_.size() && text_[pos_] != ')') {
        e.list.push_back(read());
        skip();
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated list", e.line, e.column);
      advance();
      return e;
    }
    if (c == '|') {
      advance();
      while (pos_ < text_.size() && text_[pos_] != '|') {
        e.atom.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated quoted symbol", e.line, e.column);
      advance();
      return e;
    }
    if (c == '"') {
      e.atom.push_back(c);
      advance();
      while (pos_ < text_.size() && text_[pos_] != '"') {
        e.atom.push_back(text_[pos_]);
        advance();
      }
      if (pos_ >= text_.size())
        throw ParseError("unterminated string", e.line, e.column);
      e.atom.push_back('"');
      advance();
      return e;
    }
    while (pos_ < text_.size()) {
      char d = text_[pos_];
      if (d == '(' || d == ')' || d == ';' ||
          std::isspace(static_cast<unsigned char>(d)))
        break;
      e.atom.push_back(d);
      advance();
    }
    return e;
  }
};

bool isNumeral(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c));
  });
}

[[noreturn]] void fail(const SExpr &e, const std::string &msg) {
  throw ParseError(msg + " in '" + toString(e) + "'", e.line, e.column);
}

struct Scope {
  const SmtScript &decls;
  std::vector<std::string> bound;

  bool isScalar(const std::string &s) const {
    return std::find(bound.begin(), bound.end(), s) != bound.end() ||
           std::find(decls.scalars.begin(), decls.scalars.end(), s) !=
               decls.scalars.end();
  }
  bool isArray(const std::string &s) const {
    return std::find(decls.arrays.begin(), decls.arrays.end(), s) !=
           decls.arrays.end();
  }
};

Term term(const SExpr &e, Scope &sc);
Formula formula(const SExpr &e, Scope &sc);

Term term(const SExpr &e, Scope &sc) {
  if (!e.isList) {
    if (isNumeral(e.atom)) {
      Int v = 0;
      auto [p, ec] =
          std::from_chars(e.atom.data(), e.atom.data() + e.atom.size(), v);
      if (ec != std::errc())
        fail(e, "numeral out of range");
      return lit(v);
    }
    if (!sc.isScalar(e.atom))
      fail(e, "undeclared integer symbol");
    return var(e.atom);
  }
  if (e.list.empty() || e.list[0].isList)
    fail(e, "malformed term");
  const std::string &head = e.list[0].atom;
  const std::size_t n = e.list.size();
  if (head == "-" && n == 2)
    return mul(-1, term(e.list[1], sc));
  if ((head == "+" || head == "-") && n >= 3) {
    Term acc = term(e.list[1], sc);
    for (std::size_t i = 2; i < n; ++i)
      acc = head == "+" ? add(acc, term(e.list[i], sc))
                        : sub(acc, term(e.list[i], sc));
    return acc;
  }
  if (head == "*" && n == 3) {
    Term a = term(e.list[1], sc);
    Term b = term(e.list[2], sc);
    if (a.isConst())
      return mul(a.value(), b);
    if (b.isConst())
      return mul(b.value(), a);
    fail(e, "non-linear multiplication");
  }
  if (head == "select" && n == 3) {
    if (e.list[1].isList || !sc.isArray(e.list[1].atom))
      fail(e, "select on an undeclared array");
    return select(e.list[1].atom, term(e.list[2], sc));
  }
  if (head == "ite" && n == 4)
    return ite(formula(e.list[1], sc), term(e.list[2], sc),
               term(e.list[3], sc));
  fail(e, "unsupported term");
}

std::optional<CmpOp> cmpOp(const std::string &s) {
  static const std::map<std::string, CmpOp> ops = {
      {"=", CmpOp::Eq}, {"distinct", CmpOp::Ne}, {"<", CmpOp::Lt},
      {"<=", CmpOp::Le}, {">", CmpOp::Gt},      {">=", CmpOp::Ge}};
  auto it = ops.find(s);
  if (it == ops.end())
    return std::nullopt;
  return it->second;
}

Formula forall(const SExpr &e, Scope &sc) {
  // (forall ((i Int)) (=> (and (<= lo i) (<= i hi)) body))
  if (e.list.size() != 3 || !e.list[1].isList || e.list[1].list.size() != 1)
    fail(e, "only single-variable quantifiers are supported");
  const SExpr &binding = e.list[1].list[0];
  if (!binding.isList || binding.list.size() != 2 ||
      !binding.list[1].isAtom("Int"))
    fail(e, "quantified variable must be an Int");
  std::string i = binding.list[0].atom;
  const SExpr &imp = e.list[2];
  if (!imp.isList || imp.list.size() != 3 || !imp.list[0].isAtom("=>"))
    fail(e, "quantifier body must be a bounded implication");
  const SExpr &guard = imp.list[1];
  if (!guard.isList || guard.list.size() != 3 || !guard.list[0].isAtom("and"))
    fail(e, "quantifier guard must be a range");
  const SExpr &low = guard.list[1];
  const SExpr &high = guard.list[2];
  if (!low.isList || low.list.size() != 3 || !low.list[0].isAtom("<=") ||
      !low.list[2].isAtom(i) || !high.isList || high.list.size() != 3 ||
      !high.list[0].isAtom("<=") || !high.list[1].isAtom(i))
    fail(e, "quantifier guard must have the shape lo <= i <= hi");
  Term lo = term(low.list[1], sc);
  Term hi = term(high.list[2], sc);
  sc.bound.push_back(i);
  Formula body = formula(imp.list[2], sc);
  sc.bound.pop_back();
  return forallRange(i, lo, hi, body);
}

Formula formula(const SExpr &e, Scope &sc) {
  if (!e.isList) {
    if (e.atom == "true")
      return truth(true);
    if (e.atom == "false")
      return truth(false);
    fail(e, "unsupported boolean atom");
  }
  if (e.list.empty() || e.list[0].isList)
    fail(e, "malformed formula");
  const std::string &head = e.list[0].atom;
  const std::size_t n = e.list.size();
  if (auto op = cmpOp(head); op && n == 3)
    return cmp(*op, term(e.list[1], sc), term(e.list[2], sc));
  if (head == "not" && n == 2)
    return negate(formula(e.list[1], sc));
  if (head == "and" || head == "or") {
    std::vector<Formula> ops;
    for (std::size_t i = 1; i < n; ++i)
      ops.push_back(formula(e.list[i], sc));
    return head == "and" ? conj(ops) : disj(ops);
  }
  if (head == "=>" && n == 3)
    return implies(formula(e.list[1], sc), formula(e.list[2], sc));
  if (head == "forall")
    return forall(e, sc);
  fail(e, "unsupported formula");
}

} // namespace

std::vector<SExpr> parseSExprs(std::string_view text) {
  return SExprReader(text).readAll();
}

std::string toString(const SExpr &e) {
  if (!e.isList)
    return e.atom;
  std::string s = "(";
  for (std::size_t i = 0; i < e.list.size(); ++i) {
    if (i)
      s += " ";
    s += toString(e.list[i]);
  }
  return s + ")";
}

Int parseSmtInt(const SExpr &e) {
  if (!e.isList && isNumeral(e.atom)) {
    Int v = 0;
    std::from_chars(e.atom.data(), e.atom.data() + e.atom.size(), v);
    return v;
  }
  if (e.isList && e.list.size() == 2 && e.list[0].isAtom("-"))
    return -parseSmtInt(e.list[1]);
  fail(e, "expected an integer value");
}

Formula formulaFromSExpr(const SExpr &e, const SmtScript &decls) {
  Scope sc{decls, {}};
  return formula(e, sc);
}

Term termFromSExpr(const SExpr &e, const SmtScript &decls) {
  Scope sc{decls, {}};
  return term(e, sc);
}

SmtScript parseSmtScript(std::string_view text) {
  SmtScript script;
  std::vector<Formula> asserted;
  for (const SExpr &cmd : parseSExprs(text)) {
    if (!cmd.isList || cmd.list.empty() || cmd.list[0].isList)
      fail(cmd, "expected a command");
    const std::string &head = cmd.list[0].atom;
    if (head == "declare-const" || head == "declare-fun") {
      std::size_t sortAt = head == "declare-const" ? 2 : 3;
      if (cmd.list.size() != sortAt + 1 || cmd.list[1].isList)
        fail(cmd, "malformed declaration");
      if (head == "declare-fun" &&
          (!cmd.list[2].isList || !cmd.list[2].list.empty()))
        fail(cmd, "only nullary functions are supported");
      const SExpr &sort = cmd.list[sortAt];
      if (sort.isAtom("Int"))
        script.scalars.push_back(cmd.list[1].atom);
      else if (sort.isList && sort.list.size() == 3 &&
               sort.list[0].isAtom("Array") && sort.list[1].isAtom("Int") &&
               sort.list[2].isAtom("Int"))
        script.arrays.push_back(cmd.list[1].atom);
      else
        fail(cmd, "unsupported sort");
    } else if (head == "assert") {
      if (cmd.list.size() != 2)
        fail(cmd, "malformed assert");
      asserted.push_back(formulaFromSExpr(cmd.list[1], script));
    }
  }
  script.assertion = conj(asserted);
  return script;
}

} // namespace qsm
