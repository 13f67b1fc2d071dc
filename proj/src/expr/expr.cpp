//===-- expr.cpp - Term and formula construction ----------------*- C++ -*-===//
//
// Node storage, normalizing constructors, ordering and digests.
//
//===----------------------------------------------------------------------===//

#include "qsm/expr.h"

#include <algorithm>
#include <cassert>
#include <map>
#include <utility>

namespace qsm {
namespace detail {

struct TermNode {
  TermKind kind;
  Int value = 0;
  std::string name;
  std::vector<Term> args;
  std::vector<Formula> guard; // Ite only, exactly one element
  std::size_t digest = 0;
  HashValue shape = 0;
};

struct FormulaNode {
  FormulaKind kind;
  CmpOp op = CmpOp::Eq;
  std::vector<Term> terms; // Cmp: {lhs, rhs}; Forall: {lower, upper}
  std::vector<Formula> operands;
  std::string var;
  std::size_t digest = 0;
  HashValue shape = 0;
};

} // namespace detail

namespace {

constexpr HashValue mix(HashValue x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr HashValue combine(HashValue seed, HashValue v) {
  return mix(seed ^ (v + 0x632be59bd9b4e019ULL + (seed << 6) + (seed >> 2)));
}

HashValue hashString(std::string_view s) {
  HashValue h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr HashValue ConstSentinel = 0x5bd1e9955bd1e995ULL;

enum : HashValue {
  TagConst = 1,
  TagVar,
  TagSelect,
  TagAdd,
  TagMul,
  TagIte,
  TagTrue = 16,
  TagFalse,
  TagCmp,
  TagNot,
  TagAnd,
  TagOr,
  TagImplies,
  TagForall,
};

const std::shared_ptr<const detail::TermNode> &zeroNode() {
  static const auto node = [] {
    auto n = std::make_shared<detail::TermNode>();
    n->kind = TermKind::Const;
    n->value = 0;
    const HashValue head = combine(TagConst, 0);
    n->digest = combine(head, 0);
    n->shape = combine(head, ConstSentinel);
    return std::shared_ptr<const detail::TermNode>(std::move(n));
  }();
  return node;
}

std::shared_ptr<const detail::FormulaNode> constantNode(bool b) {
  static const auto make = [](bool v) {
    auto n = std::make_shared<detail::FormulaNode>();
    n->kind = v ? FormulaKind::True : FormulaKind::False;
    n->digest = mix(v ? TagTrue : TagFalse);
    n->shape = n->digest;
    return std::shared_ptr<const detail::FormulaNode>(std::move(n));
  };
  static const auto t = make(true);
  static const auto f = make(false);
  return b ? t : f;
}

Term finish(detail::TermNode n) {
  HashValue d = combine(static_cast<HashValue>(n.kind) + TagConst, 0);
  HashValue s = d;
  switch (n.kind) {
  case TermKind::Const:
    d = combine(d, static_cast<HashValue>(n.value));
    s = combine(s, ConstSentinel);
    break;
  case TermKind::Mul:
    d = combine(d, static_cast<HashValue>(n.value));
    s = combine(s, ConstSentinel);
    break;
  case TermKind::Var:
  case TermKind::Select:
    d = combine(d, hashString(n.name));
    s = combine(s, hashString(n.name));
    break;
  default:
    break;
  }
  for (const Formula &g : n.guard) {
    d = combine(d, g.digest());
    s = combine(s, g.shape());
  }
  for (const Term &a : n.args) {
    d = combine(d, a.digest());
    s = combine(s, a.shape());
  }
  n.digest = d;
  n.shape = s;
  return Term(std::make_shared<const detail::TermNode>(std::move(n)));
}

HashValue formulaTag(FormulaKind k) {
  switch (k) {
  case FormulaKind::True:
    return TagTrue;
  case FormulaKind::False:
    return TagFalse;
  case FormulaKind::Cmp:
    return TagCmp;
  case FormulaKind::Not:
    return TagNot;
  case FormulaKind::And:
    return TagAnd;
  case FormulaKind::Or:
    return TagOr;
  case FormulaKind::Implies:
    return TagImplies;
  case FormulaKind::Forall:
    return TagForall;
  }
  return 0;
}

Formula finish(detail::FormulaNode n) {
  HashValue d = mix(formulaTag(n.kind));
  HashValue s = d;
  if (n.kind == FormulaKind::Cmp) {
    d = combine(d, static_cast<HashValue>(n.op) + 1);
    s = combine(s, static_cast<HashValue>(n.op) + 1);
  }
  if (n.kind == FormulaKind::Forall) {
    d = combine(d, hashString(n.var));
    s = combine(s, hashString(n.var));
  }
  for (const Term &t : n.terms) {
    d = combine(d, t.digest());
    s = combine(s, t.shape());
  }
  for (const Formula &f : n.operands) {
    d = combine(d, f.digest());
    s = combine(s, f.shape());
  }
  n.digest = d;
  n.shape = s;
  return Formula(std::make_shared<const detail::FormulaNode>(std::move(n)));
}

//===----------------------------------------------------------------------===//
// Linear normal form
//===----------------------------------------------------------------------===//

struct Linear {
  std::map<Term, Int, TermLess> atoms;
  Int constant = 0;
};

void accumulate(const Term &t, Int scale, Linear &out) {
  switch (t.kind()) {
  case TermKind::Const:
    out.constant += scale * t.value();
    return;
  case TermKind::Add:
    accumulate(t.args()[0], scale, out);
    accumulate(t.args()[1], scale, out);
    return;
  case TermKind::Mul:
    accumulate(t.args()[0], scale * t.value(), out);
    return;
  default:
    out.atoms[t] += scale;
    return;
  }
}

Term makeMul(Int c, const Term &atom) {
  if (c == 1)
    return atom;
  detail::TermNode n;
  n.kind = TermKind::Mul;
  n.value = c;
  n.args = {atom};
  return finish(std::move(n));
}

Term makeAdd(const Term &a, const Term &b) {
  detail::TermNode n;
  n.kind = TermKind::Add;
  n.args = {a, b};
  return finish(std::move(n));
}

Term rebuild(const Linear &l) {
  std::optional<Term> acc;
  for (const auto &[atom, coeff] : l.atoms) {
    if (coeff == 0)
      continue;
    Term part = makeMul(coeff, atom);
    acc = acc ? makeAdd(*acc, part) : part;
  }
  if (!acc)
    return lit(l.constant);
  if (l.constant != 0)
    return makeAdd(*acc, lit(l.constant));
  return *acc;
}

Term linearCombine(const Term &a, Int sa, const Term &b, Int sb) {
  Linear l;
  accumulate(a, sa, l);
  accumulate(b, sb, l);
  return rebuild(l);
}

int kindRank(TermKind k) {
  switch (k) {
  case TermKind::Const:
    return 0;
  case TermKind::Var:
    return 1;
  case TermKind::Select:
    return 2;
  case TermKind::Ite:
    return 3;
  case TermKind::Mul:
    return 4;
  case TermKind::Add:
    return 5;
  }
  return 6;
}

template <typename T> int three(const T &a, const T &b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

} // namespace

//===----------------------------------------------------------------------===//
// Accessors
//===----------------------------------------------------------------------===//

Term::Term() : node_(zeroNode()) {}
TermKind Term::kind() const noexcept { return node_->kind; }
Int Term::value() const { return node_->value; }
const std::string &Term::name() const { return node_->name; }
std::span<const Term> Term::args() const { return node_->args; }
const Formula &Term::guard() const {
  assert(!node_->guard.empty());
  return node_->guard.front();
}
std::size_t Term::digest() const noexcept { return node_->digest; }
HashValue Term::shape() const noexcept { return node_->shape; }

Formula::Formula() : node_(constantNode(true)) {}
FormulaKind Formula::kind() const noexcept { return node_->kind; }
CmpOp Formula::op() const { return node_->op; }
const Term &Formula::lhs() const { return node_->terms.at(0); }
const Term &Formula::rhs() const { return node_->terms.at(1); }
std::span<const Formula> Formula::operands() const { return node_->operands; }
const std::string &Formula::boundVar() const { return node_->var; }
const Term &Formula::lower() const { return node_->terms.at(0); }
const Term &Formula::upper() const { return node_->terms.at(1); }
const Formula &Formula::body() const { return node_->operands.at(0); }
std::size_t Formula::digest() const noexcept { return node_->digest; }
HashValue Formula::shape() const noexcept { return node_->shape; }

bool operator==(const Term &a, const Term &b) {
  return a.get() == b.get() || (a.digest() == b.digest() && compare(a, b) == 0);
}

bool operator==(const Formula &a, const Formula &b) {
  return a.get() == b.get() || (a.digest() == b.digest() && compare(a, b) == 0);
}

//===----------------------------------------------------------------------===//
// Ordering
//===----------------------------------------------------------------------===//

int compare(const Term &a, const Term &b) {
  if (a.get() == b.get())
    return 0;
  if (int c = three(kindRank(a.kind()), kindRank(b.kind())))
    return c;
  switch (a.kind()) {
  case TermKind::Const:
    return three(a.value(), b.value());
  case TermKind::Var:
    return three(a.name(), b.name());
  case TermKind::Select:
    if (int c = three(a.name(), b.name()))
      return c;
    return compare(a.args()[0], b.args()[0]);
  case TermKind::Mul:
    if (int c = compare(a.args()[0], b.args()[0]))
      return c;
    return three(a.value(), b.value());
  case TermKind::Add:
    if (int c = compare(a.args()[0], b.args()[0]))
      return c;
    return compare(a.args()[1], b.args()[1]);
  case TermKind::Ite:
    if (int c = compare(a.guard(), b.guard()))
      return c;
    if (int c = compare(a.args()[0], b.args()[0]))
      return c;
    return compare(a.args()[1], b.args()[1]);
  }
  return 0;
}

int compare(const Formula &a, const Formula &b) {
  if (a.get() == b.get())
    return 0;
  if (int c = three(static_cast<int>(a.kind()), static_cast<int>(b.kind())))
    return c;
  switch (a.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return 0;
  case FormulaKind::Cmp:
    if (int c = three(static_cast<int>(a.op()), static_cast<int>(b.op())))
      return c;
    if (int c = compare(a.lhs(), b.lhs()))
      return c;
    return compare(a.rhs(), b.rhs());
  case FormulaKind::Forall:
    if (int c = three(a.boundVar(), b.boundVar()))
      return c;
    if (int c = compare(a.lower(), b.lower()))
      return c;
    if (int c = compare(a.upper(), b.upper()))
      return c;
    return compare(a.body(), b.body());
  default: {
    auto xs = a.operands();
    auto ys = b.operands();
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i)
      if (int c = compare(xs[i], ys[i]))
        return c;
    return three(xs.size(), ys.size());
  }
  }
}

//===----------------------------------------------------------------------===//
// Term constructors
//===----------------------------------------------------------------------===//

Term lit(Int v) {
  if (v == 0)
    return Term();
  detail::TermNode n;
  n.kind = TermKind::Const;
  n.value = v;
  return finish(std::move(n));
}

Term var(std::string name) {
  detail::TermNode n;
  n.kind = TermKind::Var;
  n.name = std::move(name);
  return finish(std::move(n));
}

Term select(std::string array, Term index) {
  detail::TermNode n;
  n.kind = TermKind::Select;
  n.name = std::move(array);
  n.args = {std::move(index)};
  return finish(std::move(n));
}

Term add(const Term &a, const Term &b) { return linearCombine(a, 1, b, 1); }
Term sub(const Term &a, const Term &b) { return linearCombine(a, 1, b, -1); }

Term mul(Int c, const Term &t) {
  Linear l;
  accumulate(t, c, l);
  return rebuild(l);
}

Term ite(const Formula &c, const Term &a, const Term &b) {
  if (c.isTrue() || a == b)
    return a;
  if (c.isFalse())
    return b;
  detail::TermNode n;
  n.kind = TermKind::Ite;
  n.guard = {c};
  n.args = {a, b};
  return finish(std::move(n));
}

//===----------------------------------------------------------------------===//
// Formula constructors
//===----------------------------------------------------------------------===//

Formula truth(bool b) { return Formula(constantNode(b)); }

static bool holds(CmpOp op, Int a, Int b) {
  switch (op) {
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

Formula cmp(CmpOp op, const Term &a, const Term &b) {
  if (a.isConst() && b.isConst())
    return truth(holds(op, a.value(), b.value()));
  detail::FormulaNode n;
  n.kind = FormulaKind::Cmp;
  n.op = op;
  n.terms = {a, b};
  return finish(std::move(n));
}

Formula negate(const Formula &f) {
  switch (f.kind()) {
  case FormulaKind::True:
    return truth(false);
  case FormulaKind::False:
    return truth(true);
  case FormulaKind::Not:
    return f.operands()[0];
  default:
    break;
  }
  detail::FormulaNode n;
  n.kind = FormulaKind::Not;
  n.operands = {f};
  return finish(std::move(n));
}

static Formula junction(FormulaKind kind, std::span<const Formula> fs) {
  const bool isAnd = kind == FormulaKind::And;
  const FormulaKind unit = isAnd ? FormulaKind::True : FormulaKind::False;
  const FormulaKind zero = isAnd ? FormulaKind::False : FormulaKind::True;
  std::vector<Formula> flat;
  auto push = [&](const Formula &f) {
    if (std::find(flat.begin(), flat.end(), f) == flat.end())
      flat.push_back(f);
  };
  for (const Formula &f : fs) {
    if (f.kind() == unit)
      continue;
    if (f.kind() == zero)
      return f;
    if (f.kind() == kind) {
      for (const Formula &g : f.operands())
        push(g);
    } else {
      push(f);
    }
  }
  if (flat.empty())
    return truth(isAnd);
  if (flat.size() == 1)
    return flat.front();
  detail::FormulaNode n;
  n.kind = kind;
  n.operands = std::move(flat);
  return finish(std::move(n));
}

Formula conj(std::span<const Formula> fs) {
  return junction(FormulaKind::And, fs);
}
Formula conj(std::initializer_list<Formula> fs) {
  return junction(FormulaKind::And, std::span(fs.begin(), fs.size()));
}
Formula disj(std::span<const Formula> fs) {
  return junction(FormulaKind::Or, fs);
}
Formula disj(std::initializer_list<Formula> fs) {
  return junction(FormulaKind::Or, std::span(fs.begin(), fs.size()));
}

Formula implies(const Formula &a, const Formula &b) {
  if (a.isTrue())
    return b;
  if (a.isFalse() || b.isTrue())
    return truth(true);
  if (b.isFalse())
    return negate(a);
  detail::FormulaNode n;
  n.kind = FormulaKind::Implies;
  n.operands = {a, b};
  return finish(std::move(n));
}

Formula forallRange(std::string v, const Term &lo, const Term &hi,
                    const Formula &body) {
  if (body.isTrue())
    return body;
  if (lo.isConst() && hi.isConst() && hi.value() < lo.value())
    return truth(true);
  detail::FormulaNode n;
  n.kind = FormulaKind::Forall;
  n.var = std::move(v);
  n.terms = {lo, hi};
  n.operands = {body};
  return finish(std::move(n));
}

Formula inRange(const Term &lo, const Term &t, const Term &hi) {
  return conj({le(lo, t), le(t, hi)});
}

CmpOp negateOp(CmpOp op) {
  switch (op) {
  case CmpOp::Eq:
    return CmpOp::Ne;
  case CmpOp::Ne:
    return CmpOp::Eq;
  case CmpOp::Lt:
    return CmpOp::Ge;
  case CmpOp::Le:
    return CmpOp::Gt;
  case CmpOp::Gt:
    return CmpOp::Le;
  case CmpOp::Ge:
    return CmpOp::Lt;
  }
  return op;
}

CmpOp flipOp(CmpOp op) {
  switch (op) {
  case CmpOp::Lt:
    return CmpOp::Gt;
  case CmpOp::Le:
    return CmpOp::Ge;
  case CmpOp::Gt:
    return CmpOp::Lt;
  case CmpOp::Ge:
    return CmpOp::Le;
  default:
    return op;
  }
}

HashValue structuralHash(const Formula &f) { return f.shape(); }
HashValue structuralHash(const Term &t) { return t.shape(); }

} // namespace qsm
