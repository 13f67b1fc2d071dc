//===-- expr.h - Symbolic terms and formulas --------------------*- C++ -*-===//
//
// Immutable expression core shared by every other component: integer terms
// over scalar symbols and integer arrays (select only), quantifier-free
// formulas plus bounded universal clauses of the shape
//   forall i. lo <= i <= hi -> body
//
// All constructors below normalize on the fly: linear arithmetic is kept in a
// canonical sum-of-atoms form (subtraction is an addition of a negated atom)
// and constant subformulas are folded. Two
// expressions are syntactically equal (operator==) iff their normalized ASTs
// coincide.
//
//===----------------------------------------------------------------------===//
#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qsm {

using Int = std::int64_t;
using HashValue = std::uint64_t;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A symbol was used with the wrong sort (scalar vs. array).
class SortError : public Error {
public:
  using Error::Error;
};

/// Evaluation hit an unassigned symbol or an unbounded enumeration.
class EvalError : public Error {
public:
  using Error::Error;
};

/// Malformed input text, with a 1-based source position.
class ParseError : public Error {
public:
  ParseError(const std::string &msg, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

enum class TermKind : std::uint8_t { Const, Var, Select, Add, Mul, Ite };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class FormulaKind : std::uint8_t {
  True,
  False,
  Cmp,
  Not,
  And,
  Or,
  Implies,
  Forall
};

namespace detail {
struct TermNode;
struct FormulaNode;
} // namespace detail

class Formula;

class Term {
public:
  /// The constant 0.
  Term();
  explicit Term(std::shared_ptr<const detail::TermNode> node)
      : node_(std::move(node)) {}

  TermKind kind() const noexcept;
  /// Constant value, or the coefficient of a Mul node.
  Int value() const;
  /// Scalar symbol name, or the array symbol of a Select node.
  const std::string &name() const;
  /// Select: {index}; Add: {lhs, rhs}; Mul: {operand}; Ite: {then, else}.
  std::span<const Term> args() const;
  /// Guard of an Ite node.
  const Formula &guard() const;
  /// Digest of the full AST, constants included. Equal terms have equal
  /// digests.
  std::size_t digest() const noexcept;
  HashValue shape() const noexcept;

  bool isConst() const noexcept { return kind() == TermKind::Const; }
  bool isConst(Int v) const noexcept { return isConst() && value() == v; }

  const detail::TermNode *get() const noexcept { return node_.get(); }

  friend bool operator==(const Term &a, const Term &b);

private:
  std::shared_ptr<const detail::TermNode> node_;
};

class Formula {
public:
  /// The formula `true`.
  Formula();
  explicit Formula(std::shared_ptr<const detail::FormulaNode> node)
      : node_(std::move(node)) {}

  FormulaKind kind() const noexcept;
  CmpOp op() const;
  const Term &lhs() const;
  const Term &rhs() const;
  /// Not: {arg}; And/Or: conjuncts/disjuncts; Implies: {premise, conclusion}.
  std::span<const Formula> operands() const;
  const std::string &boundVar() const;
  const Term &lower() const;
  const Term &upper() const;
  const Formula &body() const;
  std::size_t digest() const noexcept;
  HashValue shape() const noexcept;

  bool isTrue() const noexcept { return kind() == FormulaKind::True; }
  bool isFalse() const noexcept { return kind() == FormulaKind::False; }

  const detail::FormulaNode *get() const noexcept { return node_.get(); }

  friend bool operator==(const Formula &a, const Formula &b);

private:
  std::shared_ptr<const detail::FormulaNode> node_;
};

//===----------------------------------------------------------------------===//
// Construction
//===----------------------------------------------------------------------===//

Term lit(Int v);
Term var(std::string name);
Term select(std::string array, Term index);
Term add(const Term &a, const Term &b);
Term sub(const Term &a, const Term &b);
Term mul(Int c, const Term &t);
Term ite(const Formula &c, const Term &a, const Term &b);

inline Term operator+(const Term &a, const Term &b) { return add(a, b); }
inline Term operator-(const Term &a, const Term &b) { return sub(a, b); }
inline Term operator+(const Term &a, Int b) { return add(a, lit(b)); }
inline Term operator-(const Term &a, Int b) { return sub(a, lit(b)); }
inline Term operator*(Int c, const Term &t) { return mul(c, t); }

Formula truth(bool b);
Formula cmp(CmpOp op, const Term &a, const Term &b);
inline Formula eq(const Term &a, const Term &b) { return cmp(CmpOp::Eq, a, b); }
inline Formula ne(const Term &a, const Term &b) { return cmp(CmpOp::Ne, a, b); }
inline Formula lt(const Term &a, const Term &b) { return cmp(CmpOp::Lt, a, b); }
inline Formula le(const Term &a, const Term &b) { return cmp(CmpOp::Le, a, b); }
inline Formula gt(const Term &a, const Term &b) { return cmp(CmpOp::Gt, a, b); }
inline Formula ge(const Term &a, const Term &b) { return cmp(CmpOp::Ge, a, b); }
Formula negate(const Formula &f);
/// Flattening conjunction: nested Ands are spliced, `true` dropped, duplicate
/// conjuncts removed (first occurrence kept).
Formula conj(std::span<const Formula> fs);
Formula conj(std::initializer_list<Formula> fs);
Formula disj(std::span<const Formula> fs);
Formula disj(std::initializer_list<Formula> fs);
Formula implies(const Formula &a, const Formula &b);
/// forall var. lo <= var <= hi -> body
Formula forallRange(std::string var, const Term &lo, const Term &hi,
                    const Formula &body);
/// lo <= t && t <= hi
Formula inRange(const Term &lo, const Term &t, const Term &hi);

CmpOp negateOp(CmpOp op);
/// The operator obtained by swapping operands: a < b  <=>  b > a.
CmpOp flipOp(CmpOp op);

//===----------------------------------------------------------------------===//
// Queries and transformations
//===----------------------------------------------------------------------===//

/// Capture-avoiding substitution of the scalar symbol `var` by `repl`.
/// Throws SortError if `var` is used as an array symbol in the input.
Term substitute(const Term &t, std::string_view var, const Term &repl);
Formula substitute(const Formula &f, std::string_view var, const Term &repl);

/// Constant-blind structural digest: every integer constant is hashed to the
/// same sentinel, negation contributes its own tag.
HashValue structuralHash(const Formula &f);
HashValue structuralHash(const Term &t);

/// Total order on terms / formulas (negative, zero, positive).
int compare(const Term &a, const Term &b);
int compare(const Formula &a, const Formula &b);

struct TermLess {
  bool operator()(const Term &a, const Term &b) const {
    return compare(a, b) < 0;
  }
};

/// Top-level conjuncts (a non-And formula is its own single conjunct; `true`
/// has none).
std::vector<Formula> conjuncts(const Formula &f);

/// Free symbols, in order of first occurrence.
struct Symbols {
  std::vector<std::string> scalars;
  std::vector<std::string> arrays;
};
Symbols freeSymbols(const Formula &f);
Symbols freeSymbols(const Term &t);
void collectFreeSymbols(const Formula &f, Symbols &out);
void collectFreeSymbols(const Term &t, Symbols &out);

/// All Select subterms (outermost first, left to right), including those under
/// binders.
void collectSelects(const Formula &f, std::vector<Term> &out);
void collectSelects(const Term &t, std::vector<Term> &out);

bool mentions(const Term &t, std::string_view var);
bool mentions(const Formula &f, std::string_view var);
bool isQuantifierFree(const Formula &f);

/// Number of AST nodes (terms and formulas).
std::size_t nodeCount(const Formula &f);
std::size_t nodeCount(const Term &t);

/// Rewrites negated comparisons into comparisons with the negated operator
/// and pushes negation through And/Or/Implies.
Formula negationNormalForm(const Formula &f);

std::string toString(const Term &t);
std::string toString(const Formula &f);
std::string toString(CmpOp op);

} // namespace qsm

template <> struct std::hash<qsm::Term> {
  std::size_t operator()(const qsm::Term &t) const noexcept {
    return t.digest();
  }
};
template <> struct std::hash<qsm::Formula> {
  std::size_t operator()(const qsm::Formula &f) const noexcept {
    return f.digest();
  }
};
