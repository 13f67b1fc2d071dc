//===-- smtlib.h - SMT-LIB v2 printing and parsing --------------*- C++ -*-===//
#pragma once

#include "qsm/expr.h"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qsm {

/// `s`, quoted with |...| when it is not a simple symbol.
std::string smtSymbol(const std::string &s);
std::string toSmtLib(const Term &t);
std::string toSmtLib(const Formula &f);

/// Full script: set-logic, declarations for every free symbol of `f`, one
/// assert per top-level conjunct, check-sat.
std::string toSmtScript(const Formula &f);

/// SMT-LIB logic name suited to `f`.
std::string smtLogic(const Formula &f);

/// Whether `name` is reserved in SMT-LIB (and therefore not a usable symbol).
bool isSmtReserved(std::string_view name);

struct SExpr {
  std::string atom;
  std::vector<SExpr> list;
  bool isList = false;
  int line = 0;
  int column = 0;

  bool isAtom(std::string_view s) const { return !isList && atom == s; }
};

std::vector<SExpr> parseSExprs(std::string_view text);
std::string toString(const SExpr &e);

/// Parses an integer value such as `5` or `(- 5)`.
Int parseSmtInt(const SExpr &e);

struct SmtScript {
  std::vector<std::string> scalars;
  std::vector<std::string> arrays;
  /// Conjunction of all asserted formulas.
  Formula assertion;
};

/// Reads declare-const / declare-fun / assert commands; other commands are
/// ignored.
SmtScript parseSmtScript(std::string_view text);

Formula formulaFromSExpr(const SExpr &e, const SmtScript &decls);
Term termFromSExpr(const SExpr &e, const SmtScript &decls);

} // namespace qsm
