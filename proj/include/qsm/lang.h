//===-- lang.h - The .mini input language -----------------------*- C++ -*-===//
//
// Grammar (ASCII, C-style comments):
//
//   program   := 'program' IDENT '{' item* '}'
//   item      := decl | stmt
//   decl      := 'sym' ('int' | 'byte') IDENT ('[' INT ']')? ';'
//              | ('int' | 'byte') IDENT ('[' INT ']')? ('=' init)? ';'
//   init      := expr | STRING | '{' expr (',' expr)* '}'
//   stmt      := IDENT '=' expr ';' | IDENT '[' expr ']' '=' expr ';'
//              | 'if' '(' expr ')' block ('else' (block | ifstmt))?
//              | '@merge'? 'while' '(' expr ')' block
//              | 'assume' '(' expr ')' ';' | 'assert' '(' expr ')' ';'
//              | 'return' expr? ';'
//   block     := '{' stmt* '}'
//   expr      := precedence climbing over || && (== !=) (< <= > >=) (+ -) *
//                with unary - and !, INT, CHAR, IDENT, IDENT '[' expr ']'
//
// Declarations are only allowed at the top level of the program body.
//
//===----------------------------------------------------------------------===//
#pragma once

#include "qsm/expr.h"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qsm {

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class ExprKind { IntLit, CharLit, Name, Index, Unary, Binary };
enum class UnaryOp { Neg, Not };
enum class BinaryOp { Or, And, Eq, Ne, Lt, Le, Gt, Ge, Add, Sub, Mul };

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  Int value = 0;
  std::string name;
  UnaryOp unary = UnaryOp::Neg;
  BinaryOp binary = BinaryOp::Add;
  std::vector<Expr> children;
  SourcePos pos;

  friend bool operator==(const Expr &a, const Expr &b);
};

enum class StmtKind { Assign, Store, If, While, Assume, Assert, Return };

struct Stmt {
  StmtKind kind = StmtKind::Assign;
  std::string target;
  /// Assign: {value}; Store: {index, value}; If/While/Assume/Assert: {cond};
  /// Return: {} or {value}.
  std::vector<Expr> exprs;
  std::vector<Stmt> body;
  std::vector<Stmt> orelse;
  bool merge = false;
  SourcePos pos;

  friend bool operator==(const Stmt &a, const Stmt &b);
};

enum class DeclKind { Input, Local };
enum class ElemType { Int, Byte };

struct Decl {
  DeclKind kind = DeclKind::Local;
  ElemType type = ElemType::Int;
  std::string name;
  /// Array length, absent for scalars.
  std::optional<Int> length;
  /// Scalar initializer, or array initializer elements.
  std::vector<Expr> init;
  /// Array initializer given as a string literal.
  std::optional<std::string> text;
  SourcePos pos;

  bool isArray() const { return length.has_value(); }
  friend bool operator==(const Decl &a, const Decl &b);
};

/// A top-level item: either a declaration or a statement, in source order.
struct Item {
  std::optional<Decl> decl;
  std::optional<Stmt> stmt;
  friend bool operator==(const Item &a, const Item &b) = default;
};

struct Program {
  std::string name;
  std::vector<Item> items;

  const Decl *findDecl(std::string_view name) const;
  std::vector<const Decl *> decls() const;
  friend bool operator==(const Program &a, const Program &b) = default;
};

/// Throws ParseError (syntax errors, undeclared or redeclared identifiers).
Program parseProgram(std::string_view source);
/// Canonical, fully parenthesized rendering; parses back to an equal AST.
std::string printProgram(const Program &p);
std::string printExpr(const Expr &e);

//===----------------------------------------------------------------------===//
// Lowered form
//===----------------------------------------------------------------------===//

enum class InstrKind {
  Assign,
  Store,
  Branch,
  Jump,
  Assume,
  Assert,
  Return,
};

/// One instruction; its index in Cfg::instrs is the instruction counter.
struct Instr {
  InstrKind kind = InstrKind::Jump;
  std::string target;
  /// Assign: value; Store: index, value; Branch/Assume/Assert: cond;
  /// Return: optional value.
  std::vector<Expr> exprs;
  std::size_t onTrue = 0;  // Branch taken target, Jump target
  std::size_t onFalse = 0; // Branch fall-through target
  SourcePos pos;
};

struct BasicBlock {
  std::size_t first = 0; // instruction range [first, last]
  std::size_t last = 0;
  /// Successor block ids; for a branch the first successor is the `cond`
  /// edge and the second the `!cond` edge.
  std::vector<std::size_t> succs;
};

/// A single-entry loop selected for merging: instructions [head, exit).
struct Region {
  std::size_t head = 0;
  std::size_t exit = 0;
  SourcePos pos;
  bool contains(std::size_t ic) const { return ic >= head && ic < exit; }
};

struct Cfg {
  std::vector<Instr> instrs;
  std::vector<BasicBlock> blocks;
  std::vector<Region> regions;
  /// Every loop, merge-marked or not, in source order.
  std::vector<Region> loops;

  std::size_t blockOf(std::size_t ic) const;
  std::vector<std::size_t> successors(std::size_t ic) const;
  std::size_t branchCount() const;
};

/// Lowers statements to instructions. With `mergeAllLoops`, every outermost
/// loop becomes a region, otherwise only loops marked @merge. Regions nested
/// in another region are dropped.
Cfg lowerToCfg(const Program &p, bool mergeAllLoops = false);

struct Liveness {
  /// Variables live on entry to each instruction.
  std::vector<std::set<std::string>> liveIn;
  bool isLive(std::size_t ic, const std::string &v) const {
    return ic < liveIn.size() && liveIn[ic].count(v) != 0;
  }
};

Liveness computeLiveness(const Cfg &cfg);

std::string toString(const Instr &i);

} // namespace qsm
