//===-- parser.cpp - Lexer, parser and printer for .mini --------*- C++ -*-===//

#include "qsm/lang.h"
#include "qsm/smtlib.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace qsm {

bool operator==(const Expr &a, const Expr &b) {
  return a.kind == b.kind && a.value == b.value && a.name == b.name &&
         a.unary == b.unary && a.binary == b.binary && a.children == b.children;
}

bool operator==(const Stmt &a, const Stmt &b) {
  return a.kind == b.kind && a.target == b.target && a.exprs == b.exprs &&
         a.body == b.body && a.orelse == b.orelse && a.merge == b.merge;
}

bool operator==(const Decl &a, const Decl &b) {
  return a.kind == b.kind && a.type == b.type && a.name == b.name &&
         a.length == b.length && a.init == b.init && a.text == b.text;
}

const Decl *Program::findDecl(std::string_view n) const {
  for (const Item &it : items)
    if (it.decl && it.decl->name == n)
      return &*it.decl;
  return nullptr;
}

std::vector<const Decl *> Program::decls() const {
  std::vector<const Decl *> out;
  for (const Item &it : items)
    if (it.decl)
      out.push_back(&*it.decl);
  return out;
}

namespace {

enum class Tok { Ident, Int, Char, String, Punct, At, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Int value = 0;
  SourcePos pos;
};

const std::set<std::string> Keywords = {"program", "sym",    "int",
                                        "byte",    "if",     "else",
                                        "while",   "assume", "assert",
                                        "return"};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip();
      Token t;
      t.pos = {line_, col_};
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Tok::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
          t.text.push_back(take());
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Int;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text.push_back(take());
        auto [p, ec] = std::from_chars(t.text.data(),
                                       t.text.data() + t.text.size(), t.value);
        if (ec != std::errc())
          throw ParseError("integer literal out of range", t.pos.line,
                           t.pos.column);
      } else if (c == '\'') {
        take();
        t.kind = Tok::Char;
        t.value = static_cast<unsigned char>(escaped());
        if (pos_ >= src_.size() || src_[pos_] != '\'')
          throw ParseError("unterminated character literal", t.pos.line,
                           t.pos.column);
        take();
      } else if (c == '"') {
        take();
        t.kind = Tok::String;
        while (pos_ < src_.size() && src_[pos_] != '"')
          t.text.push_back(escaped());
        if (pos_ >= src_.size())
          throw ParseError("unterminated string literal", t.pos.line,
                           t.pos.column);
        take();
      } else if (c == '@') {
        take();
        t.kind = Tok::At;
        while (pos_ < src_.size() &&
               std::isalpha(static_cast<unsigned char>(src_[pos_])))
          t.text.push_back(take());
      } else {
        t.kind = Tok::Punct;
        static const char *const two[] = {"&&", "||", "==", "!=", "<=", ">="};
        std::string_view rest = src_.substr(pos_);
        auto it = std::find_if(std::begin(two), std::end(two),
                               [&](const char *op) { return rest.starts_with(op); });
        if (it != std::end(two)) {
          t.text = *it;
          take();
          take();
        } else if (std::string_view("{}()[];,=<>+-*!").find(c) !=
                   std::string_view::npos) {
          t.text = std::string(1, take());
        } else {
          throw ParseError(std::string("unexpected character '") + c + "'",
                           line_, col_);
        }
      }
      out.push_back(t);
    }
  }

private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  char escaped() {
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of input", line_, col_);
    char c = take();
    if (c != '\\')
      return c;
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of input", line_, col_);
    char e = take();
    switch (e) {
    case 'n':
      return '\n';
    case 't':
      return '\t';
    case '0':
      return '\0';
    default:
      return e;
    }
  }

  void skip() {
    while (pos_ < src_.size()) {
      if (std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        take();
      } else if (src_.substr(pos_).starts_with("//")) {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          take();
      } else if (src_.substr(pos_).starts_with("/*")) {
        int l = line_, c = col_;
        take();
        take();
        while (pos_ < src_.size() && !src_.substr(pos_).starts_with("*/"))
          take();
        if (pos_ >= src_.size())
          throw ParseError("unterminated comment", l, c);
        take();
        take();
      } else {
        return;
      }
    }
  }
};

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    expectWord("program");
    p.name = ident("program name");
    expect("{");
    scopes_.emplace_back();
    while (!is("}")) {
      if (at().kind == Tok::End)
        fail("expected '}'");
      if (isWord("sym") || isWord("int") || isWord("byte"))
        p.items.push_back(Item{decl(), std::nullopt});
      else
        p.items.push_back(Item{std::nullopt, stmt()});
    }
    expect("}");
    if (at().kind != Tok::End)
      fail("unexpected input after program");
    return p;
  }

private:
  std::vector<Token> toks_;
  std::size_t i_ = 0;
  std::vector<std::map<std::string, bool>> scopes_; // name -> isArray

  const Token &at() const { return toks_[i_]; }
  bool is(std::string_view p) const {
    return at().kind == Tok::Punct && at().text == p;
  }
  bool isWord(std::string_view w) const {
    return at().kind == Tok::Ident && at().text == w;
  }

  [[noreturn]] void fail(const std::string &msg) const {
    throw ParseError(msg, at().pos.line, at().pos.column);
  }
  [[noreturn]] void failAt(const std::string &msg, SourcePos pos) const {
    throw ParseError(msg, pos.line, pos.column);
  }

  void expect(std::string_view p) {
    if (!is(p))
      fail("expected '" + std::string(p) + "'");
    ++i_;
  }
  void expectWord(std::string_view w) {
    if (!isWord(w))
      fail("expected '" + std::string(w) + "'");
    ++i_;
  }

  std::string ident(const char *what) {
    if (at().kind != Tok::Ident || Keywords.count(at().text))
      fail(std::string("expected ") + what);
    return toks_[i_++].text;
  }

  const bool *lookup(const std::string &n) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(n);
      if (f != it->end())
        return &f->second;
    }
    return nullptr;
  }

  void requireScalar(const std::string &n, SourcePos pos) const {
    const bool *isArray = lookup(n);
    if (!isArray)
      failAt("undeclared identifier '" + n + "'", pos);
    if (*isArray)
      failAt("array '" + n + "' used as a scalar", pos);
  }
  void requireArray(const std::string &n, SourcePos pos) const {
    const bool *isArray = lookup(n);
    if (!isArray)
      failAt("undeclared identifier '" + n + "'", pos);
    if (!*isArray)
      failAt("scalar '" + n + "' used as an array", pos);
  }

  Decl decl() {
    Decl d;
    d.pos = at().pos;
    if (isWord("sym")) {
      ++i_;
      d.kind = DeclKind::Input;
    }
    if (isWord("int"))
      d.type = ElemType::Int;
    else if (isWord("byte"))
      d.type = ElemType::Byte;
    else
      fail("expected 'int' or 'byte'");
    ++i_;
    SourcePos namePos = at().pos;
    d.name = ident("identifier");
    if (isSmtReserved(d.name))
      failAt("'" + d.name + "' is a reserved name", namePos);
    if (lookup(d.name))
      failAt("redeclaration of '" + d.name + "'", namePos);
    if (is("[")) {
      ++i_;
      if (at().kind != Tok::Int)
        fail("expected array length");
      d.length = toks_[i_++].value;
      if (*d.length < 1)
        failAt("array length must be at least 1", namePos);
      expect("]");
    }
    if (is("=")) {
      if (d.kind == DeclKind::Input)
        fail("symbolic inputs cannot be initialized");
      ++i_;
      if (d.isArray()) {
        if (at().kind == Tok::String) {
          d.text = toks_[i_++].text;
          if (static_cast<Int>(d.text->size()) > *d.length)
            failAt("string literal longer than the array", namePos);
        } else {
          expect("{");
          d.init.push_back(expr());
          while (is(",")) {
            ++i_;
            d.init.push_back(expr());
          }
          expect("}");
          if (static_cast<Int>(d.init.size()) > *d.length)
            failAt("initializer longer than the array", namePos);
        }
      } else {
        d.init.push_back(expr());
      }
    }
    expect(";");
    scopes_.back()[d.name] = d.isArray();
    return d;
  }

  std::vector<Stmt> block() {
    expect("{");
    std::vector<Stmt> out;
    while (!is("}")) {
      if (at().kind == Tok::End)
        fail("expected '}'");
      if (isWord("sym") || isWord("int") || isWord("byte"))
        fail("declarations are only allowed at the top level");
      out.push_back(stmt());
    }
    expect("}");
    return out;
  }

  Stmt stmt() {
    Stmt s;
    s.pos = at().pos;
    if (at().kind == Tok::At) {
      if (at().text != "merge")
        fail("unknown annotation '@" + at().text + "'");
      ++i_;
      if (!isWord("while"))
        fail("@merge must annotate a while loop");
      s.merge = true;
    }
    if (isWord("if")) {
      ++i_;
      s.kind = StmtKind::If;
      expect("(");
      s.exprs.push_back(expr());
      expect(")");
      s.body = block();
      if (isWord("else")) {
        ++i_;
        if (isWord("if"))
          s.orelse.push_back(stmt());
        else
          s.orelse = block();
      }
      return s;
    }
    if (isWord("while")) {
      ++i_;
      s.kind = StmtKind::While;
      expect("(");
      s.exprs.push_back(expr());
      expect(")");
      s.body = block();
      return s;
    }
    if (isWord("assume") || isWord("assert")) {
      s.kind = isWord("assume") ? StmtKind::Assume : StmtKind::Assert;
      ++i_;
      expect("(");
      s.exprs.push_back(expr());
      expect(")");
      expect(";");
      return s;
    }
    if (isWord("return")) {
      ++i_;
      s.kind = StmtKind::Return;
      if (!is(";"))
        s.exprs.push_back(expr());
      expect(";");
      return s;
    }
    SourcePos namePos = at().pos;
    s.target = ident("statement");
    if (is("[")) {
      requireArray(s.target, namePos);
      ++i_;
      s.kind = StmtKind::Store;
      s.exprs.push_back(expr());
      expect("]");
    } else {
      requireScalar(s.target, namePos);
      s.kind = StmtKind::Assign;
    }
    expect("=");
    s.exprs.push_back(expr());
    expect(";");
    return s;
  }

  static int precedence(const Token &t) {
    if (t.kind != Tok::Punct)
      return -1;
    const std::string &s = t.text;
    if (s == "||")
      return 1;
    if (s == "&&")
      return 2;
    if (s == "==" || s == "!=")
      return 3;
    if (s == "<" || s == "<=" || s == ">" || s == ">=")
      return 4;
    if (s == "+" || s == "-")
      return 5;
    if (s == "*")
      return 6;
    return -1;
  }

  static BinaryOp binaryOp(const std::string &s) {
    static const std::map<std::string, BinaryOp> ops = {
        {"||", BinaryOp::Or}, {"&&", BinaryOp::And}, {"==", BinaryOp::Eq},
        {"!=", BinaryOp::Ne}, {"<", BinaryOp::Lt},   {"<=", BinaryOp::Le},
        {">", BinaryOp::Gt},  {">=", BinaryOp::Ge},  {"+", BinaryOp::Add},
        {"-", BinaryOp::Sub}, {"*", BinaryOp::Mul}};
    return ops.at(s);
  }

  Expr expr(int minPrec = 1) {
    Expr lhs = unary();
    for (;;) {
      int prec = precedence(at());
      if (prec < minPrec)
        return lhs;
      Token op = toks_[i_++];
      Expr rhs = expr(prec + 1);
      Expr e;
      e.kind = ExprKind::Binary;
      e.binary = binaryOp(op.text);
      e.pos = op.pos;
      e.children = {std::move(lhs), std::move(rhs)};
      lhs = std::move(e);
    }
  }

  Expr unary() {
    if (is("-") || is("!")) {
      Expr e;
      e.kind = ExprKind::Unary;
      e.unary = is("-") ? UnaryOp::Neg : UnaryOp::Not;
      e.pos = at().pos;
      ++i_;
      e.children.push_back(unary());
      return e;
    }
    return primary();
  }

  Expr primary() {
    Expr e;
    e.pos = at().pos;
    if (is("(")) {
      ++i_;
      Expr inner = expr();
      expect(")");
      return inner;
    }
    if (at().kind == Tok::Int || at().kind == Tok::Char) {
      e.kind = at().kind == Tok::Int ? ExprKind::IntLit : ExprKind::CharLit;
      e.value = toks_[i_++].value;
      return e;
    }
    e.name = ident("expression");
    if (is("[")) {
      requireArray(e.name, e.pos);
      ++i_;
      e.kind = ExprKind::Index;
      e.children.push_back(expr());
      expect("]");
      return e;
    }
    requireScalar(e.name, e.pos);
    e.kind = ExprKind::Name;
    return e;
  }
};

//===----------------------------------------------------------------------===//
// Printing
//===----------------------------------------------------------------------===//

const char *binaryText(BinaryOp op) {
  switch (op) {
  case BinaryOp::Or:
    return "||";
  case BinaryOp::And:
    return "&&";
  case BinaryOp::Eq:
    return "==";
  case BinaryOp::Ne:
    return "!=";
  case BinaryOp::Lt:
    return "<";
  case BinaryOp::Le:
    return "<=";
  case BinaryOp::Gt:
    return ">";
  case BinaryOp::Ge:
    return ">=";
  case BinaryOp::Add:
    return "+";
  case BinaryOp::Sub:
    return "-";
  case BinaryOp::Mul:
    return "*";
  }
  return "?";
}

std::string charLiteral(Int v) {
  switch (v) {
  case '\n':
    return "'\\n'";
  case '\t':
    return "'\\t'";
  case 0:
    return "'\\0'";
  case '\'':
    return "'\\''";
  case '\\':
    return "'\\\\'";
  default:
    if (v >= 32 && v < 127)
      return std::string("'") + static_cast<char>(v) + "'";
    return std::to_string(v);
  }
}

std::string stringLiteral(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
    case '\n':
      out += "\\n";
      break;
    case '\t':
      out += "\\t";
      break;
    case '\0':
      out += "\\0";
      break;
    case '"':
    case '\\':
      out += '\\';
      out += c;
      break;
    default:
      out += c;
    }
  }
  return out + "\"";
}

void printStmts(std::ostream &os, const std::vector<Stmt> &ss, int indent);

void printStmt(std::ostream &os, const Stmt &s, int indent) {
  std::string pad(indent * 2, ' ');
  switch (s.kind) {
  case StmtKind::Assign:
    os << pad << s.target << " = " << printExpr(s.exprs[0]) << ";\n";
    return;
  case StmtKind::Store:
    os << pad << s.target << "[" << printExpr(s.exprs[0])
       << "] = " << printExpr(s.exprs[1]) << ";\n";
    return;
  case StmtKind::If:
    os << pad << "if (" << printExpr(s.exprs[0]) << ") {\n";
    printStmts(os, s.body, indent + 1);
    os << pad << "}";
    if (!s.orelse.empty()) {
      os << " else {\n";
      printStmts(os, s.orelse, indent + 1);
      os << pad << "}";
    }
    os << "\n";
    return;
  case StmtKind::While:
    os << pad << (s.merge ? "@merge " : "") << "while ("
       << printExpr(s.exprs[0]) << ") {\n";
    printStmts(os, s.body, indent + 1);
    os << pad << "}\n";
    return;
  case StmtKind::Assume:
  case StmtKind::Assert:
    os << pad << (s.kind == StmtKind::Assume ? "assume(" : "assert(")
       << printExpr(s.exprs[0]) << ");\n";
    return;
  case StmtKind::Return:
    os << pad << "return";
    if (!s.exprs.empty())
      os << " " << printExpr(s.exprs[0]);
    os << ";\n";
    return;
  }
}

void printStmts(std::ostream &os, const std::vector<Stmt> &ss, int indent) {
  for (const Stmt &s : ss)
    printStmt(os, s, indent);
}

} // namespace

std::string printExpr(const Expr &e) {
  switch (e.kind) {
  case ExprKind::IntLit:
    return std::to_string(e.value);
  case ExprKind::CharLit:
    return charLiteral(e.value);
  case ExprKind::Name:
    return e.name;
  case ExprKind::Index:
    return e.name + "[" + printExpr(e.children[0]) + "]";
  case ExprKind::Unary:
    return std::string("(") + (e.unary == UnaryOp::Neg ? "-" : "!") +
           printExpr(e.children[0]) + ")";
  case ExprKind::Binary:
    return "(" + printExpr(e.children[0]) + " " + binaryText(e.binary) + " " +
           printExpr(e.children[1]) + ")";
  }
  return "";
}

std::string printProgram(const Program &p) {
  std::ostringstream os;
  os << "program " << p.name << " {\n";
  for (const Item &it : p.items) {
    if (it.stmt) {
      printStmt(os, *it.stmt, 1);
      continue;
    }
    const Decl &d = *it.decl;
    os << "  " << (d.kind == DeclKind::Input ? "sym " : "")
       << (d.type == ElemType::Int ? "int " : "byte ") << d.name;
    if (d.length)
      os << "[" << *d.length << "]";
    if (d.text) {
      os << " = " << stringLiteral(*d.text);
    } else if (!d.init.empty()) {
      os << " = ";
      if (d.isArray()) {
        os << "{";
        for (std::size_t i = 0; i < d.init.size(); ++i)
          os << (i ? ", " : "") << printExpr(d.init[i]);
        os << "}";
      } else {
        os << printExpr(d.init[0]);
      }
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

Program parseProgram(std::string_view source) {
  return Parser(Lexer(source).run()).program();
}

} // namespace qsm
