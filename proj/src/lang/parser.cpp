#include "loopinv/parser.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <optional>
#include <regex>

#include "lexer.h"

namespace loopinv {

using detail::Tok;
using detail::Token;

const char* diag_name(DiagCode code) {
  switch (code) {
    case DiagCode::Syntax: return "syntax";
    case DiagCode::FloatLiteral: return "float-literal";
    case DiagCode::NestedLoop: return "nested-loop";
    case DiagCode::MultipleLoops: return "multiple-loops";
    case DiagCode::MissingLoop: return "missing-loop";
    case DiagCode::MissingAssertion: return "missing-assertion";
    case DiagCode::MultipleAssertions: return "multiple-assertions";
    case DiagCode::ReturnInLoop: return "return-in-loop";
    case DiagCode::Unsupported: return "unsupported";
    case DiagCode::UndeclaredVariable: return "undeclared-variable";
    case DiagCode::TypeError: return "type-error";
    case DiagCode::NoCodeBlock: return "no-code-block";
  }
  return "unknown";
}

namespace {

std::string format_message(DiagCode code, const std::string& message, int line, int column) {
  std::string out = std::string("error[") + diag_name(code) + "]";
  if (line > 0) out += " at " + std::to_string(line) + ":" + std::to_string(column);
  return out + ": " + message;
}

}  // namespace

ParseError::ParseError(DiagCode code, std::string message, int line, int column)
    : std::runtime_error(format_message(code, message, line, column)),
      code_(code),
      line_(line),
      column_(column),
      detail_(std::move(message)) {}

namespace {

constexpr std::string_view kNondetPrefix = "__nd";

bool is_nondet_call_name(const std::string& s) {
  return s == "unknown" || s == "__VERIFIER_nondet_int" || s == "nondet" || s == "nondet_int";
}

int binary_precedence(const std::string& p, bool allow_implies) {
  if (p == "==>") return allow_implies ? 1 : -1;
  if (p == "||") return 2;
  if (p == "&&") return 3;
  if (p == "==" || p == "!=") return 4;
  if (p == "<" || p == "<=" || p == ">" || p == ">=") return 5;
  if (p == "+" || p == "-") return 6;
  if (p == "*" || p == "/" || p == "%") return 7;
  return -1;
}

BinOp binop_of(const std::string& p) {
  if (p == "==>") return BinOp::Implies;
  if (p == "||") return BinOp::Or;
  if (p == "&&") return BinOp::And;
  if (p == "==") return BinOp::Eq;
  if (p == "!=") return BinOp::Ne;
  if (p == "<") return BinOp::Lt;
  if (p == "<=") return BinOp::Le;
  if (p == ">") return BinOp::Gt;
  if (p == ">=") return BinOp::Ge;
  if (p == "+") return BinOp::Add;
  if (p == "-") return BinOp::Sub;
  if (p == "*") return BinOp::Mul;
  if (p == "/") return BinOp::Div;
  return BinOp::Mod;
}

/// An expression as parsed, before type elaboration, with its source position.
struct Located {
  Expr expr;
  int line;
  int column;
};

/// Boolean-ness of an unelaborated tree, judged from its head symbol.
bool looks_bool(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::BoolLit:
      return true;
    case Expr::Kind::Unary:
      return e.unary_op() == UnOp::Not;
    case Expr::Kind::Binary:
      return !is_arith(e.binary_op());
    default:
      return false;
  }
}

class Elaborator {
 public:
  Elaborator(const std::set<std::string>* vars, int line, int column)
      : vars_(vars), line_(line), column_(column) {}

  Expr as_bool(const Expr& e) const {
    switch (e.kind()) {
      case Expr::Kind::BoolLit:
        return e;
      case Expr::Kind::Unary:
        if (e.unary_op() == UnOp::Not) {
          return Expr::unary(UnOp::Not, as_bool(e.operand())).with_parens(e.parenthesized());
        }
        break;
      case Expr::Kind::Binary: {
        BinOp op = e.binary_op();
        if (is_logical(op)) {
          return Expr::binary(op, as_bool(e.lhs()), as_bool(e.rhs())).with_parens(e.parenthesized());
        }
        if (is_relational(op)) {
          return Expr::binary(op, as_int(e.lhs()), as_int(e.rhs())).with_parens(e.parenthesized());
        }
        if (op == BinOp::Eq || op == BinOp::Ne) {
          if (looks_bool(e.lhs()) && looks_bool(e.rhs())) {
            return Expr::binary(op, as_bool(e.lhs()), as_bool(e.rhs())).with_parens(e.parenthesized());
          }
          return Expr::binary(op, as_int(e.lhs()), as_int(e.rhs())).with_parens(e.parenthesized());
        }
        break;
      }
      default:
        break;
    }
    // Integer in a condition position: C truthiness.
    return Expr::binary(BinOp::Ne, as_int(e), Expr::int_lit(0));
  }

  Expr as_int(const Expr& e) const {
    switch (e.kind()) {
      case Expr::Kind::IntLit:
        return e;
      case Expr::Kind::Var:
        if (vars_ && !vars_->count(e.name())) {
          throw ParseError(DiagCode::UndeclaredVariable, "undeclared variable '" + e.name() + "'", line_,
                           column_);
        }
        return e;
      case Expr::Kind::Unary:
        if (e.unary_op() == UnOp::Neg) {
          return Expr::unary(UnOp::Neg, as_int(e.operand())).with_parens(e.parenthesized());
        }
        break;
      case Expr::Kind::Binary:
        if (is_arith(e.binary_op())) {
          return Expr::binary(e.binary_op(), as_int(e.lhs()), as_int(e.rhs()))
              .with_parens(e.parenthesized());
        }
        break;
      default:
        break;
    }
    throw ParseError(DiagCode::TypeError, "boolean expression used where an integer is expected", line_,
                     column_);
  }

 private:
  const std::set<std::string>* vars_;
  int line_;
  int column_;
};

/// Intermediate statement tree; loops, returns and asserts are still explicit here
/// and are removed when the function body is structured into a Program.
struct RawStmt {
  enum class Kind { Plain, If, Loop, Return, Assert };
  Kind kind = Kind::Plain;
  std::vector<Stmt> plain;
  std::vector<std::string> havocs;  // fresh variables drawn before evaluating `cond`
  Expr cond;
  std::vector<RawStmt> then_branch;
  std::vector<RawStmt> else_branch;
  int line = 0;
  int column = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, bool logic_mode) : toks_(std::move(tokens)), logic_(logic_mode) {
    for (const auto& t : toks_) {
      if (t.kind == Tok::Ident) source_idents_.insert(t.text);
    }
  }

  // ---- token helpers ----
  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool at_ident(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == s;
  }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(DiagCode code, const std::string& msg, const Token& at) const {
    throw ParseError(code, msg, at.line, at.column);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(DiagCode::Syntax, msg, peek()); }
  void expect_punct(std::string_view p) {
    if (!at_punct(p)) {
      fail("expected '" + std::string(p) + "' but found '" + describe(peek()) + "'");
    }
    next();
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier but found '" + describe(peek()) + "'");
    return next().text;
  }
  static std::string describe(const Token& t) { return t.kind == Tok::End ? "end of input" : t.text; }

  // ---- expressions ----
  Located parse_expr() {
    const Token& start = peek();
    Expr e = parse_binary(1);
    return {e, start.line, start.column};
  }

  Expr parse_binary(int min_prec) {
    Expr lhs = parse_unary();
    while (peek().kind == Tok::Punct) {
      const std::string op = peek().text;
      int prec = binary_precedence(op, logic_);
      if (prec < 0 || prec < min_prec) break;
      next();
      // `==>` is right-associative, everything else left-associative.
      int next_min = op == "==>" ? prec : prec + 1;
      Expr rhs = parse_binary(next_min);
      lhs = Expr::binary(binop_of(op), lhs, rhs);
    }
    return lhs;
  }

  Expr parse_unary() {
    if (at_punct("-")) {
      next();
      Expr operand = parse_unary();
      if (operand.kind() == Expr::Kind::IntLit && !operand.parenthesized()) {
        return Expr::int_lit(-operand.int_value());
      }
      return Expr::unary(UnOp::Neg, operand);
    }
    if (at_punct("+")) {
      next();
      return parse_unary();
    }
    if (at_punct("!")) {
      next();
      return Expr::unary(UnOp::Not, parse_unary());
    }
    if (at_punct("(")) {
      // Casts such as `(int)` are not part of the language.
      if (at_ident("int", 1) || at_ident("unsigned", 1) || at_ident("long", 1)) {
        fail(DiagCode::Unsupported, "casts are not supported", peek());
      }
      next();
      Expr inner = parse_binary(1);
      expect_punct(")");
      return inner.with_parens(true);
    }
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      next();
      std::int64_t value = 0;
      const char* first = t.text.data();
      const char* last = first + t.text.size();
      int base = 10;
      if (t.text.size() > 2 && (t.text[1] == 'x' || t.text[1] == 'X')) {
        first += 2;
        base = 16;
      }
      auto [ptr, ec] = std::from_chars(first, last, value, base);
      if (ec != std::errc() || ptr != last) fail(DiagCode::Syntax, "integer literal out of range", t);
      return Expr::int_lit(value);
    }
    if (t.kind == Tok::Ident) {
      if (t.text == "true" || t.text == "\\true") {
        next();
        return Expr::bool_lit(true);
      }
      if (t.text == "false" || t.text == "\\false") {
        next();
        return Expr::bool_lit(false);
      }
      if (at_punct("(", 1)) {
        if (is_nondet_call_name(t.text) && !logic_) {
          next();
          next();
          expect_punct(")");
          return Expr::var(fresh_nondet());
        }
        fail(DiagCode::Unsupported, "function call '" + t.text + "' is not supported", t);
      }
      if (t.text.front() == '\\') fail(DiagCode::Unsupported, "unsupported builtin '" + t.text + "'", t);
      next();
      return Expr::var(t.text);
    }
    if (t.kind == Tok::Punct && t.text == "?") fail(DiagCode::Unsupported, "conditional operator", t);
    fail("expected expression but found '" + describe(t) + "'");
  }

  Expr elaborate_bool(const Located& e) const {
    return Elaborator(logic_vars_, e.line, e.column).as_bool(e.expr);
  }
  Expr elaborate_int(const Located& e) const {
    return Elaborator(logic_vars_, e.line, e.column).as_int(e.expr);
  }

  void set_var_scope(const std::set<std::string>* vars) { logic_vars_ = vars; }

  // ---- nondeterminism ----
  std::string fresh_nondet() {
    for (;;) {
      std::string name = std::string(kNondetPrefix) + std::to_string(++nondet_counter_);
      if (!source_idents_.count(name) && !vars_.count(name)) {
        vars_.insert(name);
        nondet_.insert(name);
        pending_havocs_.push_back(name);
        return name;
      }
    }
  }

  std::vector<std::string> take_havocs() {
    std::vector<std::string> out;
    out.swap(pending_havocs_);
    return out;
  }

  // ---- statements ----
  void declare(const std::string& name, const Token& at) {
    if (vars_.count(name)) fail(DiagCode::Syntax, "redeclaration of '" + name + "'", at);
    vars_.insert(name);
    if (name.rfind(kNondetPrefix, 0) == 0) nondet_.insert(name);
  }

  static bool is_type_keyword(const Token& t) {
    return t.kind == Tok::Ident && (t.text == "int" || t.text == "long" || t.text == "short" ||
                                    t.text == "char" || t.text == "_Bool" || t.text == "bool");
  }

  static void check_unsupported_type(const Token& t) {
    if (t.kind != Tok::Ident) return;
    if (t.text == "float" || t.text == "double") {
      throw ParseError(DiagCode::FloatLiteral, "floating-point types are not supported", t.line, t.column);
    }
    if (t.text == "unsigned" || t.text == "signed" || t.text == "struct" || t.text == "union") {
      throw ParseError(DiagCode::Unsupported, "type '" + t.text + "' is not supported", t.line, t.column);
    }
  }

  /// Lowers `var = expr` (or `var = unknown()`) into plain statements.
  void lower_assign(const std::string& var, const Located& rhs, std::vector<Stmt>& out,
                    const Token& at) {
    if (!vars_.count(var)) fail(DiagCode::UndeclaredVariable, "undeclared variable '" + var + "'", at);
    auto havocs = take_havocs();
    // `x = unknown();` is a havoc of x itself.
    if (havocs.size() == 1 && rhs.expr.kind() == Expr::Kind::Var && rhs.expr.name() == havocs[0] &&
        !rhs.expr.parenthesized()) {
      vars_.erase(havocs[0]);
      nondet_.erase(havocs[0]);
      --nondet_counter_;
      out.push_back(Stmt{Havoc{var}});
      return;
    }
    for (const auto& h : havocs) out.push_back(Stmt{Havoc{h}});
    out.push_back(Stmt{Assign{var, elaborate_int(rhs)}});
  }

  std::vector<RawStmt> parse_block_or_stmt() {
    std::vector<RawStmt> out;
    if (at_punct("{")) {
      next();
      while (!at_punct("}")) {
        if (at_end()) fail("unexpected end of input inside block");
        parse_stmt(out);
      }
      next();
    } else {
      parse_stmt(out);
    }
    return out;
  }

  void push_plain(std::vector<RawStmt>& out, std::vector<Stmt> stmts, const Token& at) {
    RawStmt r;
    r.kind = RawStmt::Kind::Plain;
    r.plain = std::move(stmts);
    r.line = at.line;
    r.column = at.column;
    out.push_back(std::move(r));
  }

  /// Parses a simple statement without the trailing ';' (assignment, ++/--, compound assignment).
  std::vector<Stmt> parse_simple() {
    const Token& at = peek();
    std::vector<Stmt> out;
    if (at_punct("++") || at_punct("--")) {
      bool inc = next().text == "++";
      std::string v = expect_ident();
      if (!vars_.count(v)) fail(DiagCode::UndeclaredVariable, "undeclared variable '" + v + "'", at);
      out.push_back(Stmt{Assign{v, Expr::binary(inc ? BinOp::Add : BinOp::Sub, Expr::var(v), Expr::int_lit(1))}});
      return out;
    }
    if (peek().kind == Tok::Ident && is_nondet_call_name(peek().text) && at_punct("(", 1)) {
      next();
      next();
      expect_punct(")");
      out.push_back(Stmt{Skip{}});
      return out;
    }
    std::string v = expect_ident();
    if (at_punct("++") || at_punct("--")) {
      bool inc = next().text == "++";
      if (!vars_.count(v)) fail(DiagCode::UndeclaredVariable, "undeclared variable '" + v + "'", at);
      out.push_back(Stmt{Assign{v, Expr::binary(inc ? BinOp::Add : BinOp::Sub, Expr::var(v), Expr::int_lit(1))}});
      return out;
    }
    if (at_punct("=")) {
      next();
      Located rhs = parse_expr();
      lower_assign(v, rhs, out, at);
      return out;
    }
    for (auto [tok, op] : {std::pair{"+=", BinOp::Add}, {"-=", BinOp::Sub}, {"*=", BinOp::Mul},
                           {"/=", BinOp::Div}, {"%=", BinOp::Mod}}) {
      if (at_punct(tok)) {
        next();
        Located rhs = parse_expr();
        Expr parened = rhs.expr.kind() == Expr::Kind::Binary ? rhs.expr.with_parens(true) : rhs.expr;
        lower_assign(v, {Expr::binary(op, Expr::var(v), parened), rhs.line, rhs.column}, out, at);
        return out;
      }
    }
    fail("expected assignment after '" + v + "'");
  }

  void parse_stmt(std::vector<RawStmt>& out) {
    const Token& t = peek();
    check_unsupported_type(t);
    if (at_punct(";")) {
      next();
      push_plain(out, {Stmt{Skip{}}}, t);
      return;
    }
    if (at_punct("{")) {
      auto inner = parse_block_or_stmt();
      for (auto& s : inner) out.push_back(std::move(s));
      return;
    }
    if (is_type_keyword(t)) {
      next();
      std::vector<Stmt> plain;
      for (;;) {
        const Token& name_tok = peek();
        std::string name = expect_ident();
        if (at_punct("(")) fail(DiagCode::Unsupported, "nested function declarations are not supported", name_tok);
        if (at_punct("[")) fail(DiagCode::Unsupported, "arrays are not supported", name_tok);
        declare(name, name_tok);
        if (at_punct("=")) {
          next();
          Located rhs = parse_expr();
          lower_assign(name, rhs, plain, name_tok);
        }
        if (at_punct(",")) {
          next();
          continue;
        }
        break;
      }
      expect_punct(";");
      if (!plain.empty()) push_plain(out, std::move(plain), t);
      return;
    }
    if (t.kind == Tok::Ident && t.text == "if") {
      next();
      expect_punct("(");
      Located c = parse_expr();
      expect_punct(")");
      RawStmt r;
      r.kind = RawStmt::Kind::If;
      r.havocs = take_havocs();
      r.cond = elaborate_bool(c);
      r.line = t.line;
      r.column = t.column;
      r.then_branch = parse_block_or_stmt();
      if (at_ident("else")) {
        next();
        r.else_branch = parse_block_or_stmt();
      }
      out.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Ident && t.text == "while") {
      next();
      expect_punct("(");
      Located c = parse_expr();
      expect_punct(")");
      RawStmt r;
      r.kind = RawStmt::Kind::Loop;
      r.havocs = take_havocs();
      r.cond = elaborate_bool(c);
      r.line = t.line;
      r.column = t.column;
      r.then_branch = parse_block_or_stmt();
      out.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Ident && t.text == "for") {
      next();
      expect_punct("(");
      std::vector<Stmt> init;
      if (!at_punct(";")) {
        if (is_type_keyword(peek())) fail(DiagCode::Unsupported, "declarations in for-init are not supported", peek());
        for (;;) {
          auto s = parse_simple();
          init.insert(init.end(), s.begin(), s.end());
          if (!at_punct(",")) break;
          next();
        }
      }
      expect_punct(";");
      if (!init.empty()) push_plain(out, std::move(init), t);
      RawStmt r;
      r.kind = RawStmt::Kind::Loop;
      r.line = t.line;
      r.column = t.column;
      if (at_punct(";")) {
        r.cond = Expr::bool_lit(true);
      } else {
        Located c = parse_expr();
        r.havocs = take_havocs();
        r.cond = elaborate_bool(c);
      }
      expect_punct(";");
      std::vector<Stmt> step;
      if (!at_punct(")")) {
        for (;;) {
          auto s = parse_simple();
          step.insert(step.end(), s.begin(), s.end());
          if (!at_punct(",")) break;
          next();
        }
      }
      expect_punct(")");
      r.then_branch = parse_block_or_stmt();
      if (!step.empty()) push_plain(r.then_branch, std::move(step), t);
      out.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Ident && t.text == "do") fail(DiagCode::Unsupported, "do-while loops are not supported", t);
    if (t.kind == Tok::Ident && (t.text == "break" || t.text == "continue" || t.text == "goto" ||
                                 t.text == "switch")) {
      fail(DiagCode::Unsupported, "'" + t.text + "' is not supported", t);
    }
    if (t.kind == Tok::Ident && t.text == "return") {
      next();
      if (!at_punct(";")) {
        parse_expr();
        take_havocs();
      }
      expect_punct(";");
      RawStmt r;
      r.kind = RawStmt::Kind::Return;
      r.line = t.line;
      r.column = t.column;
      out.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Ident && (t.text == "assert" || t.text == "__VERIFIER_assert") && at_punct("(", 1)) {
      next();
      next();
      Located c = parse_expr();
      expect_punct(")");
      expect_punct(";");
      RawStmt r;
      r.kind = RawStmt::Kind::Assert;
      r.havocs = take_havocs();
      r.cond = elaborate_bool(c);
      r.line = t.line;
      r.column = t.column;
      out.push_back(std::move(r));
      return;
    }
    if (t.kind == Tok::Ident && (t.text == "assume" || t.text == "__VERIFIER_assume") && at_punct("(", 1)) {
      next();
      next();
      Located c = parse_expr();
      expect_punct(")");
      expect_punct(";");
      std::vector<Stmt> plain;
      for (const auto& h : take_havocs()) plain.push_back(Stmt{Havoc{h}});
      plain.push_back(Stmt{Assume{elaborate_bool(c)}});
      push_plain(out, std::move(plain), t);
      return;
    }
    auto s = parse_simple();
    expect_punct(";");
    push_plain(out, std::move(s), t);
  }

  // ---- top level ----
  std::vector<RawStmt> parse_translation_unit() {
    std::optional<std::vector<RawStmt>> main_body;
    while (!at_end()) {
      if (at_ident("extern")) {
        // extern int unknown(); and similar prototypes
        while (!at_punct(";") && !at_end()) next();
        expect_punct(";");
        continue;
      }
      if (at_punct(";")) {
        next();
        continue;
      }
      check_unsupported_type(peek());
      if (is_type_keyword(peek()) || at_ident("void")) {
        next();
        const Token& name_tok = peek();
        std::string name = expect_ident();
        if (!at_punct("(")) fail(DiagCode::Unsupported, "global variables are not supported", name_tok);
        next();
        if (at_ident("void")) next();
        if (!at_punct(")")) {
          if (name == "main") fail(DiagCode::Unsupported, "main must not take parameters", name_tok);
          while (!at_punct(")") && !at_end()) next();
        }
        expect_punct(")");
        if (at_punct(";")) {
          next();  // prototype
          continue;
        }
        if (name != "main") fail(DiagCode::Unsupported, "only a single function 'main' is supported", name_tok);
        if (main_body) fail(DiagCode::Unsupported, "multiple definitions of main", name_tok);
        if (!at_punct("{")) fail("expected '{' to start the body of main");
        main_body = parse_block_or_stmt();
        continue;
      }
      fail("expected a declaration of main");
    }
    if (!main_body) throw ParseError(DiagCode::Syntax, "no main function found", 1, 1);
    return std::move(*main_body);
  }

  std::set<std::string> vars_;
  std::set<std::string> nondet_;

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool logic_;
  const std::set<std::string>* logic_vars_ = nullptr;
  std::set<std::string> source_idents_;
  std::vector<std::string> pending_havocs_;
  int nondet_counter_ = 0;
};

// ---- structuring RawStmt lists into a Program ----

int count_loops(const std::vector<RawStmt>& stmts) {
  int n = 0;
  for (const auto& s : stmts) {
    if (s.kind == RawStmt::Kind::Loop) ++n;
    n += count_loops(s.then_branch) + count_loops(s.else_branch);
  }
  return n;
}

const RawStmt* find_nested_loop(const std::vector<RawStmt>& stmts) {
  for (const auto& s : stmts) {
    if (s.kind == RawStmt::Kind::Loop) {
      if (count_loops(s.then_branch) > 0) return &s;
    }
    if (const RawStmt* r = find_nested_loop(s.then_branch)) return r;
    if (const RawStmt* r = find_nested_loop(s.else_branch)) return r;
  }
  return nullptr;
}

enum class Region { Pre, Body };

std::vector<Stmt> lower_block(const std::vector<RawStmt>& raw, Region region, bool allow_guard_returns);

void lower_into(const RawStmt& s, Region region, bool allow_guard_returns, std::vector<Stmt>& out) {
  switch (s.kind) {
    case RawStmt::Kind::Plain:
      out.insert(out.end(), s.plain.begin(), s.plain.end());
      return;
    case RawStmt::Kind::If: {
      for (const auto& h : s.havocs) out.push_back(Stmt{Havoc{h}});
      const bool then_is_return =
          s.then_branch.size() == 1 && s.then_branch[0].kind == RawStmt::Kind::Return;
      if (then_is_return && region == Region::Pre && allow_guard_returns && s.else_branch.empty()) {
        out.push_back(Stmt{Assume{negate(s.cond)}});
        return;
      }
      If node;
      node.cond = s.cond;
      node.then_branch = lower_block(s.then_branch, region, false);
      node.else_branch = lower_block(s.else_branch, region, false);
      out.push_back(Stmt{std::move(node)});
      return;
    }
    case RawStmt::Kind::Return:
      if (region == Region::Body) {
        throw ParseError(DiagCode::ReturnInLoop, "return inside the loop is not supported", s.line, s.column);
      }
      throw ParseError(DiagCode::Unsupported, "return is only supported as an early-exit guard before the loop",
                       s.line, s.column);
    case RawStmt::Kind::Assert:
      throw ParseError(DiagCode::Unsupported, "assertions are only supported after the loop", s.line, s.column);
    case RawStmt::Kind::Loop:
      throw ParseError(DiagCode::NestedLoop, "nested loops are not supported", s.line, s.column);
  }
}

std::vector<Stmt> lower_block(const std::vector<RawStmt>& raw, Region region, bool allow_guard_returns) {
  std::vector<Stmt> out;
  for (const auto& s : raw) lower_into(s, region, allow_guard_returns, out);
  return out;
}

}  // namespace

Program parse_program(std::string_view source, std::string name) {
  Parser parser(detail::lex(source), /*logic_mode=*/false);
  std::vector<RawStmt> raw = parser.parse_translation_unit();

  if (const RawStmt* nested = find_nested_loop(raw)) {
    throw ParseError(DiagCode::NestedLoop, "nested loops are not supported", nested->line, nested->column);
  }
  const int loops = count_loops(raw);
  if (loops == 0) throw ParseError(DiagCode::MissingLoop, "program has no loop", 1, 1);
  if (loops > 1) {
    int seen = 0;
    for (const auto& s : raw) {
      if (s.kind == RawStmt::Kind::Loop && ++seen == 2) {
        throw ParseError(DiagCode::MultipleLoops, "only a single loop is supported", s.line, s.column);
      }
    }
    throw ParseError(DiagCode::MultipleLoops, "only a single top-level loop is supported", 1, 1);
  }

  auto loop_it = std::find_if(raw.begin(), raw.end(), [](const RawStmt& s) { return s.kind == RawStmt::Kind::Loop; });
  if (loop_it == raw.end()) {
    // The only loop sits inside a conditional.
    throw ParseError(DiagCode::Unsupported, "the loop must be at the top level of main", 1, 1);
  }

  Program prog;
  prog.name = std::move(name);
  prog.pre = lower_block(std::vector<RawStmt>(raw.begin(), loop_it), Region::Pre, true);
  prog.cond_havoc = loop_it->havocs;
  prog.loop_cond = loop_it->cond;
  prog.body = lower_block(loop_it->then_branch, Region::Body, false);

  std::optional<Expr> assertion;
  for (auto it = std::next(loop_it); it != raw.end(); ++it) {
    switch (it->kind) {
      case RawStmt::Kind::Assert:
        if (assertion) {
          throw ParseError(DiagCode::MultipleAssertions, "exactly one assertion after the loop is supported",
                           it->line, it->column);
        }
        if (!it->havocs.empty()) {
          throw ParseError(DiagCode::Unsupported, "nondeterminism inside the assertion is not supported",
                           it->line, it->column);
        }
        assertion = it->cond;
        break;
      case RawStmt::Kind::Return:
        if (!assertion) {
          throw ParseError(DiagCode::MissingAssertion, "return before the post-loop assertion", it->line,
                           it->column);
        }
        break;
      case RawStmt::Kind::Plain:
        if (std::all_of(it->plain.begin(), it->plain.end(),
                        [](const Stmt& s) { return std::holds_alternative<Skip>(s.node); })) {
          break;
        }
        [[fallthrough]];
      default:
        throw ParseError(DiagCode::Unsupported, "only the assertion may follow the loop", it->line, it->column);
    }
  }
  if (!assertion) throw ParseError(DiagCode::MissingAssertion, "no assertion after the loop", 1, 1);
  prog.assertion = *assertion;
  prog.vars = parser.vars_;
  prog.nondet_vars = parser.nondet_;
  return prog;
}

Expr parse_formula(std::string_view text, const std::set<std::string>* vars) {
  Parser parser(detail::lex(text), /*logic_mode=*/true);
  parser.set_var_scope(vars);
  Located e = parser.parse_expr();
  if (!parser.at_end()) {
    const auto& t = parser.peek();
    throw ParseError(DiagCode::Syntax, "unexpected '" + t.text + "' after expression", t.line, t.column);
  }
  return parser.elaborate_bool(e);
}

namespace {

struct FoundItem {
  std::size_t position;
  std::string text;
};

/// Returns the index one past the ')' matching the '(' at `open`, or npos.
std::size_t match_paren(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::vector<FoundItem> find_asserts(std::string_view content) {
  std::vector<FoundItem> out;
  static const std::regex kAssert(R"(\bassert\s*\()");
  std::string s(content);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kAssert); it != std::sregex_iterator(); ++it) {
    std::size_t open = static_cast<std::size_t>(it->position() + it->length() - 1);
    std::size_t close = match_paren(content, open);
    if (close == std::string_view::npos) {
      throw ParseError(DiagCode::Syntax, "unbalanced parentheses in assert");
    }
    out.push_back({static_cast<std::size_t>(it->position()), std::string(content.substr(open + 1, close - open - 2))});
  }
  return out;
}

std::vector<FoundItem> find_loop_invariants(std::string_view content) {
  std::vector<FoundItem> out;
  static const std::regex kInv(R"(\bloop\s+invariant\s+(?:[A-Za-z_]\w*\s*:(?!:))?)");
  std::string s(content);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kInv); it != std::sregex_iterator(); ++it) {
    std::size_t start = static_cast<std::size_t>(it->position() + it->length());
    int depth = 0;
    std::size_t end = start;
    for (; end < s.size(); ++end) {
      if (s[end] == '(') ++depth;
      if (s[end] == ')') --depth;
      if (s[end] == ';' && depth == 0) break;
    }
    if (end == s.size()) throw ParseError(DiagCode::Syntax, "loop invariant without terminating ';'");
    out.push_back({static_cast<std::size_t>(it->position()), s.substr(start, end - start)});
  }
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

}  // namespace

InvariantSet parse_invariant_block(std::string_view text, const Program& prog) {
  // Locate the last fenced block.
  std::vector<std::pair<std::size_t, std::size_t>> fences;  // content [begin, end)
  std::optional<std::size_t> open;
  std::size_t line_begin = 0;
  while (line_begin <= text.size()) {
    std::size_t line_end = text.find('\n', line_begin);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = text.substr(line_begin, line_end - line_begin);
    std::size_t first = line.find_first_not_of(" \t");
    if (first != std::string_view::npos && line.substr(first, 3) == "```") {
      if (!open) {
        open = std::min(line_end + 1, text.size());
      } else {
        fences.emplace_back(*open, line_begin);
        open.reset();
      }
    }
    if (line_end == text.size()) break;
    line_begin = line_end + 1;
  }
  if (open) fences.emplace_back(*open, text.size());

  std::string_view content = text;
  const bool fenced = !fences.empty();
  if (fenced) content = text.substr(fences.back().first, fences.back().second - fences.back().first);

  std::vector<FoundItem> items = find_asserts(content);
  auto invs = find_loop_invariants(content);
  items.insert(items.end(), invs.begin(), invs.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.position < b.position; });

  if (items.empty()) {
    if (fenced && is_blank(content)) return {};
    if (!fenced) throw ParseError(DiagCode::NoCodeBlock, "no code block with invariants found in reply");
    throw ParseError(DiagCode::Syntax, "code block contains no assert(...) or loop invariant lines");
  }

  InvariantSet out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.items.push_back({"i" + std::to_string(i + 1), parse_formula(items[i].text, &prog.vars)});
  }
  return out;
}

}  // namespace loopinv
