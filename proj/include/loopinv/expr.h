#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace loopinv {

enum class UnOp { Neg, Not };

enum class BinOp {
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne,
  And, Or, Implies,
};

enum class Type { Int, Bool };

/// Immutable expression tree over mathematical integers and booleans.
///
/// Nodes are shared, so copies are cheap and substitution only rebuilds the
/// spine it touches. The `parenthesized` flag remembers source parentheses
/// for printing; it does not take part in equality.
class Expr {
 public:
  enum class Kind { IntLit, BoolLit, Var, Unary, Binary };

  /// The boolean literal `true`.
  Expr();

  static Expr int_lit(std::int64_t value);
  static Expr bool_lit(bool value);
  static Expr var(std::string name);
  static Expr unary(UnOp op, Expr operand);
  static Expr binary(BinOp op, Expr lhs, Expr rhs);

  Kind kind() const;
  std::int64_t int_value() const;
  bool bool_value() const;
  const std::string& name() const;
  UnOp unary_op() const;
  BinOp binary_op() const;
  const Expr& operand() const;
  const Expr& lhs() const;
  const Expr& rhs() const;

  bool parenthesized() const;
  Expr with_parens(bool on) const;

  /// Static type; well-formed trees are produced by the parser's elaboration.
  Type type() const;

  bool is_true() const { return kind() == Kind::BoolLit && bool_value(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

bool is_arith(BinOp op);
bool is_relational(BinOp op);  // < <= > >=
bool is_logical(BinOp op);     // && || ==>
const char* op_symbol(BinOp op);

Expr mk_and(Expr a, Expr b);
Expr mk_or(Expr a, Expr b);
Expr mk_not(Expr a);
Expr mk_implies(Expr a, Expr b);
Expr mk_eq(Expr a, Expr b);

/// Left-nested conjunction; `true` for an empty list.
Expr conjunction(const std::vector<Expr>& parts);

/// Logical negation that flips a comparison operator instead of wrapping it
/// (`!(m <= 0)` becomes `m > 0`) and strips an existing `!`.
Expr negate(const Expr& e);

std::set<std::string> free_vars(const Expr& e);
void collect_vars(const Expr& e, std::set<std::string>& out);

/// Simultaneous substitution of variables.
Expr substitute(const Expr& e, const std::map<std::string, Expr>& subst);

/// True when the expression multiplies two non-constant terms or divides by
/// a non-constant term.
bool is_nonlinear(const Expr& e);

/// Splits at top-level `&&` (ignoring parentheses).
std::vector<Expr> split_conjuncts(const Expr& e);

}  // namespace loopinv
