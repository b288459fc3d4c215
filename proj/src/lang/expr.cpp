#include "loopinv/expr.h"

#include <array>
#include <cassert>
#include <stdexcept>

namespace loopinv {

struct Expr::Node {
  Kind kind;
  std::int64_t int_value = 0;
  bool bool_value = false;
  std::string name;
  UnOp unop = UnOp::Neg;
  BinOp binop = BinOp::Add;
  std::array<Expr, 2> kids{};
  bool parens = false;
};

Expr::Expr() : Expr(Expr::bool_lit(true)) {}

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::int_lit(std::int64_t value) {
  auto n = std::shared_ptr<Node>(new Node{Kind::IntLit, value, false, {}, UnOp::Neg, BinOp::Add,
                                          {Expr(nullptr), Expr(nullptr)}, false});
  return Expr(std::move(n));
}

Expr Expr::bool_lit(bool value) {
  // Leaf children are null handles; default-constructed ones would recurse here.
  auto n = std::shared_ptr<Node>(new Node{Kind::BoolLit, 0, value, {}, UnOp::Neg, BinOp::Add,
                                          {Expr(nullptr), Expr(nullptr)}, false});
  return Expr(std::move(n));
}

Expr Expr::var(std::string name) {
  auto n = std::shared_ptr<Node>(new Node{Kind::Var, 0, false, std::move(name), UnOp::Neg,
                                          BinOp::Add, {Expr(nullptr), Expr(nullptr)}, false});
  return Expr(std::move(n));
}

Expr Expr::unary(UnOp op, Expr operand) {
  auto n = std::shared_ptr<Node>(new Node{Kind::Unary, 0, false, {}, op, BinOp::Add,
                                          {std::move(operand), Expr(nullptr)}, false});
  return Expr(std::move(n));
}

Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
  auto n = std::shared_ptr<Node>(new Node{Kind::Binary, 0, false, {}, UnOp::Neg, op,
                                          {std::move(lhs), std::move(rhs)}, false});
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const { return node_->kind; }
std::int64_t Expr::int_value() const { return node_->int_value; }
bool Expr::bool_value() const { return node_->bool_value; }
const std::string& Expr::name() const { return node_->name; }
UnOp Expr::unary_op() const { return node_->unop; }
BinOp Expr::binary_op() const { return node_->binop; }
const Expr& Expr::operand() const { return node_->kids[0]; }
const Expr& Expr::lhs() const { return node_->kids[0]; }
const Expr& Expr::rhs() const { return node_->kids[1]; }
bool Expr::parenthesized() const { return node_->parens; }

Expr Expr::with_parens(bool on) const {
  if (node_->parens == on) return *this;
  auto n = std::make_shared<Node>(*node_);
  n->parens = on;
  return Expr(std::move(n));
}

Type Expr::type() const {
  switch (kind()) {
    case Kind::IntLit:
    case Kind::Var:
      return Type::Int;
    case Kind::BoolLit:
      return Type::Bool;
    case Kind::Unary:
      return unary_op() == UnOp::Neg ? Type::Int : Type::Bool;
    case Kind::Binary:
      return is_arith(binary_op()) ? Type::Int : Type::Bool;
  }
  return Type::Bool;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::IntLit:
      return a.int_value() == b.int_value();
    case Expr::Kind::BoolLit:
      return a.bool_value() == b.bool_value();
    case Expr::Kind::Var:
      return a.name() == b.name();
    case Expr::Kind::Unary:
      return a.unary_op() == b.unary_op() && a.operand() == b.operand();
    case Expr::Kind::Binary:
      return a.binary_op() == b.binary_op() && a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
  return false;
}

bool is_arith(BinOp op) {
  switch (op) {
    case BinOp::Add:
    case BinOp::Sub:
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod:
      return true;
    default:
      return false;
  }
}

bool is_relational(BinOp op) {
  return op == BinOp::Lt || op == BinOp::Le || op == BinOp::Gt || op == BinOp::Ge;
}

bool is_logical(BinOp op) {
  return op == BinOp::And || op == BinOp::Or || op == BinOp::Implies;
}

const char* op_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::And: return "&&";
    case BinOp::Or: return "||";
    case BinOp::Implies: return "==>";
  }
  return "?";
}

Expr mk_and(Expr a, Expr b) { return Expr::binary(BinOp::And, std::move(a), std::move(b)); }
Expr mk_or(Expr a, Expr b) { return Expr::binary(BinOp::Or, std::move(a), std::move(b)); }
Expr mk_not(Expr a) { return Expr::unary(UnOp::Not, std::move(a)); }
Expr mk_implies(Expr a, Expr b) { return Expr::binary(BinOp::Implies, std::move(a), std::move(b)); }
Expr mk_eq(Expr a, Expr b) { return Expr::binary(BinOp::Eq, std::move(a), std::move(b)); }

Expr conjunction(const std::vector<Expr>& parts) {
  if (parts.empty()) return Expr::bool_lit(true);
  Expr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = mk_and(acc, parts[i]);
  return acc;
}

Expr negate(const Expr& e) {
  if (e.kind() == Expr::Kind::BoolLit) return Expr::bool_lit(!e.bool_value());
  if (e.kind() == Expr::Kind::Unary && e.unary_op() == UnOp::Not) return e.operand().with_parens(false);
  if (e.kind() == Expr::Kind::Binary) {
    auto flip = [&](BinOp op) { return Expr::binary(op, e.lhs(), e.rhs()); };
    switch (e.binary_op()) {
      case BinOp::Lt: return flip(BinOp::Ge);
      case BinOp::Le: return flip(BinOp::Gt);
      case BinOp::Gt: return flip(BinOp::Le);
      case BinOp::Ge: return flip(BinOp::Lt);
      case BinOp::Eq: return flip(BinOp::Ne);
      case BinOp::Ne: return flip(BinOp::Eq);
      default: break;
    }
  }
  return mk_not(e);
}

void collect_vars(const Expr& e, std::set<std::string>& out) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      out.insert(e.name());
      break;
    case Expr::Kind::Unary:
      collect_vars(e.operand(), out);
      break;
    case Expr::Kind::Binary:
      collect_vars(e.lhs(), out);
      collect_vars(e.rhs(), out);
      break;
    default:
      break;
  }
}

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& subst) {
  switch (e.kind()) {
    case Expr::Kind::Var: {
      auto it = subst.find(e.name());
      return it == subst.end() ? e : it->second;
    }
    case Expr::Kind::Unary: {
      Expr k = substitute(e.operand(), subst);
      return Expr::unary(e.unary_op(), std::move(k)).with_parens(e.parenthesized());
    }
    case Expr::Kind::Binary: {
      Expr l = substitute(e.lhs(), subst);
      Expr r = substitute(e.rhs(), subst);
      return Expr::binary(e.binary_op(), std::move(l), std::move(r)).with_parens(e.parenthesized());
    }
    default:
      return e;
  }
}

namespace {

bool is_constant(const Expr& e) { return free_vars(e).empty(); }

}  // namespace

bool is_nonlinear(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Unary:
      return is_nonlinear(e.operand());
    case Expr::Kind::Binary: {
      if (is_nonlinear(e.lhs()) || is_nonlinear(e.rhs())) return true;
      switch (e.binary_op()) {
        case BinOp::Mul:
          return !is_constant(e.lhs()) && !is_constant(e.rhs());
        case BinOp::Div:
        case BinOp::Mod:
          return !is_constant(e.rhs());  // a constant divisor is emitted as a numeral
        default:
          return false;
      }
    }
    default:
      return false;
  }
}

std::vector<Expr> split_conjuncts(const Expr& e) {
  std::vector<Expr> out;
  if (e.kind() == Expr::Kind::Binary && e.binary_op() == BinOp::And) {
    for (const Expr* side : {&e.lhs(), &e.rhs()}) {
      auto part = split_conjuncts(*side);
      out.insert(out.end(), part.begin(), part.end());
    }
  } else {
    out.push_back(e);
  }
  return out;
}

}  // namespace loopinv
