#include "loopinv/printer.h"

#include <algorithm>
#include <sstream>

namespace loopinv {

namespace {

constexpr int kAtomPrec = 9;
constexpr int kUnaryPrec = 8;

int precedence(BinOp op) {
  switch (op) {
    case BinOp::Implies: return 1;
    case BinOp::Or: return 2;
    case BinOp::And: return 3;
    case BinOp::Eq:
    case BinOp::Ne: return 4;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge: return 5;
    case BinOp::Add:
    case BinOp::Sub: return 6;
    case BinOp::Mul:
    case BinOp::Div:
    case BinOp::Mod: return 7;
  }
  return 0;
}

int precedence(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::IntLit:
      return e.int_value() < 0 ? kUnaryPrec : kAtomPrec;
    case Expr::Kind::BoolLit:
    case Expr::Kind::Var:
      return kAtomPrec;
    case Expr::Kind::Unary:
      return kUnaryPrec;
    case Expr::Kind::Binary:
      return precedence(e.binary_op());
  }
  return kAtomPrec;
}

class ExprPrinter {
 public:
  explicit ExprPrinter(bool keep_parens) : keep_parens_(keep_parens) {}

  void print(const Expr& e, int required, std::string& out) const {
    const bool wrap = (keep_parens_ && e.parenthesized()) || precedence(e) < required;
    if (wrap) out += '(';
    print_bare(e, out);
    if (wrap) out += ')';
  }

 private:
  void print_bare(const Expr& e, std::string& out) const {
    switch (e.kind()) {
      case Expr::Kind::IntLit:
        out += std::to_string(e.int_value());
        return;
      case Expr::Kind::BoolLit:
        out += e.bool_value() ? "true" : "false";
        return;
      case Expr::Kind::Var:
        out += e.name();
        return;
      case Expr::Kind::Unary: {
        out += e.unary_op() == UnOp::Neg ? "-" : "!";
        const Expr& k = e.operand();
        // `-(-x)`, `-(5)`: keep the parser from folding or lexing `--`.
        const bool force = e.unary_op() == UnOp::Neg &&
                           ((k.kind() == Expr::Kind::Unary && k.unary_op() == UnOp::Neg) ||
                            k.kind() == Expr::Kind::IntLit);
        print(k, force ? kAtomPrec + 1 : kUnaryPrec, out);
        return;
      }
      case Expr::Kind::Binary: {
        const int p = precedence(e.binary_op());
        const bool right_assoc = e.binary_op() == BinOp::Implies;
        print(e.lhs(), right_assoc ? p + 1 : p, out);
        out += ' ';
        out += op_symbol(e.binary_op());
        out += ' ';
        print(e.rhs(), right_assoc ? p : p + 1, out);
        return;
      }
    }
  }

  bool keep_parens_;
};

std::string render(const Expr& e, bool keep_parens) {
  std::string out;
  ExprPrinter(keep_parens).print(e, 0, out);
  return out;
}

void indent(std::ostringstream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "    ";
}

void print_block(const std::vector<Stmt>& stmts, int depth, std::ostringstream& os);

void print_stmt(const Stmt& s, int depth, std::ostringstream& os) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        indent(os, depth);
        if constexpr (std::is_same_v<T, Assign>) {
          os << node.var << " = " << to_string(node.value) << ";\n";
        } else if constexpr (std::is_same_v<T, Havoc>) {
          os << node.var << " = unknown();\n";
        } else if constexpr (std::is_same_v<T, Assume>) {
          os << "assume(" << to_string(node.cond) << ");\n";
        } else if constexpr (std::is_same_v<T, If>) {
          os << "if (" << to_string(node.cond) << ") {\n";
          print_block(node.then_branch, depth + 1, os);
          indent(os, depth);
          if (node.else_branch.empty()) {
            os << "}\n";
          } else {
            os << "} else {\n";
            print_block(node.else_branch, depth + 1, os);
            indent(os, depth);
            os << "}\n";
          }
        } else {
          os << ";\n";
        }
      },
      s.node);
}

void print_block(const std::vector<Stmt>& stmts, int depth, std::ostringstream& os) {
  for (const auto& s : stmts) print_stmt(s, depth, os);
}

/// Canonical form used by normalize_clause. Source parentheses are dropped.
Expr canonical(const Expr& e);

void flatten(const Expr& e, BinOp op, std::vector<Expr>& out) {
  if (e.kind() == Expr::Kind::Binary && e.binary_op() == op) {
    flatten(e.lhs(), op, out);
    flatten(e.rhs(), op, out);
  } else {
    out.push_back(e);
  }
}

Expr canonical(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Unary: {
      if (e.unary_op() == UnOp::Not && e.operand().kind() == Expr::Kind::Unary &&
          e.operand().unary_op() == UnOp::Not) {
        return canonical(e.operand().operand());
      }
      return Expr::unary(e.unary_op(), canonical(e.operand()));
    }
    case Expr::Kind::Binary: {
      const BinOp op = e.binary_op();
      if (op == BinOp::Gt) return canonical(Expr::binary(BinOp::Lt, e.rhs(), e.lhs()));
      if (op == BinOp::Ge) return canonical(Expr::binary(BinOp::Le, e.rhs(), e.lhs()));
      if (op == BinOp::And || op == BinOp::Or) {
        std::vector<Expr> parts;
        flatten(e, op, parts);
        std::vector<std::pair<std::string, Expr>> keyed;
        for (const auto& p : parts) {
          Expr c = canonical(p);
          // canonical() may itself produce a chain of the same operator
          std::vector<Expr> sub;
          flatten(c, op, sub);
          for (auto& s : sub) keyed.emplace_back(render(s, false), s);
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Expr acc = keyed.front().second;
        for (std::size_t i = 1; i < keyed.size(); ++i) acc = Expr::binary(op, acc, keyed[i].second);
        return acc;
      }
      Expr l = canonical(e.lhs());
      Expr r = canonical(e.rhs());
      if ((op == BinOp::Eq || op == BinOp::Ne) && render(r, false) < render(l, false)) std::swap(l, r);
      return Expr::binary(op, l, r);
    }
    default:
      return e.with_parens(false);
  }
}

}  // namespace

std::string to_string(const Expr& e) { return render(e, true); }

std::string to_string_parenthesized(const Expr& e) {
  std::string inner;
  ExprPrinter(true).print(e.with_parens(false), 0, inner);
  return "(" + inner + ")";
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  os << "extern int unknown();\n\nint main() {\n";
  std::vector<std::string> decls;
  for (const auto& v : p.vars) {
    if (std::find(p.cond_havoc.begin(), p.cond_havoc.end(), v) == p.cond_havoc.end()) decls.push_back(v);
  }
  if (!decls.empty()) {
    os << "    int ";
    for (std::size_t i = 0; i < decls.size(); ++i) os << (i ? ", " : "") << decls[i];
    os << ";\n";
  }
  print_block(p.pre, 1, os);
  std::map<std::string, Expr> cond_subst;
  for (const auto& v : p.cond_havoc) cond_subst.emplace(v, Expr::var("unknown()"));
  os << "    while (" << to_string(substitute(p.loop_cond, cond_subst)) << ") {\n";
  print_block(p.body, 2, os);
  os << "    }\n";
  os << "    assert(" << to_string(p.assertion) << ");\n";
  os << "    return 0;\n}\n";
  return os.str();
}

std::string to_string(const InvariantSet& inv) {
  std::ostringstream os;
  os << "/*@\n";
  for (const auto& item : inv.items) {
    os << "    loop invariant " << item.id << ": " << to_string(item.formula) << ";\n";
  }
  os << "*/\n";
  return os.str();
}

std::string to_assert_block(const InvariantSet& inv) {
  std::ostringstream os;
  os << "```c\n";
  for (const auto& item : inv.items) os << "assert(" << to_string(item.formula) << ");\n";
  os << "```\n";
  return os.str();
}

std::string normalize_clause(const Expr& e) { return render(canonical(e), false); }

}  // namespace loopinv
