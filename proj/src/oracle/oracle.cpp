#include "loopinv/oracle.h"

#include <algorithm>
#include <limits>
#include <set>

#include <omp.h>

namespace loopinv {

std::int64_t c_div(std::int64_t a, std::int64_t b) {
  if (b == 0) throw EvalError("division by zero");
  if (a == std::numeric_limits<std::int64_t>::min() && b == -1) throw EvalError("overflow in division");
  return a / b;  // C++ truncates toward zero
}

std::int64_t c_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) throw EvalError("remainder by zero");
  if (b == -1) return 0;
  return a % b;
}

namespace {

void check_overflow(bool overflow) {
  if (overflow) throw EvalError("integer overflow");
}

std::int64_t apply(BinOp op, std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  switch (op) {
    case BinOp::Add: check_overflow(__builtin_add_overflow(a, b, &r)); return r;
    case BinOp::Sub: check_overflow(__builtin_sub_overflow(a, b, &r)); return r;
    case BinOp::Mul: check_overflow(__builtin_mul_overflow(a, b, &r)); return r;
    case BinOp::Div: return c_div(a, b);
    case BinOp::Mod: return c_mod(a, b);
    case BinOp::Lt: return a < b;
    case BinOp::Le: return a <= b;
    case BinOp::Gt: return a > b;
    case BinOp::Ge: return a >= b;
    case BinOp::Eq: return a == b;
    case BinOp::Ne: return a != b;
    case BinOp::And: return a && b;
    case BinOp::Or: return a || b;
    case BinOp::Implies: return !a || b;
  }
  return 0;
}

}  // namespace

std::int64_t evaluate(const Expr& e, const Assignment& env) {
  switch (e.kind()) {
    case Expr::Kind::IntLit:
      return e.int_value();
    case Expr::Kind::BoolLit:
      return e.bool_value();
    case Expr::Kind::Var: {
      auto it = env.find(e.name());
      if (it == env.end()) throw EvalError("unbound variable '" + e.name() + "'");
      return it->second;
    }
    case Expr::Kind::Unary: {
      std::int64_t v = evaluate(e.operand(), env);
      if (e.unary_op() == UnOp::Not) return !v;
      if (v == std::numeric_limits<std::int64_t>::min()) throw EvalError("integer overflow");
      return -v;
    }
    case Expr::Kind::Binary:
      return apply(e.binary_op(), evaluate(e.lhs(), env), evaluate(e.rhs(), env));
  }
  return 0;
}

bool holds(const Expr& e, const Assignment& env) { return evaluate(e, env) != 0; }

// ---- compiled form ----

CompiledExpr::CompiledExpr(const Expr& e, const std::vector<std::string>& slots) {
  compile(e, slots);
  // Postfix code never needs more stack than its length.
  max_stack_ = code_.size();
}

void CompiledExpr::compile(const Expr& e, const std::vector<std::string>& slots) {
  switch (e.kind()) {
    case Expr::Kind::IntLit:
      code_.push_back({Op::Const, e.int_value()});
      return;
    case Expr::Kind::BoolLit:
      code_.push_back({Op::Const, e.bool_value() ? 1 : 0});
      return;
    case Expr::Kind::Var: {
      auto it = std::find(slots.begin(), slots.end(), e.name());
      if (it == slots.end()) throw EvalError("unbound variable '" + e.name() + "'");
      code_.push_back({Op::Load, it - slots.begin()});
      return;
    }
    case Expr::Kind::Unary:
      compile(e.operand(), slots);
      code_.push_back({e.unary_op() == UnOp::Neg ? Op::Neg : Op::Not, 0});
      return;
    case Expr::Kind::Binary: {
      compile(e.lhs(), slots);
      compile(e.rhs(), slots);
      static constexpr Op kMap[] = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Mod, Op::Lt, Op::Le,
                                    Op::Gt,  Op::Ge,  Op::Eq,  Op::Ne,  Op::And, Op::Or, Op::Implies};
      code_.push_back({kMap[static_cast<int>(e.binary_op())], 0});
      return;
    }
  }
}

bool CompiledExpr::eval(const std::int64_t* env, std::int64_t& out) const {
  std::int64_t small[32];
  std::vector<std::int64_t> big;
  std::int64_t* st = small;
  if (max_stack_ > 32) {
    big.resize(max_stack_);
    st = big.data();
  }
  std::size_t sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: st[sp++] = in.arg; break;
      case Op::Load: st[sp++] = env[in.arg]; break;
      case Op::Neg:
        if (st[sp - 1] == std::numeric_limits<std::int64_t>::min()) return false;
        st[sp - 1] = -st[sp - 1];
        break;
      case Op::Not: st[sp - 1] = !st[sp - 1]; break;
      default: {
        std::int64_t b = st[--sp];
        std::int64_t a = st[sp - 1];
        std::int64_t r = 0;
        switch (in.op) {
          case Op::Add: if (__builtin_add_overflow(a, b, &r)) return false; break;
          case Op::Sub: if (__builtin_sub_overflow(a, b, &r)) return false; break;
          case Op::Mul: if (__builtin_mul_overflow(a, b, &r)) return false; break;
          case Op::Div:
            if (b == 0 || (b == -1 && a == std::numeric_limits<std::int64_t>::min())) return false;
            r = a / b;
            break;
          case Op::Mod:
            if (b == 0) return false;
            r = b == -1 ? 0 : a % b;
            break;
          case Op::Lt: r = a < b; break;
          case Op::Le: r = a <= b; break;
          case Op::Gt: r = a > b; break;
          case Op::Ge: r = a >= b; break;
          case Op::Eq: r = a == b; break;
          case Op::Ne: r = a != b; break;
          case Op::And: r = a && b; break;
          case Op::Or: r = a || b; break;
          case Op::Implies: r = !a || b; break;
          default: break;
        }
        st[sp - 1] = r;
      }
    }
  }
  out = st[0];
  return true;
}

// ---- brute-force validity ----

namespace {

struct PointSpace {
  std::vector<std::string> names;
  std::int64_t bound;
  std::uint64_t radix;
  std::uint64_t size;

  PointSpace(const std::set<std::string>& vars, std::int64_t b)
      : names(vars.begin(), vars.end()), bound(b), radix(static_cast<std::uint64_t>(2 * b + 1)), size(1) {
    if (b < 1) throw std::invalid_argument("bound must be at least 1");
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (size > std::numeric_limits<std::uint64_t>::max() / radix) throw std::invalid_argument("search space too large");
      size *= radix;
    }
  }

  void decode(std::uint64_t idx, std::int64_t* env) const {
    for (std::size_t i = names.size(); i-- > 0;) {
      env[i] = static_cast<std::int64_t>(idx % radix) - bound;
      idx /= radix;
    }
  }

  Assignment to_assignment(std::uint64_t idx) const {
    std::vector<std::int64_t> env(names.size());
    decode(idx, env.data());
    Assignment a;
    for (std::size_t i = 0; i < names.size(); ++i) a[names[i]] = env[i];
    return a;
  }
};

/// 1 = counterexample, 0 = fine, -1 = faulted.
int probe(const CompiledExpr& hyp, const CompiledExpr& goal, const std::int64_t* env) {
  std::int64_t h = 0;
  std::int64_t g = 0;
  const bool ok_h = hyp.eval(env, h);
  const bool ok_g = goal.eval(env, g);
  if (!ok_h || !ok_g) return -1;
  return h && !g ? 1 : 0;
}

std::set<std::string> all_vars(const Expr& a, const Expr& b, const std::set<std::string>& vars) {
  std::set<std::string> out = vars;
  collect_vars(a, out);
  collect_vars(b, out);
  return out;
}

}  // namespace

OracleResult brute_force_validity_serial(const Expr& hypothesis, const Expr& goal,
                                         const std::set<std::string>& vars, std::int64_t bound) {
  PointSpace space(all_vars(hypothesis, goal, vars), bound);
  CompiledExpr hyp(hypothesis, space.names);
  CompiledExpr g(goal, space.names);
  OracleResult res;
  res.points = space.size;
  std::vector<std::int64_t> env(space.names.size() + 1);
  for (std::uint64_t idx = 0; idx < space.size; ++idx) {
    space.decode(idx, env.data());
    int r = probe(hyp, g, env.data());
    if (r < 0) {
      ++res.skipped;
    } else if (r == 1 && res.valid) {
      res.valid = false;
      res.witness = space.to_assignment(idx);
    }
  }
  return res;
}

OracleResult brute_force_validity(const Expr& hypothesis, const Expr& goal, const std::set<std::string>& vars,
                                  std::int64_t bound) {
  PointSpace space(all_vars(hypothesis, goal, vars), bound);
  CompiledExpr hyp(hypothesis, space.names);
  CompiledExpr g(goal, space.names);
  const std::uint64_t none = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t first = none;
  std::uint64_t skipped = 0;
  const std::int64_t n = static_cast<std::int64_t>(space.size);
  const std::size_t width = space.names.size() + 1;

#pragma omp parallel reduction(min : first) reduction(+ : skipped)
  {
    std::vector<std::int64_t> env(width);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      space.decode(idx, env.data());
      int r = probe(hyp, g, env.data());
      if (r < 0) {
        ++skipped;
      } else if (r == 1 && idx < first) {
        first = idx;
      }
    }
  }

  OracleResult res;
  res.points = space.size;
  res.skipped = skipped;
  if (first != none) {
    res.valid = false;
    res.witness = space.to_assignment(first);
  }
  return res;
}

// ---- bounded interpreter ----

namespace {

using State = std::vector<std::int64_t>;

struct CStmt {
  enum class Kind { Assign, Havoc, Assume, If, Skip } kind = Kind::Skip;
  std::size_t slot = 0;
  CompiledExpr expr;
  std::vector<CStmt> then_branch;
  std::vector<CStmt> else_branch;
};

std::size_t slot_of(const std::vector<std::string>& slots, const std::string& v) {
  auto it = std::find(slots.begin(), slots.end(), v);
  if (it == slots.end()) throw EvalError("unbound variable '" + v + "'");
  return static_cast<std::size_t>(it - slots.begin());
}

std::vector<CStmt> compile_block(const std::vector<Stmt>& stmts, const std::vector<std::string>& slots) {
  std::vector<CStmt> out;
  for (const auto& s : stmts) {
    CStmt c;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Assign>) {
            c.kind = CStmt::Kind::Assign;
            c.slot = slot_of(slots, node.var);
            c.expr = CompiledExpr(node.value, slots);
          } else if constexpr (std::is_same_v<T, Havoc>) {
            c.kind = CStmt::Kind::Havoc;
            c.slot = slot_of(slots, node.var);
          } else if constexpr (std::is_same_v<T, Assume>) {
            c.kind = CStmt::Kind::Assume;
            c.expr = CompiledExpr(node.cond, slots);
          } else if constexpr (std::is_same_v<T, If>) {
            c.kind = CStmt::Kind::If;
            c.expr = CompiledExpr(node.cond, slots);
            c.then_branch = compile_block(node.then_branch, slots);
            c.else_branch = compile_block(node.else_branch, slots);
          }
        },
        s.node);
    out.push_back(std::move(c));
  }
  return out;
}

struct Machine {
  std::vector<std::string> slots;
  std::vector<std::size_t> state_slots;
  std::vector<CStmt> pre;
  std::vector<CStmt> body;
  std::vector<std::size_t> cond_havoc;
  CompiledExpr cond;
  CompiledExpr assertion;
  InterpConfig cfg;

  Machine(const Program& prog, const InterpConfig& c) : slots(prog.vars.begin(), prog.vars.end()), cfg(c) {
    for (const auto& v : prog.state_vars()) state_slots.push_back(slot_of(slots, v));
    pre = compile_block(prog.pre, slots);
    body = compile_block(prog.body, slots);
    for (const auto& v : prog.cond_havoc) cond_havoc.push_back(slot_of(slots, v));
    cond = CompiledExpr(prog.loop_cond, slots);
    assertion = CompiledExpr(prog.assertion, slots);
  }

  std::vector<State> exec(const std::vector<CStmt>& block, std::vector<State> states, std::uint64_t& pruned) const {
    for (const auto& s : block) {
      std::vector<State> next;
      switch (s.kind) {
        case CStmt::Kind::Assign:
          for (auto& st : states) {
            std::int64_t v = 0;
            if (!s.expr.eval(st.data(), v)) {
              ++pruned;
              continue;
            }
            st[s.slot] = v;
            next.push_back(std::move(st));
          }
          break;
        case CStmt::Kind::Havoc:
          for (const auto& st : states) {
            for (std::int64_t v = -cfg.bound; v <= cfg.bound; ++v) {
              next.push_back(st);
              next.back()[s.slot] = v;
            }
          }
          break;
        case CStmt::Kind::Assume:
          for (auto& st : states) {
            std::int64_t v = 0;
            if (!s.expr.eval(st.data(), v)) {
              ++pruned;
            } else if (v) {
              next.push_back(std::move(st));
            }
          }
          break;
        case CStmt::Kind::If: {
          std::vector<State> t;
          std::vector<State> e;
          for (auto& st : states) {
            std::int64_t v = 0;
            if (!s.expr.eval(st.data(), v)) {
              ++pruned;
            } else {
              (v ? t : e).push_back(std::move(st));
            }
          }
          next = exec(s.then_branch, std::move(t), pruned);
          auto other = exec(s.else_branch, std::move(e), pruned);
          next.insert(next.end(), std::make_move_iterator(other.begin()), std::make_move_iterator(other.end()));
          break;
        }
        case CStmt::Kind::Skip:
          next = std::move(states);
          break;
      }
      states = std::move(next);
    }
    return states;
  }

  static std::vector<State> dedupe(std::vector<State> v) {
    std::set<State> s(std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
    return {s.begin(), s.end()};
  }

  /// Explores every execution from one initial state; true on a violation.
  bool run(State init, std::uint64_t& exits, std::uint64_t& pruned) const {
    std::vector<State> frontier = dedupe(exec(pre, {std::move(init)}, pruned));
    for (int iter = 0; iter <= cfg.max_iterations && !frontier.empty(); ++iter) {
      for (std::size_t slot : cond_havoc) {
        std::vector<State> expanded;
        for (const auto& st : frontier) {
          for (std::int64_t v = -cfg.bound; v <= cfg.bound; ++v) {
            expanded.push_back(st);
            expanded.back()[slot] = v;
          }
        }
        frontier = dedupe(std::move(expanded));
      }
      std::vector<State> looping;
      for (auto& st : frontier) {
        std::int64_t c = 0;
        if (!cond.eval(st.data(), c)) {
          ++pruned;
          continue;
        }
        if (c) {
          looping.push_back(std::move(st));
          continue;
        }
        std::int64_t ok = 0;
        if (!assertion.eval(st.data(), ok)) {
          ++pruned;
          continue;
        }
        ++exits;
        if (!ok) return true;
      }
      if (iter == cfg.max_iterations) break;
      frontier = dedupe(exec(body, std::move(looping), pruned));
    }
    return false;
  }

  std::uint64_t initial_count() const {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < state_slots.size(); ++i) n *= static_cast<std::uint64_t>(2 * cfg.bound + 1);
    return n;
  }

  State initial(std::uint64_t idx) const {
    State st(slots.size(), 0);
    const auto radix = static_cast<std::uint64_t>(2 * cfg.bound + 1);
    for (std::size_t i = state_slots.size(); i-- > 0;) {
      st[state_slots[i]] = static_cast<std::int64_t>(idx % radix) - cfg.bound;
      idx /= radix;
    }
    return st;
  }

  Assignment describe(const State& st) const {
    Assignment a;
    for (std::size_t s : state_slots) a[slots[s]] = st[s];
    return a;
  }
};

}  // namespace

InterpResult find_violation_serial(const Program& prog, const InterpConfig& cfg) {
  Machine m(prog, cfg);
  InterpResult res;
  res.initial_states = m.initial_count();
  for (std::uint64_t i = 0; i < res.initial_states; ++i) {
    if (m.run(m.initial(i), res.exits, res.pruned) && !res.violated) {
      res.violated = true;
      res.initial_state = m.describe(m.initial(i));
    }
  }
  return res;
}

InterpResult find_violation(const Program& prog, const InterpConfig& cfg) {
  Machine m(prog, cfg);
  InterpResult res;
  res.initial_states = m.initial_count();
  const std::uint64_t none = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t first = none;
  std::uint64_t exits = 0;
  std::uint64_t pruned = 0;
  const auto n = static_cast<std::int64_t>(res.initial_states);

#pragma omp parallel for schedule(dynamic) reduction(min : first) reduction(+ : exits, pruned)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    if (m.run(m.initial(idx), exits, pruned) && idx < first) first = idx;
  }

  res.exits = exits;
  res.pruned = pruned;
  if (first != none) {
    res.violated = true;
    res.initial_state = m.describe(m.initial(first));
  }
  return res;
}

}  // namespace loopinv
