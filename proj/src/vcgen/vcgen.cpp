#include "loopinv/vcgen.h"

#include <atomic>
#include <exception>
#include <thread>

namespace loopinv {

const char* kind_name(VcKind k) {
  switch (k) {
    case VcKind::Establishment: return "Establishment";
    case VcKind::Preservation: return "Preservation";
    case VcKind::PostCondition: return "PostCondition";
  }
  return "?";
}

std::string FreshNames::make(const std::string& base) {
  int& k = counters_[base];
  for (;;) {
    std::string name = base + "__" + std::to_string(++k);
    if (!reserved_.count(name) && !issued_.count(name)) {
      issued_.insert(name);
      return name;
    }
  }
}

namespace {

Expr wp_stmt(const Stmt& s, const Expr& post, FreshNames& fresh) {
  return std::visit(
      [&](const auto& node) -> Expr {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Assign>) {
          return substitute(post, {{node.var, node.value}});
        } else if constexpr (std::is_same_v<T, Havoc>) {
          return substitute(post, {{node.var, Expr::var(fresh.make(node.var))}});
        } else if constexpr (std::is_same_v<T, Assume>) {
          return mk_implies(node.cond, post);
        } else if constexpr (std::is_same_v<T, If>) {
          Expr t = wp(node.then_branch, post, fresh);
          Expr e = wp(node.else_branch, post, fresh);
          return mk_and(mk_implies(node.cond, t), mk_implies(mk_not(node.cond), e));
        } else {
          return post;
        }
      },
      s.node);
}

/// Symbolic state for the pre-block: current SSA name per variable plus facts.
struct SymState {
  std::map<std::string, std::string> cur;
  std::vector<Expr> facts;

  std::map<std::string, Expr> subst() const {
    std::map<std::string, Expr> m;
    for (const auto& [v, n] : cur) m.emplace(v, Expr::var(n));
    return m;
  }
};

void sym_exec(const std::vector<Stmt>& stmts, SymState& st, FreshNames& fresh) {
  for (const auto& s : stmts) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Assign>) {
            Expr rhs = substitute(node.value, st.subst());
            std::string name = fresh.make(node.var);
            st.facts.push_back(mk_eq(Expr::var(name), rhs));
            st.cur[node.var] = name;
          } else if constexpr (std::is_same_v<T, Havoc>) {
            st.cur[node.var] = fresh.make(node.var);
          } else if constexpr (std::is_same_v<T, Assume>) {
            st.facts.push_back(substitute(node.cond, st.subst()));
          } else if constexpr (std::is_same_v<T, If>) {
            Expr c = substitute(node.cond, st.subst());
            SymState t{st.cur, {}};
            SymState e{st.cur, {}};
            sym_exec(node.then_branch, t, fresh);
            sym_exec(node.else_branch, e, fresh);
            for (auto& [v, name] : st.cur) {
              const std::string& tn = t.cur.at(v);
              const std::string& en = e.cur.at(v);
              if (tn == en) {
                name = tn;
                continue;
              }
              std::string merged = fresh.make(v);
              t.facts.push_back(mk_eq(Expr::var(merged), Expr::var(tn)));
              e.facts.push_back(mk_eq(Expr::var(merged), Expr::var(en)));
              name = merged;
            }
            if (!t.facts.empty() || !e.facts.empty()) {
              st.facts.push_back(mk_and(mk_implies(c, conjunction(t.facts).with_parens(true)),
                                        mk_implies(mk_not(c), conjunction(e.facts).with_parens(true))));
            }
          }
        },
        s.node);
  }
}

std::set<std::string> reserved_names(const Program& prog, const InvariantSet* inv) {
  std::set<std::string> r = prog.vars;
  if (inv) {
    for (const auto& i : inv->items) collect_vars(i.formula, r);
  }
  return r;
}

std::set<std::string> closure(const Expr& a, const Expr& b) {
  std::set<std::string> out;
  collect_vars(a, out);
  collect_vars(b, out);
  return out;
}

}  // namespace

Expr wp(const std::vector<Stmt>& stmts, const Expr& post, FreshNames& fresh) {
  Expr q = post;
  for (auto it = stmts.rbegin(); it != stmts.rend(); ++it) q = wp_stmt(*it, q, fresh);
  return q;
}

Expr pre_state(const Program& prog, FreshNames& fresh) {
  SymState st;
  for (const auto& v : prog.vars) st.cur[v] = fresh.make(v);
  sym_exec(prog.pre, st, fresh);
  std::map<std::string, Expr> finals;
  for (const auto& [v, name] : st.cur) finals.emplace(name, Expr::var(v));
  return substitute(conjunction(st.facts), finals);
}

std::vector<VerificationCondition> generate_vcs(const Program& prog, const InvariantSet& inv) {
  std::vector<VerificationCondition> out;
  const std::set<std::string> reserved = reserved_names(prog, &inv);

  FreshNames pre_names(reserved);
  const Expr pre = pre_state(prog, pre_names);
  for (const auto& item : inv.items) {
    VerificationCondition vc{VcKind::Establishment, item.id, pre, item.formula, {}};
    vc.quantified_vars = closure(vc.hypothesis, vc.goal);
    out.push_back(std::move(vc));
  }

  std::vector<Expr> hyp_parts = inv.formulas();
  hyp_parts.push_back(prog.loop_cond);
  const Expr preservation_hyp = conjunction(hyp_parts);
  for (const auto& item : inv.items) {
    FreshNames names(reserved);
    VerificationCondition vc{VcKind::Preservation, item.id, preservation_hyp, wp(prog.body, item.formula, names), {}};
    vc.quantified_vars = closure(vc.hypothesis, vc.goal);
    out.push_back(std::move(vc));
  }

  hyp_parts.back() = mk_not(prog.loop_cond.with_parens(true));
  VerificationCondition post{VcKind::PostCondition, "assertion", conjunction(hyp_parts), prog.assertion, {}};
  post.quantified_vars = closure(post.hypothesis, post.goal);
  out.push_back(std::move(post));
  return out;
}

std::vector<VcResult> check_vcs(const std::vector<VerificationCondition>& vcs, const SolverBudget& budget,
                                SolverPool& pool) {
  std::vector<VcResult> results(vcs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr unavailable;
  std::mutex mu;

  auto worker = [&] {
    for (std::size_t i = next++; i < vcs.size(); i = next++) {
      VcResult& r = results[i];
      r.vc = vcs[i];
      try {
        QueryVerdict v = check_validity(pool, vcs[i].hypothesis, vcs[i].goal, vcs[i].quantified_vars, budget);
        r.status = v.status;
        r.counterexample = v.model;
        r.diagnostic = v.diagnostic;
      } catch (const SolverUnavailable&) {
        std::lock_guard lock(mu);
        if (!unavailable) unavailable = std::current_exception();
        r.status = VcStatus::Unknown;
      } catch (const std::exception& e) {
        r.status = VcStatus::Unknown;
        r.diagnostic = e.what();
      }
    }
  };

  const std::size_t n_threads = std::min(pool.capacity(), vcs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (unavailable) std::rethrow_exception(unavailable);
  return results;
}

bool all_valid(const std::vector<VcResult>& results) {
  for (const auto& r : results) {
    if (r.status != VcStatus::Valid) return false;
  }
  return true;
}

}  // namespace loopinv
