#include "loopinv/program.h"

namespace loopinv {

bool operator==(const Assign& a, const Assign& b) { return a.var == b.var && a.value == b.value; }
bool operator==(const Havoc& a, const Havoc& b) { return a.var == b.var; }
bool operator==(const Assume& a, const Assume& b) { return a.cond == b.cond; }
bool operator==(const If& a, const If& b) {
  return a.cond == b.cond && a.then_branch == b.then_branch && a.else_branch == b.else_branch;
}
bool operator==(const Skip&, const Skip&) { return true; }
bool operator==(const Stmt& a, const Stmt& b) { return a.node == b.node; }

std::vector<std::string> Program::state_vars() const {
  std::vector<std::string> out;
  for (const auto& v : vars) {
    if (!nondet_vars.count(v)) out.push_back(v);
  }
  return out;
}

bool operator==(const Program& a, const Program& b) {
  return a.vars == b.vars && a.nondet_vars == b.nondet_vars && a.pre == b.pre &&
         a.cond_havoc == b.cond_havoc && a.loop_cond == b.loop_cond && a.body == b.body &&
         a.assertion == b.assertion;
}

std::vector<Expr> InvariantSet::formulas() const {
  std::vector<Expr> out;
  out.reserve(items.size());
  for (const auto& i : items) out.push_back(i.formula);
  return out;
}

bool operator==(const Invariant& a, const Invariant& b) { return a.id == b.id && a.formula == b.formula; }
bool operator==(const InvariantSet& a, const InvariantSet& b) { return a.items == b.items; }

}  // namespace loopinv
