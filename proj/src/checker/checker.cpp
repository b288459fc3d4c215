#include "loopinv/checker.h"

namespace loopinv {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::UnsupportedPremise: return "UnsupportedPremise";
    case ErrorKind::InvalidImplication: return "InvalidImplication";
    case ErrorKind::BadInitialCondition: return "BadInitialCondition";
  }
  return "?";
}

std::vector<ReasoningError> check_initial_conditions(const FormalizedStep& step, const Program& prog,
                                                     const VerificationCondition& vc, SolverPool& pool,
                                                     const SolverBudget& budget) {
  std::vector<ReasoningError> out;
  if (vc.kind != VcKind::Establishment) return out;

  std::set<std::string> reserved = prog.vars;
  reserved.insert(step.declared.begin(), step.declared.end());
  std::vector<Expr> declarations;
  for (const auto& c : step.initial) {
    collect_vars(c.formula, reserved);
    if (c.tag == ConditionTag::Declaration) declarations.push_back(c.formula);
  }
  FreshNames fresh(reserved);
  std::vector<Expr> hyp_parts{pre_state(prog, fresh)};
  hyp_parts.insert(hyp_parts.end(), declarations.begin(), declarations.end());
  const Expr hypothesis = conjunction(hyp_parts);

  for (const auto& c : step.initial) {
    if (c.tag != ConditionTag::Initial) continue;
    QueryVerdict v = check_validity(pool, hypothesis, c.formula, {}, budget);
    if (v.status != VcStatus::Valid) {
      out.push_back({step.label, ErrorKind::BadInitialCondition, c.formula, c.comment, v.status});
    }
  }
  return out;
}

StepCheck check_step(const FormalizedStep& step, const std::vector<Expr>& pre, SolverPool& pool,
                     const SolverBudget& budget) {
  StepCheck out;
  out.conds_out = pre;
  for (const auto& imp : step.implications) {
    QueryVerdict premise = check_entailment(pool, out.conds_out, imp.premise, {}, budget);
    if (premise.status != VcStatus::Valid) {
      out.errors.push_back({step.label, ErrorKind::UnsupportedPremise, imp.premise, imp.comment, premise.status});
    }
    QueryVerdict implication = check_validity(pool, imp.premise, imp.conclusion, {}, budget);
    if (implication.status != VcStatus::Valid) {
      out.errors.push_back(
          {step.label, ErrorKind::InvalidImplication, imp.as_formula(), imp.comment, implication.status});
    }
    out.conds_out.push_back(imp.conclusion);
  }
  return out;
}

CheckReport check_proof(const FormalizedProof& fp, const Program& prog, const VerificationCondition& vc,
                        SolverPool& pool, const SolverBudget& budget) {
  CheckReport report;
  report.vc = vc;
  for (const auto& step : fp.steps) {
    auto initial = check_initial_conditions(step, prog, vc, pool, budget);
    report.errors.insert(report.errors.end(), initial.begin(), initial.end());
    StepCheck sc = check_step(step, step.premises(), pool, budget);
    report.errors.insert(report.errors.end(), sc.errors.begin(), sc.errors.end());
    report.checked_implications += step.implications.size();
    report.conds_trace.push_back(std::move(sc.conds_out));
  }
  return report;
}

}  // namespace loopinv
