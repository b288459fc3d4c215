#pragma once

#include <string>
#include <vector>

#include "loopinv/proof.h"
#include "loopinv/smt.h"
#include "loopinv/vcgen.h"

namespace loopinv {

enum class ErrorKind { UnsupportedPremise, InvalidImplication, BadInitialCondition };

const char* error_kind_name(ErrorKind k);

struct ReasoningError {
  std::string step_label;
  ErrorKind kind = ErrorKind::InvalidImplication;
  /// The premise, the implication p ==> q, or the initial condition.
  Expr formula;
  std::string comment;
  VcStatus solver_status = VcStatus::Invalid;

  /// The solver did not refute the claim, it only failed to confirm it.
  bool soft() const { return solver_status != VcStatus::Invalid; }
};

struct CheckReport {
  VerificationCondition vc;
  std::vector<ReasoningError> errors;
  std::size_t checked_implications = 0;
  /// Final known-fact set of each step, in step order.
  std::vector<std::vector<Expr>> conds_trace;
};

struct StepCheck {
  std::vector<ReasoningError> errors;
  std::vector<Expr> conds_out;
};

/// Checks each initial-tagged condition of `step` against the program state at
/// loop entry. Derived and declaration lines are not checked.
std::vector<ReasoningError> check_initial_conditions(const FormalizedStep& step, const Program& prog,
                                                     const VerificationCondition& vc, SolverPool& pool,
                                                     const SolverBudget& budget);

/// The implication scan: a premise not entailed by the known facts is an
/// UnsupportedPremise, an implication not valid on its own is an
/// InvalidImplication, and every conclusion joins the known facts regardless.
StepCheck check_step(const FormalizedStep& step, const std::vector<Expr>& pre, SolverPool& pool,
                     const SolverBudget& budget);

/// Runs the initial-condition check (Establishment VCs only) and the
/// implication scan on every step, seeding each step from its own [Initial]
/// list. Errors come out in document order.
CheckReport check_proof(const FormalizedProof& fp, const Program& prog, const VerificationCondition& vc,
                        SolverPool& pool, const SolverBudget& budget);

}  // namespace loopinv
