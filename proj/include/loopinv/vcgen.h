#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopinv/program.h"
#include "loopinv/smt.h"
#include "loopinv/verdict.h"

namespace loopinv {

enum class VcKind { Establishment, Preservation, PostCondition };

const char* kind_name(VcKind k);

struct VerificationCondition {
  VcKind kind = VcKind::PostCondition;
  std::string target;  // invariant id, or "assertion"
  Expr hypothesis;
  Expr goal;
  std::set<std::string> quantified_vars;
};

struct VcResult {
  VerificationCondition vc;
  VcStatus status = VcStatus::Unknown;
  std::optional<Assignment> counterexample;  // only for Invalid
  std::string diagnostic;
};

/// Source of fresh variable names that avoid a reserved set.
class FreshNames {
 public:
  explicit FreshNames(std::set<std::string> reserved) : reserved_(std::move(reserved)) {}
  std::string make(const std::string& base);
  const std::set<std::string>& issued() const { return issued_; }

 private:
  std::set<std::string> reserved_;
  std::set<std::string> issued_;
  std::map<std::string, int> counters_;
};

/// Weakest precondition of a loop-free statement list. Havoc targets are
/// renamed to fresh names drawn from `fresh`; no simplification is applied.
Expr wp(const std::vector<Stmt>& stmts, const Expr& post, FreshNames& fresh);

/// Strongest postcondition of the pre-block as a conjunction of facts, with
/// final values under plain variable names and earlier values under fresh ones.
Expr pre_state(const Program& prog, FreshNames& fresh);

/// 2|inv| + 1 obligations: every Establishment, then every Preservation (both
/// in invariant order), then the PostCondition.
std::vector<VerificationCondition> generate_vcs(const Program& prog, const InvariantSet& inv);

/// Discharges each VC as validity of hypothesis ==> goal. Runs up to the
/// pool's capacity in parallel; the result order matches `vcs`. Solver faults
/// become Unknown with a diagnostic.
std::vector<VcResult> check_vcs(const std::vector<VerificationCondition>& vcs, const SolverBudget& budget,
                                SolverPool& pool);

bool all_valid(const std::vector<VcResult>& results);

}  // namespace loopinv
