#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "loopinv/checker.h"
#include "loopinv/gateway.h"
#include "loopinv/prompt.h"
#include "loopinv/vcgen.h"

namespace loopinv {

struct RunConfig {
  double wall_clock_budget = 600.0;  // seconds
  std::int64_t token_budget = 150000;
  SolverBudget solver;
  std::uint64_t rng_seed = 0;
  std::optional<int> max_feedback_rounds;
};

enum class Outcome { Solved, BudgetExhausted, Error };
enum class Classification { DirectSuccess, FeedbackDrivenSuccess, Failure };

const char* outcome_name(Outcome o);
const char* classification_name(Classification c);

/// One pass of the refinement loop. `events` lists the steps that ran, in order.
struct RoundRecord {
  int index = 0;
  InvariantSet invariants;
  std::vector<VcResult> vc_results;
  std::optional<VerificationCondition> selected;
  std::string proof_text;
  std::string formalized_text;
  std::optional<CheckReport> check_report;
  bool used_fallback = false;
  std::string feedback_text;
  std::optional<InvariantSet> refined;
  bool failed = false;  // a reply stayed unparseable after the re-ask
  std::string failure;
  std::vector<std::string> events;
  TokenCount tokens;  // used during this round; round 0 includes the initial proposal
  double elapsed = 0;  // seconds since run start, at round end
};

struct RunReport {
  static constexpr int kVersion = 1;
  std::string program;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::Error;
  Classification classification = Classification::Failure;
  std::vector<RoundRecord> rounds;
  std::optional<InvariantSet> initial_invariants;
  std::optional<InvariantSet> final_invariants;
  TokenCount tokens;
  double elapsed = 0;
  std::string diagnostic;

  /// Rounds that went on to request a proof.
  int feedback_rounds() const;
};

nlohmann::ordered_json to_json(const RunReport& r);
std::string to_json_text(const RunReport& r);

/// Among non-Valid results, the first kind in the order Establishment,
/// Preservation, PostCondition; within that kind a uniform pick via
/// rng() % count. Throws std::invalid_argument when everything is Valid.
const VcResult& select_failed_vc(const std::vector<VcResult>& results, std::mt19937_64& rng);

/// Feedback used when the proof check found nothing to report.
PromptBundle fallback_feedback(const PromptKit& kit, const VcResult& failed, const InvariantSet& inv);

struct RunContext {
  SolverPool& pool;
  Gateway& gateway;
  const PromptKit& prompts;
};

/// `source` is the program text as given to the model.
RunReport run_synthesis(const Program& prog, const std::string& source, const RunConfig& cfg, RunContext ctx);

int exit_code(Outcome o);

}  // namespace loopinv
