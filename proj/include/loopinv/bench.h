#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "json.hpp"
#include "loopinv/engine.h"

namespace loopinv {

using Ratio = boost::rational<std::int64_t>;

/// Normalized clauses of an invariant set: each invariant split at top-level
/// `&&`, each piece passed through normalize_clause.
std::set<std::string> clause_set(const InvariantSet& inv);

/// |A ∩ B| / |A ∪ B| over clause sets; two empty sets score 1.
Ratio jaccard(const InvariantSet& a, const InvariantSet& b);
Ratio jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct RefinementScore {
  std::int64_t successes = 0;
  std::int64_t iterations = 0;
  std::vector<std::string> excluded;  // programs with feedback rounds but no gold set

  /// successes / iterations; 0 when there were no iterations.
  Ratio rate() const;
};

/// Over every refinement (a round that produced new invariants), counts those
/// where the new set is strictly closer to the program's gold set.
RefinementScore refinement_success_rate(const std::vector<RunReport>& reports,
                                        const std::map<std::string, InvariantSet>& gold);

struct ProgramRuns {
  std::string name;
  std::vector<RunReport> runs;  // ordered by seed
};

struct CorpusResult {
  std::vector<ProgramRuns> programs;  // ordered by name
  std::map<std::string, std::string> unparseable;  // file name -> diagnostic
  std::map<std::string, std::string> gold_provenance;
  std::int64_t total_runs = 0;
  std::int64_t successful_runs = 0;
  std::int64_t solved_count = 0;  // programs with at least one successful run
  std::int64_t direct_successes = 0;
  std::int64_t feedback_successes = 0;
  double mean_tokens_in_on_success = 0;
  double mean_tokens_out_on_success = 0;
  double mean_time_on_success = 0;
  RefinementScore refinement;

  Ratio success_rate() const;
};

struct CorpusOptions {
  RunConfig run;
  int repeats = 1;
  int workers = 1;
  SolverConfig solver;
  std::size_t solver_sessions = 0;
  std::string prompt_dir;
  /// Builds the model backend for one run of the program at `path`.
  std::function<std::unique_ptr<ChatBackend>(const std::string& path, std::uint64_t seed)> backend;
  /// When set, each program's exchanges are recorded next to it with this extension.
  std::string record_extension;
};

/// Runs every `*.c` file in `dir` `repeats` times with seeds seed, seed+1, ...
/// A sibling `<name>.gold` holds the gold invariants; `<name>.gold` may start
/// with `// provenance: ...`.
CorpusResult run_corpus(const std::string& dir, const CorpusOptions& opt);

/// Aggregates over already-finished runs. Deterministic in its input.
void aggregate(CorpusResult& result, const std::map<std::string, InvariantSet>& gold);

nlohmann::ordered_json summary_json(const CorpusResult& r);
std::string summary_table(const CorpusResult& r);

}  // namespace loopinv
