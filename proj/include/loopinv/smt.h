#pragma once

#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopinv/expr.h"
#include "loopinv/verdict.h"

namespace loopinv {

enum class Logic { Auto, LinearInts, NonlinearInts };

struct SolverBudget {
  double per_query_timeout = 5.0;  // seconds
  Logic logic = Logic::Auto;
};

struct QueryVerdict {
  VcStatus status = VcStatus::Unknown;
  std::optional<Assignment> model;  // only for Invalid
  std::string diagnostic;
};

struct SolverConfig {
  std::string path = "z3";
  std::vector<std::string> args{"-in", "-smt2"};
  /// When non-empty every emitted script is also written here.
  std::string dump_dir;
  /// Extra wall time allowed past the solver's own timeout before the process is killed.
  double grace_seconds = 0.5;
};

/// The solver binary could not be started.
class SolverUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The solver answered something we could not interpret.
class SolverProtocolError : public std::runtime_error {
 public:
  SolverProtocolError(const std::string& what, std::string transcript)
      : std::runtime_error(what), transcript_(std::move(transcript)) {}
  const std::string& transcript() const { return transcript_; }

 private:
  std::string transcript_;
};

/// "QF_NIA" if any formula multiplies two non-constant terms or divides by
/// one, else "QF_LIA". A forced logic in `requested` wins.
std::string select_logic(const std::vector<Expr>& formulas, Logic requested);

/// SMT-LIB 2 text for a satisfiability check of the conjunction of
/// `assertions`. Variables are declared in sorted order; the text depends only
/// on the arguments.
std::string encode_query(const std::vector<Expr>& assertions, const std::set<std::string>& vars,
                         const SolverBudget& budget);

/// SMT-LIB term for an expression. `/` and `%` truncate toward zero.
std::string to_smt(const Expr& e);

class SolverSession;

/// Pool of solver processes. Sessions are created lazily up to `capacity`;
/// acquire() blocks while all of them are leased.
class SolverPool {
 public:
  explicit SolverPool(SolverConfig config, std::size_t capacity = 0);
  ~SolverPool();
  SolverPool(const SolverPool&) = delete;
  SolverPool& operator=(const SolverPool&) = delete;

  class Lease {
   public:
    Lease(SolverPool* pool, std::unique_ptr<SolverSession> s);
    Lease(Lease&&) noexcept;
    Lease& operator=(Lease&&) = delete;
    ~Lease();
    SolverSession& operator*() const { return *session_; }
    SolverSession* operator->() const { return session_.get(); }

   private:
    SolverPool* pool_;
    std::unique_ptr<SolverSession> session_;
  };

  Lease acquire();
  std::size_t capacity() const { return capacity_; }
  const SolverConfig& config() const { return config_; }

  /// First line of `<solver> -version`, or an empty string.
  std::string solver_version() const;

 private:
  void release(std::unique_ptr<SolverSession> s);

  SolverConfig config_;
  std::size_t capacity_;
  std::size_t created_ = 0;
  std::vector<std::unique_ptr<SolverSession>> idle_;
  std::mutex mu_;
  std::condition_variable cv_;
};

/// Runs one query on a leased session.
QueryVerdict run_query(SolverSession& session, const std::vector<Expr>& assertions,
                       const std::set<std::string>& vars, const SolverBudget& budget);

/// Valid iff hypothesis && !goal is unsatisfiable.
QueryVerdict check_validity(SolverPool& pool, const Expr& hypothesis, const Expr& goal,
                            const std::set<std::string>& vars, const SolverBudget& budget);

/// Valid iff (conds[0] && ... ) && !p is unsatisfiable.
QueryVerdict check_entailment(SolverPool& pool, const std::vector<Expr>& conds, const Expr& p,
                              const std::set<std::string>& vars, const SolverBudget& budget);

}  // namespace loopinv
