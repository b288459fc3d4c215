#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopinv/program.h"
#include "loopinv/verdict.h"

namespace loopinv {

/// Division by zero, int64 overflow, or an unbound variable.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// C division and remainder (truncation toward zero). Throw EvalError on a
/// zero divisor or overflow.
std::int64_t c_div(std::int64_t a, std::int64_t b);
std::int64_t c_mod(std::int64_t a, std::int64_t b);

/// Tree-walking evaluation; booleans are 0/1.
std::int64_t evaluate(const Expr& e, const Assignment& env);
bool holds(const Expr& e, const Assignment& env);

/// An expression flattened to postfix code over numbered variable slots.
/// Logical operators do not short-circuit: any faulting subterm faults the
/// whole evaluation.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, const std::vector<std::string>& slots);

  /// False on a fault (division by zero, overflow).
  bool eval(const std::int64_t* env, std::int64_t& out) const;

 private:
  enum class Op : std::uint8_t {
    Const, Load, Neg, Not, Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or, Implies
  };
  struct Instr {
    Op op;
    std::int64_t arg;
  };
  void compile(const Expr& e, const std::vector<std::string>& slots);

  std::vector<Instr> code_;
  std::size_t max_stack_ = 0;
};

struct OracleResult {
  bool valid = true;
  std::optional<Assignment> witness;  // first point, in enumeration order, with hyp && !goal
  std::uint64_t points = 0;
  std::uint64_t skipped = 0;  // points where evaluation faulted
};

/// Exhaustive check of hypothesis ==> goal over vars in [-bound, bound].
/// Variables are enumerated in sorted order, the first one most significant,
/// values ascending; the witness is the first failing point in that order.
OracleResult brute_force_validity(const Expr& hypothesis, const Expr& goal, const std::set<std::string>& vars,
                                  std::int64_t bound);
/// Single-threaded reference for brute_force_validity; same result.
OracleResult brute_force_validity_serial(const Expr& hypothesis, const Expr& goal,
                                         const std::set<std::string>& vars, std::int64_t bound);

struct InterpConfig {
  std::int64_t bound = 3;   // initial values and havoc values range over [-bound, bound]
  int max_iterations = 8;   // executions still looping after this many iterations are dropped
};

struct InterpResult {
  bool violated = false;
  /// First violating initial state in enumeration order (state variables only).
  std::optional<Assignment> initial_state;
  std::uint64_t initial_states = 0;
  std::uint64_t exits = 0;   // loop exits whose assertion was evaluated
  std::uint64_t pruned = 0;  // paths cut by a faulting evaluation
};

/// Bounded exploration of all executions of `prog`.
InterpResult find_violation(const Program& prog, const InterpConfig& cfg);
/// Single-threaded reference for find_violation; same result.
InterpResult find_violation_serial(const Program& prog, const InterpConfig& cfg);

}  // namespace loopinv
