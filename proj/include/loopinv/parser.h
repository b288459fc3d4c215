#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include "loopinv/program.h"

namespace loopinv {

enum class DiagCode {
  Syntax,
  FloatLiteral,
  NestedLoop,
  MultipleLoops,
  MissingLoop,
  MissingAssertion,
  MultipleAssertions,
  ReturnInLoop,
  Unsupported,
  UndeclaredVariable,
  TypeError,
  NoCodeBlock,
};

/// Stable diagnostic name, e.g. "nested-loop".
const char* diag_name(DiagCode code);

class ParseError : public std::runtime_error {
 public:
  ParseError(DiagCode code, std::string message, int line = 0, int column = 0);

  DiagCode code() const { return code_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  DiagCode code_;
  int line_;
  int column_;
  std::string detail_;
};

Program parse_program(std::string_view source, std::string name = "main");

/// Parses a boolean formula; `==>` is accepted. When `vars` is non-null every
/// variable must be a member of it. Int-valued formulas are coerced with `!= 0`.
Expr parse_formula(std::string_view text, const std::set<std::string>* vars = nullptr);

/// Extracts invariants from a model reply: the last fenced code block of
/// `assert(...);` lines, or a `loop invariant <id>: <expr>;` annotation block.
/// Items are renumbered i1..iN in order.
InvariantSet parse_invariant_block(std::string_view text, const Program& prog);

}  // namespace loopinv
