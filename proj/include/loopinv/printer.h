#pragma once

#include <string>

#include "loopinv/program.h"

namespace loopinv {

/// Canonical C-like rendering with single spaces around binary operators.
/// Parentheses are emitted where precedence requires them and wherever the
/// source had them.
std::string to_string(const Expr& e);

/// Like to_string but always wraps the result in one pair of parentheses.
std::string to_string_parenthesized(const Expr& e);

std::string to_string(const Program& p);

/// `/*@ loop invariant i1: ...; */` annotation block.
std::string to_string(const InvariantSet& inv);

/// Fenced block of `assert(...);` lines, the answer format models use.
std::string to_assert_block(const InvariantSet& inv);

/// Canonical clause text used for syntactic comparison: `>`/`>=` become
/// `<`/`<=` with swapped sides, double negation is removed, and operands of
/// `==`, `!=`, `&&`, `||` are ordered by their canonical text.
std::string normalize_clause(const Expr& e);

}  // namespace loopinv
