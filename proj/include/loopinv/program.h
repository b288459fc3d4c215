#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

#include "loopinv/expr.h"

namespace loopinv {

struct Stmt;

struct Assign {
  std::string var;
  Expr value;
};

/// Assigns an arbitrary integer; models `unknown()`.
struct Havoc {
  std::string var;
};

struct Assume {
  Expr cond;
};

struct If {
  Expr cond;
  std::vector<Stmt> then_branch;
  std::vector<Stmt> else_branch;
};

struct Skip {};

struct Stmt {
  std::variant<Assign, Havoc, Assume, If, Skip> node;
};

bool operator==(const Assign& a, const Assign& b);
bool operator==(const Havoc& a, const Havoc& b);
bool operator==(const Assume& a, const Assume& b);
bool operator==(const If& a, const If& b);
bool operator==(const Skip&, const Skip&);
bool operator==(const Stmt& a, const Stmt& b);

/// A single-loop integer program:  pre; while (loop_cond) { body }; assert(assertion).
struct Program {
  std::string name;
  std::set<std::string> vars;
  /// Fresh variables introduced for `unknown()` calls (a subset of vars).
  std::set<std::string> nondet_vars;
  std::vector<Stmt> pre;
  /// Variables re-drawn before every evaluation of the loop condition.
  std::vector<std::string> cond_havoc;
  Expr loop_cond;
  std::vector<Stmt> body;
  Expr assertion;

  /// Program variables excluding the synthesized nondeterminism sources.
  std::vector<std::string> state_vars() const;
};

bool operator==(const Program& a, const Program& b);

struct Invariant {
  std::string id;
  Expr formula;
};

struct InvariantSet {
  std::vector<Invariant> items;

  bool empty() const { return items.empty(); }
  std::size_t size() const { return items.size(); }
  std::vector<Expr> formulas() const;
};

bool operator==(const Invariant& a, const Invariant& b);
bool operator==(const InvariantSet& a, const InvariantSet& b);

}  // namespace loopinv
