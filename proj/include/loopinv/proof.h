#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "loopinv/program.h"

namespace loopinv {

enum class ProofDiag {
  MissingSection,
  NonMonotoneSteps,
  NoSteps,
  MissingImplication,
  AmbiguousImplication,
  MissingComment,
  UnboundName,
  BadFormula,
};

const char* proof_diag_name(ProofDiag d);

class ProofFormatError : public std::runtime_error {
 public:
  ProofFormatError(ProofDiag code, std::string detail, int line = 0);
  ProofDiag code() const { return code_; }
  const std::string& detail() const { return detail_; }
  int line() const { return line_; }

 private:
  ProofDiag code_;
  std::string detail_;
  int line_;
};

// ---- structured natural-language proof ----

struct ProofStep {
  int number = 0;
  std::string label;  // "STEP 1: name"
  std::string body;

  friend bool operator==(const ProofStep&, const ProofStep&) = default;
};

struct StructuredProof {
  std::vector<std::string> initial;
  std::string preamble;  // text between [Proof] and the first step label
  std::vector<ProofStep> steps;
  std::string conclusion;

  friend bool operator==(const StructuredProof&, const StructuredProof&) = default;
};

StructuredProof parse_structured_proof(std::string_view text);

// ---- formalized proof ----

enum class ConditionTag { Initial, Derived, Declaration };

const char* tag_name(ConditionTag t);

struct TaggedCondition {
  Expr formula;
  ConditionTag tag = ConditionTag::Derived;
  std::string comment;  // as written after "//"

  friend bool operator==(const TaggedCondition&, const TaggedCondition&) = default;
};

struct Implication {
  Expr premise;
  Expr conclusion;
  std::string comment;

  Expr as_formula() const { return mk_implies(premise, conclusion); }
  friend bool operator==(const Implication&, const Implication&) = default;
};

struct FormalizedStep {
  std::string label;  // "STEP 1: name"; empty for an unlabeled proof
  int number = 0;
  std::vector<TaggedCondition> initial;
  std::vector<Implication> implications;
  Expr conclusion;
  std::string conclusion_comment;
  /// Names bound by declaration lines; visible in this step only.
  std::set<std::string> declared;
  /// False when a structured proof was supplied and has no step with this number.
  bool label_matched = true;

  std::vector<Expr> premises() const;
  friend bool operator==(const FormalizedStep&, const FormalizedStep&) = default;
};

struct FormalizedProof {
  std::vector<FormalizedStep> steps;

  friend bool operator==(const FormalizedProof&, const FormalizedProof&) = default;
};

/// Parses the Formalizer's output. When `structured` is given, step labels
/// are matched against it by step number and unmatched steps are flagged.
FormalizedProof parse_formalized_proof(std::string_view text, const Program& prog,
                                       const StructuredProof* structured = nullptr);

std::string to_string(const StructuredProof& p);
std::string to_string(const FormalizedProof& p);

}  // namespace loopinv
