#include <gtest/gtest.h>

#include <random>

#include "loopinv/checker.h"
#include "loopinv/oracle.h"
#include "loopinv/printer.h"
#include "support.h"

using namespace loopinv;
using loopinv::test::walk;
using loopinv::test::fixture;
using loopinv::test::load_inv;
using loopinv::test::shared_pool;

namespace {

const SolverBudget kBudget{};

FormalizedStep step_of(const std::string& text, const Program& prog) {
  auto fp = parse_formalized_proof(text, prog);
  EXPECT_EQ(fp.steps.size(), 1u);
  return fp.steps.at(0);
}

/// Step over free integer variables x, y, z.
FormalizedStep free_step(const std::vector<std::string>& pre,
                         const std::vector<std::pair<std::string, std::string>>& imps) {
  FormalizedStep s;
  s.label = "STEP 1: t";
  s.number = 1;
  for (const auto& p : pre) s.initial.push_back({parse_formula(p), ConditionTag::Initial, "initial"});
  int i = 0;
  for (const auto& [p, q] : imps) s.implications.push_back({parse_formula(p), parse_formula(q), "c" + std::to_string(i++)});
  return s;
}

std::string describe(const ReasoningError& e) {
  return e.step_label + "|" + error_kind_name(e.kind) + "|" + to_string(e.formula) + "|" + e.comment + "|" +
         status_name(e.solver_status);
}

std::vector<std::string> describe(const std::vector<ReasoningError>& es) {
  std::vector<std::string> out;
  for (const auto& e : es) out.push_back(describe(e));
  return out;
}

}  // namespace

TEST(Checker, WalkthroughFormalizedProofHasOneNonSequitur) {
  Program prog = walk();
  auto vcs = generate_vcs(prog, load_inv("walkthrough/weak.inv", prog));
  ASSERT_EQ(vcs.back().kind, VcKind::PostCondition);
  auto fp = parse_formalized_proof(fixture("walkthrough/reply_formalized.txt"), prog);
  CheckReport r = check_proof(fp, prog, vcs.back(), shared_pool(), kBudget);
  ASSERT_EQ(r.errors.size(), 1u) << ::testing::PrintToString(describe(r.errors));
  EXPECT_EQ(r.errors[0].kind, ErrorKind::InvalidImplication);
  EXPECT_EQ(to_string(r.errors[0].formula), "(j > m) ==> (j == m + 1)");
  EXPECT_EQ(r.errors[0].comment, "At loop termination, j is m + 1.");
  EXPECT_EQ(r.errors[0].solver_status, VcStatus::Invalid);
  EXPECT_FALSE(r.errors[0].soft());
  EXPECT_EQ(r.checked_implications, 2u);
  ASSERT_EQ(r.conds_trace.size(), 1u);
  EXPECT_EQ(r.conds_trace[0].size(), 4u);
}

TEST(Checker, UnconditionalAccumulation) {
  // The second implication's premise mentions j == m + 1, which only the
  // (invalid) first implication supplies.
  Program prog = walk();
  auto fp = parse_formalized_proof(fixture("walkthrough/reply_formalized.txt"), prog);
  const auto& step = fp.steps[0];
  QueryVerdict without = check_entailment(shared_pool(), step.premises(), step.implications[1].premise, {}, kBudget);
  EXPECT_EQ(without.status, VcStatus::Invalid);
  StepCheck sc = check_step(step, step.premises(), shared_pool(), kBudget);
  ASSERT_EQ(sc.errors.size(), 1u);
  EXPECT_EQ(sc.errors[0].comment, step.implications[0].comment);
  EXPECT_EQ(sc.conds_out.back(), step.implications[1].conclusion);
  EXPECT_EQ(sc.conds_out[2], parse_formula("j == m + 1"));

  // Dropping the first implication exposes the unsupported premise.
  FormalizedStep cut = step;
  cut.implications.erase(cut.implications.begin());
  StepCheck sc2 = check_step(cut, cut.premises(), shared_pool(), kBudget);
  ASSERT_EQ(sc2.errors.size(), 1u);
  EXPECT_EQ(sc2.errors[0].kind, ErrorKind::UnsupportedPremise);
}

TEST(Checker, ReflexiveImplication) {
  auto s = free_step({"x > 2"}, {{"x > 2", "x > 2"}});
  EXPECT_TRUE(check_step(s, s.premises(), shared_pool(), kBudget).errors.empty());
}

TEST(Checker, UnsupportedPremiseOnly) {
  auto s = free_step({"x >= 0"}, {{"x > 0", "x >= 1"}});
  StepCheck sc = check_step(s, s.premises(), shared_pool(), kBudget);
  ASSERT_EQ(sc.errors.size(), 1u);
  EXPECT_EQ(sc.errors[0].kind, ErrorKind::UnsupportedPremise);
  EXPECT_EQ(to_string(sc.errors[0].formula), "x > 0");
  // Oracle: the same verdicts by enumeration.
  EXPECT_FALSE(brute_force_validity(parse_formula("x >= 0"), parse_formula("x > 0"), {"x"}, 5).valid);
  EXPECT_TRUE(brute_force_validity(parse_formula("x > 0"), parse_formula("x >= 1"), {"x"}, 5).valid);
}

TEST(Checker, TrivialProofHasNoErrors) {
  Program prog = walk();
  auto vcs = generate_vcs(prog, load_inv("walkthrough/strong.inv", prog));
  auto fp = parse_formalized_proof(
      "[STEP 1: a]\n[Initial]\nm > 0 // initial\n[Proof]\ntrue ==> true // t\ntrue ==> true // t\n[Conclusion]\ntrue\n",
      prog);
  for (const auto& vc : vcs) {
    CheckReport r = check_proof(fp, prog, vc, shared_pool(), kBudget);
    EXPECT_TRUE(r.errors.empty()) << kind_name(vc.kind);
  }
  CheckReport empty = check_proof(FormalizedProof{}, prog, vcs[0], shared_pool(), kBudget);
  EXPECT_TRUE(empty.errors.empty());
  EXPECT_TRUE(empty.conds_trace.empty());
}

TEST(Checker, InitialConditionsAgainstLoopEntry) {
  Program prog = walk();
  auto vcs = generate_vcs(prog, load_inv("walkthrough/strong.inv", prog));
  ASSERT_EQ(vcs[0].kind, VcKind::Establishment);
  auto weaker = step_of("[STEP 1: s]\n[Initial]\nm >= 0 // initial\n[Proof]\n[Conclusion]\ntrue\n", prog);
  EXPECT_TRUE(check_initial_conditions(weaker, prog, vcs[0], shared_pool(), kBudget).empty());

  auto wrong = step_of(
      "[STEP 1: s]\n[Initial]\nj == 0 // initial\na == 1 // derived\nk == j + 1 // declaration\nk == 2 // initial\n"
      "[Proof]\n[Conclusion]\ntrue\n",
      prog);
  auto errs = check_initial_conditions(wrong, prog, vcs[0], shared_pool(), kBudget);
  ASSERT_EQ(errs.size(), 1u);  // derived lines are skipped; the declaration makes k == 2 hold
  EXPECT_EQ(errs[0].kind, ErrorKind::BadInitialCondition);
  EXPECT_EQ(to_string(errs[0].formula), "j == 0");

  auto none = step_of("[STEP 1: s]\n[Initial]\nj == 0 // derived\n[Proof]\n[Conclusion]\ntrue\n", prog);
  EXPECT_TRUE(check_initial_conditions(none, prog, vcs[0], shared_pool(), kBudget).empty());
  // Only Establishment VCs check initial lines.
  EXPECT_TRUE(check_initial_conditions(wrong, prog, vcs.back(), shared_pool(), kBudget).empty());
}

TEST(Checker, InitialConditionsOnFlagCounter) {
  // The check is against the first loop entry, where k == 0 and j == 2 hold.
  Program prog = parse_program(fixture("flag_counter.c"), "flag_counter");
  auto inv = parse_invariant_block("```\n/*@ loop invariant k >= 0; */\n```\n", prog);
  auto vcs = generate_vcs(prog, inv);
  auto s = step_of("[STEP 1: s]\n[Initial]\nk == 0 // initial\nj == 2 // initial\n[Proof]\n[Conclusion]\ntrue\n", prog);
  EXPECT_TRUE(check_initial_conditions(s, prog, vcs[0], shared_pool(), kBudget).empty());
  auto bad = step_of("[STEP 1: s]\n[Initial]\nj == 4 // initial\n[Proof]\n[Conclusion]\ntrue\n", prog);
  EXPECT_EQ(check_initial_conditions(bad, prog, vcs[0], shared_pool(), kBudget).size(), 1u);
}

TEST(Checker, WrongDerivedConclusionIsNotReusedAsAnError) {
  Program prog = walk();
  auto vcs = generate_vcs(prog, load_inv("walkthrough/weak.inv", prog));
  auto fp = parse_formalized_proof(
      "[STEP 1: a]\n[Initial]\nj > m // initial\n[Proof]\nj > m ==> j == m + 1 // wrong\n[Conclusion]\nj == m + 1\n"
      "[STEP 2: b]\n[Initial]\nj == m + 1 // derived\n[Proof]\nj == m + 1 ==> j > m // fine\n[Conclusion]\nj > m\n",
      prog);
  CheckReport r = check_proof(fp, prog, vcs.back(), shared_pool(), kBudget);
  ASSERT_EQ(r.errors.size(), 1u);
  EXPECT_EQ(r.errors[0].step_label, "STEP 1: a");
}

TEST(Checker, ErrorOrderFollowsSourceLines) {
  Program prog = walk();
  auto vcs = generate_vcs(prog, load_inv("walkthrough/strong.inv", prog));
  auto fp = parse_formalized_proof(
      "[STEP 1: a]\n[Initial]\nj == 5 // initial\n[Proof]\nm > 5 ==> m > 6 // one\nj > 0 ==> j > 1 // two\n"
      "[Conclusion]\ntrue\n"
      "[STEP 2: b]\n[Initial]\nm == 9 // initial\n[Proof]\na > 0 ==> a > 3 // three\n[Conclusion]\ntrue\n",
      prog);
  CheckReport r = check_proof(fp, prog, vcs[0], shared_pool(), kBudget);
  std::vector<std::string> got;
  for (const auto& e : r.errors) got.push_back(std::string(error_kind_name(e.kind)) + ":" + to_string(e.formula));
  const std::vector<std::string> want = {
      "BadInitialCondition:j == 5",         "UnsupportedPremise:m > 5",
      "InvalidImplication:m > 5 ==> m > 6", "InvalidImplication:j > 0 ==> j > 1",
      "BadInitialCondition:m == 9",         "UnsupportedPremise:a > 0",
      "InvalidImplication:a > 0 ==> a > 3",
  };
  EXPECT_EQ(got, want);
}

TEST(Checker, SoftErrorsCarryTheSolverStatus) {
  // Nonlinear facts the solver gives up on within a tiny budget are soft.
  SolverBudget tiny{0.05, Logic::Auto};
  auto s = free_step({}, {{"x > 0 && y > 0 && z > 0", "x * x * x + y * y * y != z * z * z"}});
  StepCheck sc = check_step(s, s.premises(), shared_pool(), tiny);
  ASSERT_FALSE(sc.errors.empty());
  const auto& e = sc.errors.back();
  EXPECT_EQ(e.kind, ErrorKind::InvalidImplication);
  EXPECT_NE(e.solver_status, VcStatus::Invalid);
  EXPECT_TRUE(e.soft());
}

namespace {

std::string rand_atom(std::mt19937_64& rng) {
  static const char* vars[] = {"x", "y", "z"};
  static const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
  std::string lhs = vars[rng() % 3];
  if (rng() % 2) lhs += std::string(rng() % 2 ? " + " : " - ") + vars[rng() % 3];
  return lhs + " " + ops[rng() % 6] + " " + std::to_string(static_cast<int>(rng() % 7) - 3);
}

}  // namespace

TEST(CheckerProperty, GrowthOrderIdempotencePrefix) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::string> pre;
    for (int i = 0, n = static_cast<int>(rng() % 3); i < n; ++i) pre.push_back(rand_atom(rng));
    std::vector<std::pair<std::string, std::string>> imps;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 4); i < n; ++i) {
      imps.emplace_back(rng() % 3 ? rand_atom(rng) : rand_atom(rng) + " && " + rand_atom(rng), rand_atom(rng));
    }
    auto s = free_step(pre, imps);
    StepCheck a = check_step(s, s.premises(), shared_pool(), kBudget);

    // Conds growth law.
    ASSERT_EQ(a.conds_out.size(), pre.size() + imps.size());
    // Error order: source index (the comment "cI") never decreases; within one
    // implication the premise error precedes the implication error.
    int last = -1;
    ErrorKind last_kind = ErrorKind::UnsupportedPremise;
    for (const auto& e : a.errors) {
      int idx = std::stoi(e.comment.substr(1));
      ASSERT_TRUE(idx > last || (idx == last && last_kind == ErrorKind::UnsupportedPremise &&
                                 e.kind == ErrorKind::InvalidImplication));
      last = idx;
      last_kind = e.kind;
    }
    // Idempotence.
    StepCheck b = check_step(s, s.premises(), shared_pool(), kBudget);
    ASSERT_EQ(describe(a.errors), describe(b.errors));
    ASSERT_EQ(a.conds_out, b.conds_out);
    // Prefix property: drop the last error-free implication; earlier verdicts are unchanged.
    for (int k = static_cast<int>(imps.size()) - 1; k >= 0; --k) {
      const std::string tag = "c" + std::to_string(k);
      bool clean = std::none_of(a.errors.begin(), a.errors.end(), [&](const auto& e) { return e.comment == tag; });
      if (!clean) continue;
      FormalizedStep cut = s;
      cut.implications.erase(cut.implications.begin() + k);
      StepCheck c = check_step(cut, cut.premises(), shared_pool(), kBudget);
      std::vector<std::string> before, after;
      for (const auto& e : a.errors) {
        if (std::stoi(e.comment.substr(1)) < k) before.push_back(describe(e));
      }
      for (const auto& e : c.errors) {
        if (std::stoi(e.comment.substr(1)) < k) after.push_back(describe(e));
      }
      ASSERT_EQ(before, after);
      break;
    }
  }
}

TEST(CheckerProperty, VerdictsAgreeWithOracle) {
  // Every hard verdict is confirmed by enumeration: an Invalid claim has a
  // small witness, a Valid one has none in the window.
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> pre{rand_atom(rng)};
    auto s = free_step(pre, {{rand_atom(rng), rand_atom(rng)}});
    StepCheck sc = check_step(s, s.premises(), shared_pool(), kBudget);
    const auto& imp = s.implications[0];
    bool premise_err = false, imp_err = false;
    for (const auto& e : sc.errors) {
      (e.kind == ErrorKind::UnsupportedPremise ? premise_err : imp_err) = true;
    }
    const std::set<std::string> vars{"x", "y", "z"};
    EXPECT_EQ(!premise_err, brute_force_validity(s.initial[0].formula, imp.premise, vars, 8).valid);
    EXPECT_EQ(!imp_err, brute_force_validity(imp.premise, imp.conclusion, vars, 8).valid);
  }
}
