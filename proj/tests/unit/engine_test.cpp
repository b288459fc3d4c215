#include <gtest/gtest.h>

#include "loopinv/engine.h"
#include "loopinv/printer.h"
#include "support.h"

using namespace loopinv;
using loopinv::test::walk;
using loopinv::test::fixture;
using loopinv::test::shared_pool;
using loopinv::test::source_path;

namespace {

VcResult result(VcKind k, const std::string& target, VcStatus st) {
  VcResult r;
  r.vc.kind = k;
  r.vc.target = target;
  r.status = st;
  return r;
}

/// Wraps a backend and checks the budget law on every request.
class MeteredBackend : public ChatBackend {
 public:
  MeteredBackend(std::unique_ptr<ChatBackend> inner, std::int64_t budget) : inner_(std::move(inner)), budget_(budget) {}
  Completion complete(Role role, const std::vector<ChatMessage>& messages, const std::string& digest) override {
    EXPECT_LT(used_, budget_) << "send issued after the token budget was reached";
    ++sends_;
    Completion c = inner_->complete(role, messages, digest);
    used_ += c.tokens_in + c.tokens_out;
    return c;
  }
  bool virtual_time() const override { return inner_->virtual_time(); }
  std::string name() const override { return "metered"; }
  int sends() const { return sends_; }

 private:
  std::unique_ptr<ChatBackend> inner_;
  std::int64_t budget_;
  std::int64_t used_ = 0;
  int sends_ = 0;
};

struct Harness {
  PromptKit kit;
  std::unique_ptr<Gateway> gateway;

  explicit Harness(std::unique_ptr<ChatBackend> backend) : gateway(std::make_unique<Gateway>(std::move(backend))) {}
  RunReport run(const Program& prog, const std::string& source, RunConfig cfg = {}) {
    return run_synthesis(prog, source, cfg, RunContext{shared_pool(), *gateway, kit});
  }
};

RunConfig seeded(std::uint64_t seed) {
  RunConfig cfg;
  cfg.rng_seed = seed;
  return cfg;
}

}  // namespace

TEST(SelectFailedVc, DeductiveOrder) {
  std::mt19937_64 rng(1);
  std::vector<VcResult> only_post = {result(VcKind::Establishment, "i1", VcStatus::Valid),
                                     result(VcKind::Preservation, "i1", VcStatus::Valid),
                                     result(VcKind::PostCondition, "assertion", VcStatus::Invalid)};
  EXPECT_EQ(select_failed_vc(only_post, rng).vc.kind, VcKind::PostCondition);

  std::vector<VcResult> mixed = {result(VcKind::Establishment, "i1", VcStatus::Valid),
                                 result(VcKind::Establishment, "i2", VcStatus::Invalid),
                                 result(VcKind::Preservation, "i1", VcStatus::Invalid),
                                 result(VcKind::PostCondition, "assertion", VcStatus::Invalid)};
  for (int i = 0; i < 20; ++i) EXPECT_EQ(select_failed_vc(mixed, rng).vc.target, "i2");

  std::vector<VcResult> unknown = {result(VcKind::Establishment, "i1", VcStatus::Valid),
                                   result(VcKind::Preservation, "i1", VcStatus::Timeout),
                                   result(VcKind::PostCondition, "assertion", VcStatus::Invalid)};
  EXPECT_EQ(select_failed_vc(unknown, rng).vc.kind, VcKind::Preservation);

  std::vector<VcResult> valid = {result(VcKind::PostCondition, "assertion", VcStatus::Valid)};
  EXPECT_THROW(select_failed_vc(valid, rng), std::invalid_argument);
}

TEST(SelectFailedVc, SeededPickMatchesReferenceGenerator) {
  // Reference picks computed by an independent mt19937_64 implementation:
  // the first eight outputs for seed 42, modulo 3.
  const std::vector<std::string> want = {"i1", "i3", "i2", "i1", "i3", "i3", "i2", "i1"};
  std::vector<VcResult> three = {result(VcKind::Establishment, "i1", VcStatus::Valid),
                                 result(VcKind::Preservation, "i1", VcStatus::Invalid),
                                 result(VcKind::Preservation, "i2", VcStatus::Invalid),
                                 result(VcKind::Preservation, "i3", VcStatus::Unknown)};
  std::mt19937_64 rng(42);
  std::vector<std::string> got;
  for (int i = 0; i < 8; ++i) got.push_back(select_failed_vc(three, rng).vc.target);
  EXPECT_EQ(got, want);
  std::mt19937_64 again(42);
  EXPECT_EQ(select_failed_vc(three, again).vc.target, "i1");
}

TEST(FallbackFeedback, WithAndWithoutCounterexample) {
  PromptKit kit;
  Program prog = walk();
  auto inv = parse_invariant_block("```\n/*@ loop invariant a == 0; */\n```\n", prog);
  auto results = check_vcs(generate_vcs(prog, inv), SolverBudget{}, shared_pool());
  const VcResult& pres = results[1];
  ASSERT_EQ(pres.vc.kind, VcKind::Preservation);
  ASSERT_EQ(pres.status, VcStatus::Invalid);
  ASSERT_TRUE(pres.counterexample);
  auto with = fallback_feedback(kit, pres, inv);
  EXPECT_NE(with.text.find("preservation of the loop invariant"), std::string::npos) << with.text;
  EXPECT_NE(with.text.find("For example, the values"), std::string::npos);

  VcResult unknown = pres;
  unknown.status = VcStatus::Unknown;
  unknown.counterexample.reset();
  auto without = fallback_feedback(kit, unknown, inv);
  EXPECT_NE(without.text.find("preservation of the loop invariant"), std::string::npos);
  EXPECT_EQ(without.text.find("For example"), std::string::npos);
  EXPECT_EQ(without.text.find("__"), std::string::npos);
}

TEST(Engine, WalkthroughReplay) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  Harness h(make_replay_backend(load_transcript(source_path("tests/fixtures/walkthrough/walkthrough.transcript"))));
  RunReport r = h.run(prog, source, seeded(7));
  ASSERT_EQ(r.outcome, Outcome::Solved) << r.diagnostic;
  EXPECT_EQ(r.classification, Classification::FeedbackDrivenSuccess);
  EXPECT_EQ(r.feedback_rounds(), 1);
  ASSERT_EQ(r.rounds.size(), 2u);
  const RoundRecord& first = r.rounds[0];
  EXPECT_EQ(first.events, (std::vector<std::string>{"checkInvariants", "terminationTest", "getNaturalProof",
                                                    "formalizeProof", "checkProof", "getRefinedInvariants"}));
  ASSERT_TRUE(first.check_report);
  ASSERT_EQ(first.check_report->errors.size(), 1u);
  EXPECT_EQ(first.check_report->errors[0].kind, ErrorKind::InvalidImplication);
  EXPECT_EQ(to_string(first.check_report->errors[0].formula), "(j > m) ==> (j == m + 1)");
  EXPECT_FALSE(first.used_fallback);
  ASSERT_TRUE(r.final_invariants);
  bool has_bound = false;
  for (const auto& inv : r.final_invariants->items) has_bound |= to_string(inv.formula) == "j <= m + 1";
  EXPECT_TRUE(has_bound);
  EXPECT_EQ(exit_code(r.outcome), 0);

  // Token accounting: report totals equal the sum over rounds, and the gateway totals.
  TokenCount sum;
  for (const auto& rd : r.rounds) sum += rd.tokens;
  EXPECT_EQ(sum, r.tokens);
  EXPECT_EQ(r.tokens, h.gateway->totals());
}

TEST(Engine, ReplayIsByteIdentical) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto t = load_transcript(source_path("tests/fixtures/walkthrough/walkthrough.transcript"));
  Harness a(make_replay_backend(t));
  Harness b(make_replay_backend(t));
  EXPECT_EQ(to_json_text(a.run(prog, source, seeded(7))), to_json_text(b.run(prog, source, seeded(7))));
}

TEST(Engine, EmptyInvariantSetDirectSuccess) {
  const std::string src = "int main() {\n  int x = 0;\n  while (x < 0) {\n    x = x + 1;\n  }\n  assert(x >= 0);\n}\n";
  Program prog = parse_program(src, "trivial");
  Harness h(make_scripted_backend({{Role::Synthesizer, {"```c\n```"}}}));
  RunReport r = h.run(prog, src);
  ASSERT_EQ(r.outcome, Outcome::Solved) << r.diagnostic;
  EXPECT_EQ(r.classification, Classification::DirectSuccess);
  ASSERT_EQ(r.rounds.size(), 1u);
  EXPECT_EQ(r.rounds[0].vc_results.size(), 1u);
  EXPECT_EQ(r.rounds[0].events, (std::vector<std::string>{"checkInvariants", "terminationTest"}));
  EXPECT_TRUE(r.final_invariants->items.empty());
}

TEST(Engine, TokenBudgetStopsBeforeTheNextSend) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto script = load_script(source_path("tests/fixtures/walkthrough/script.json"));
  RunConfig cfg = seeded(7);
  cfg.token_budget = 1200;  // enough for the proposal, exhausted inside the first feedback round
  auto backend = std::make_unique<MeteredBackend>(make_scripted_backend(script), cfg.token_budget);
  MeteredBackend* meter = backend.get();
  Harness h(std::move(backend));
  RunReport r = h.run(prog, source, cfg);
  EXPECT_EQ(r.outcome, Outcome::BudgetExhausted);
  EXPECT_EQ(r.classification, Classification::Failure);
  EXPECT_NE(r.diagnostic.find("token budget"), std::string::npos);
  EXPECT_GE(r.tokens.total(), cfg.token_budget);
  ASSERT_EQ(r.rounds.size(), 1u);
  EXPECT_TRUE(r.rounds[0].selected);
  EXPECT_LT(meter->sends(), 4);
  EXPECT_EQ(exit_code(r.outcome), 2);
}

TEST(Engine, BudgetLawAcrossBudgets) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto script = load_script(source_path("tests/fixtures/walkthrough/script.json"));
  for (std::int64_t budget : {1, 50, 400, 900, 1500, 2500, 4000, 100000}) {
    RunConfig cfg = seeded(7);
    cfg.token_budget = budget;
    Harness h(std::make_unique<MeteredBackend>(make_scripted_backend(script), budget));
    RunReport r = h.run(prog, source, cfg);
    EXPECT_TRUE(r.outcome == Outcome::Solved || r.outcome == Outcome::BudgetExhausted) << r.diagnostic;
  }
}

TEST(Engine, WallClockBudget) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto t = load_transcript(source_path("tests/fixtures/walkthrough/walkthrough.transcript"));
  for (auto& e : t.entries) e.latency_ms = 400000;  // each reply "takes" 400 s of virtual time
  Harness h(make_replay_backend(t));
  RunReport r = h.run(prog, source, seeded(7));
  EXPECT_EQ(r.outcome, Outcome::BudgetExhausted);
  EXPECT_NE(r.diagnostic.find("time budget"), std::string::npos);
  EXPECT_DOUBLE_EQ(r.elapsed, 800.0);
}

TEST(Engine, UnparseableReplyIsAskedAgainOnce) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto script = load_script(source_path("tests/fixtures/walkthrough/script.json"));
  auto& syn = script[Role::Synthesizer];
  syn.insert(syn.begin() + 1, "I think the proof is obvious.");  // proof reply without sections
  Harness h(make_scripted_backend(script));
  RunReport r = h.run(prog, source, seeded(7));
  ASSERT_EQ(r.outcome, Outcome::Solved) << r.diagnostic;
  EXPECT_EQ(r.feedback_rounds(), 1);
  EXPECT_FALSE(r.rounds[0].failed);
  bool reminded = false;
  for (const auto& e : h.gateway->recorded().entries) reminded |= e.prompt.find("missing-section") != std::string::npos;
  EXPECT_TRUE(reminded);
}

TEST(Engine, TwiceUnparseableFailsTheRound) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  auto script = load_script(source_path("tests/fixtures/walkthrough/script.json"));
  auto& syn = script[Role::Synthesizer];
  syn.insert(syn.begin() + 1, {"no proof", "still no proof"});
  RunConfig cfg = seeded(7);
  cfg.max_feedback_rounds = 1;
  Harness h(make_scripted_backend(script));
  RunReport r = h.run(prog, source, cfg);
  EXPECT_EQ(r.outcome, Outcome::BudgetExhausted);
  ASSERT_GE(r.rounds.size(), 1u);
  EXPECT_TRUE(r.rounds[0].failed);
  EXPECT_NE(r.rounds[0].failure.find("proof unparseable"), std::string::npos);
  EXPECT_EQ(r.rounds[0].events.back(), "getNaturalProof");
}

TEST(Engine, FeedbackRoundLimit) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  RunConfig cfg = seeded(7);
  cfg.max_feedback_rounds = 0;
  Harness h(make_scripted_backend(load_script(source_path("tests/fixtures/walkthrough/script.json"))));
  RunReport r = h.run(prog, source, cfg);
  EXPECT_EQ(r.outcome, Outcome::BudgetExhausted);
  EXPECT_NE(r.diagnostic.find("feedback round limit of 0"), std::string::npos);
  EXPECT_EQ(r.feedback_rounds(), 0);
}

TEST(Engine, GatewayErrorIsAnErrorOutcome) {
  Program prog = walk();
  Harness h(make_replay_backend(Transcript{}));
  RunReport r = h.run(prog, fixture("walkthrough/walk.c"));
  EXPECT_EQ(r.outcome, Outcome::Error);
  EXPECT_NE(r.diagnostic.find("replay miss"), std::string::npos);
  EXPECT_EQ(exit_code(r.outcome), 3);
}

TEST(Engine, ReportJsonShape) {
  Program prog = walk();
  const std::string source = fixture("walkthrough/walk.c");
  Harness h(make_replay_backend(load_transcript(source_path("tests/fixtures/walkthrough/walkthrough.transcript"))));
  auto j = to_json(h.run(prog, source, seeded(7)));
  EXPECT_EQ(j["format"], "loopinv-run-report");
  EXPECT_EQ(j["version"], 1);
  EXPECT_EQ(j["outcome"], "Solved");
  EXPECT_EQ(j["classification"], "FeedbackDrivenSuccess");
  EXPECT_EQ(j["feedback_rounds"], 1);
  EXPECT_EQ(j["rounds"][0]["check_report"]["errors"][0]["formula"], "(j > m) ==> (j == m + 1)");
  EXPECT_EQ(j["rounds"][0]["selected_vc"]["kind"], "PostCondition");
  EXPECT_TRUE(j["rounds"][0]["vc_results"][6].contains("counterexample"));
}

TEST(Engine, RejectsNonPositiveBudgets) {
  Harness h(make_scripted_backend({}));
  RunConfig cfg;
  cfg.token_budget = 0;
  EXPECT_THROW(h.run(walk(), "x", cfg), std::invalid_argument);
}
