#include "loopinv/engine.h"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "loopinv/parser.h"
#include "loopinv/printer.h"

namespace loopinv {

using json = nlohmann::ordered_json;

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Solved: return "Solved";
    case Outcome::BudgetExhausted: return "BudgetExhausted";
    case Outcome::Error: return "Error";
  }
  return "?";
}

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::DirectSuccess: return "DirectSuccess";
    case Classification::FeedbackDrivenSuccess: return "FeedbackDrivenSuccess";
    case Classification::Failure: return "Failure";
  }
  return "?";
}

int exit_code(Outcome o) {
  switch (o) {
    case Outcome::Solved: return 0;
    case Outcome::BudgetExhausted: return 2;
    case Outcome::Error: return 3;
  }
  return 3;
}

int RunReport::feedback_rounds() const {
  int n = 0;
  for (const auto& r : rounds) n += r.selected.has_value();
  return n;
}

const VcResult& select_failed_vc(const std::vector<VcResult>& results, std::mt19937_64& rng) {
  for (VcKind kind : {VcKind::Establishment, VcKind::Preservation, VcKind::PostCondition}) {
    std::vector<const VcResult*> pool;
    for (const auto& r : results) {
      if (r.vc.kind == kind && r.status != VcStatus::Valid) pool.push_back(&r);
    }
    if (!pool.empty()) return *pool[rng() % pool.size()];
  }
  throw std::invalid_argument("select_failed_vc: every verification condition is valid");
}

PromptBundle fallback_feedback(const PromptKit& kit, const VcResult& failed, const InvariantSet& inv) {
  return kit.render_fallback(failed, inv);
}

namespace {

json inv_json(const InvariantSet& inv) {
  json a = json::array();
  for (const auto& i : inv.items) a.push_back({{"id", i.id}, {"formula", to_string(i.formula)}});
  return a;
}

json vc_json(const VerificationCondition& vc) {
  return {{"kind", kind_name(vc.kind)},
          {"target", vc.target},
          {"hypothesis", to_string(vc.hypothesis)},
          {"goal", to_string(vc.goal)}};
}

json result_json(const VcResult& r) {
  json j = {{"kind", kind_name(r.vc.kind)}, {"target", r.vc.target}, {"status", status_name(r.status)}};
  if (r.counterexample) {
    json m = json::object();
    for (const auto& [k, v] : *r.counterexample) m[k] = v;
    j["counterexample"] = m;
  }
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

json report_json(const CheckReport& c) {
  json errs = json::array();
  for (const auto& e : c.errors) {
    errs.push_back({{"step", e.step_label},
                    {"kind", error_kind_name(e.kind)},
                    {"formula", to_string(e.formula)},
                    {"comment", e.comment},
                    {"solver_status", status_name(e.solver_status)}});
  }
  return {{"vc", vc_json(c.vc)}, {"checked_implications", c.checked_implications}, {"errors", errs}};
}

json tokens_json(const TokenCount& t) { return {{"input", t.input}, {"output", t.output}}; }

/// Rounded to the millisecond so reports do not carry float noise.
double round_ms(double s) { return std::round(s * 1000.0) / 1000.0; }

struct BudgetExhausted {
  std::string what;
};

class Run {
 public:
  Run(const Program& prog, const std::string& source, const RunConfig& cfg, RunContext ctx)
      : prog_(prog), source_(source), cfg_(cfg), ctx_(ctx), rng_(cfg.rng_seed),
        start_(std::chrono::steady_clock::now()), synth_(Role::Synthesizer) {}

  RunReport execute() {
    report_.program = prog_.name;
    report_.seed = cfg_.rng_seed;
    try {
      loop();
    } catch (const BudgetExhausted& b) {
      finish_round();
      report_.outcome = Outcome::BudgetExhausted;
      report_.diagnostic = b.what;
    } catch (const std::exception& e) {
      finish_round();
      report_.outcome = Outcome::Error;
      report_.diagnostic = e.what();
    }
    report_.classification = Classification::Failure;
    if (report_.outcome == Outcome::Solved) {
      report_.classification = report_.feedback_rounds() == 0 ? Classification::DirectSuccess
                                                              : Classification::FeedbackDrivenSuccess;
    }
    report_.tokens = ctx_.gateway.totals();
    report_.elapsed = round_ms(elapsed());
    return std::move(report_);
  }

 private:
  double elapsed() const {
    if (ctx_.gateway.virtual_time()) return ctx_.gateway.virtual_seconds();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void check_budget(const char* before) const {
    const TokenCount& t = ctx_.gateway.totals();
    if (t.total() >= cfg_.token_budget) {
      throw BudgetExhausted{"token budget of " + std::to_string(cfg_.token_budget) + " reached before " + before};
    }
    if (elapsed() >= cfg_.wall_clock_budget) {
      throw BudgetExhausted{"time budget of " + std::to_string(cfg_.wall_clock_budget) + " s reached before " + before};
    }
  }

  std::string send(ChatSession& session, const PromptBundle& prompt, const char* what) {
    check_budget(what);
    return ctx_.gateway.send(session, prompt);
  }

  /// Sends `prompt`, parses the reply with `parse`; on a parse failure asks
  /// once more with the format reminder. Returns nullopt after two failures.
  template <class T, class Parse>
  std::optional<T> ask(ChatSession& session, const PromptBundle& prompt, const char* what, Parse parse,
                       std::string& raw, std::string& problem) {
    raw = send(session, prompt, what);
    for (int attempt = 0;; ++attempt) {
      try {
        return parse(raw);
      } catch (const ParseError& e) {
        problem = e.what();
      } catch (const ProofFormatError& e) {
        problem = e.what();
      }
      if (attempt == 1) return std::nullopt;
      raw = send(session, ctx_.prompts.render_format_reminder(problem), what);
    }
  }

  std::vector<VcResult> verify(const InvariantSet& inv) {
    check_budget("a solver batch");
    return check_vcs(generate_vcs(prog_, inv), cfg_.solver, ctx_.pool);
  }

  void begin_round() {
    RoundRecord r;
    r.index = static_cast<int>(report_.rounds.size());
    r.invariants = inv_;
    report_.rounds.push_back(std::move(r));
  }

  void finish_round() {
    if (report_.rounds.empty()) return;
    RoundRecord& r = report_.rounds.back();
    // Tokens since the previous round ended; round 0 also carries the initial proposal.
    const TokenCount& now = ctx_.gateway.totals();
    r.tokens = {now.input - accounted_.input, now.output - accounted_.output};
    accounted_ = now;
    r.elapsed = round_ms(elapsed());
  }

  void loop() {
    std::string raw, problem;
    auto parse_inv = [&](const std::string& text) { return parse_invariant_block(text, prog_); };
    auto first = ask<InvariantSet>(synth_, ctx_.prompts.render_initial(source_), "the initial proposal", parse_inv,
                                   raw, problem);
    std::string initial_failure;
    if (first) {
      inv_ = *first;
      report_.initial_invariants = inv_;
    } else {
      initial_failure = "initial proposal unparseable: " + problem;
    }

    for (;;) {
      begin_round();
      RoundRecord& round = report_.rounds.back();
      round.failure = initial_failure;
      initial_failure.clear();

      round.vc_results = verify(inv_);
      round.events.push_back("checkInvariants");
      round.events.push_back("terminationTest");
      if (all_valid(round.vc_results)) {
        finish_round();
        // Re-verified once more on a fresh batch before the result is reported.
        auto again = check_vcs(generate_vcs(prog_, inv_), cfg_.solver, ctx_.pool);
        if (!all_valid(again)) throw std::runtime_error("re-verification of the final invariants failed");
        report_.outcome = Outcome::Solved;
        report_.final_invariants = inv_;
        return;
      }
      if (cfg_.max_feedback_rounds && report_.feedback_rounds() >= *cfg_.max_feedback_rounds) {
        throw BudgetExhausted{"feedback round limit of " + std::to_string(*cfg_.max_feedback_rounds) + " reached"};
      }

      const VcResult& failed = select_failed_vc(round.vc_results, rng_);
      round.selected = failed.vc;

      round.events.push_back("getNaturalProof");
      auto proof = ask<StructuredProof>(synth_, ctx_.prompts.render_proof_request(prog_, inv_, failed.vc),
                                        "the proof request", [](const std::string& t) { return parse_structured_proof(t); },
                                        round.proof_text, problem);
      if (!proof) {
        fail_round(round, "proof unparseable: " + problem);
        continue;
      }

      round.events.push_back("formalizeProof");
      ChatSession formalizer(Role::Formalizer);
      auto parse_formal = [&](const std::string& t) { return parse_formalized_proof(t, prog_, &*proof); };
      auto formal = ask<FormalizedProof>(formalizer, ctx_.prompts.render_formalize_request(round.proof_text),
                                         "the formalization request", parse_formal, round.formalized_text, problem);
      if (!formal) {
        fail_round(round, "formalized proof unparseable: " + problem);
        continue;
      }

      round.events.push_back("checkProof");
      check_budget("a solver batch");
      round.check_report = check_proof(*formal, prog_, failed.vc, ctx_.pool, cfg_.solver);

      round.events.push_back("getRefinedInvariants");
      PromptBundle feedback;
      if (round.check_report->errors.empty()) {
        round.used_fallback = true;
        feedback = fallback_feedback(ctx_.prompts, failed, inv_);
      } else {
        feedback = ctx_.prompts.render_feedback(*round.check_report, prog_, inv_, round.vc_results);
      }
      round.feedback_text = feedback.text;
      std::string reply;
      auto refined = ask<InvariantSet>(synth_, feedback, "the refinement request", parse_inv, reply, problem);
      if (!refined) {
        fail_round(round, "refined invariants unparseable: " + problem);
        continue;
      }
      round.refined = *refined;
      inv_ = *refined;
      finish_round();
    }
  }

  void fail_round(RoundRecord& round, std::string why) {
    round.failed = true;
    if (!round.failure.empty()) round.failure += "; ";
    round.failure += why;
    finish_round();
  }

  const Program& prog_;
  const std::string& source_;
  const RunConfig& cfg_;
  RunContext ctx_;
  std::mt19937_64 rng_;
  std::chrono::steady_clock::time_point start_;
  ChatSession synth_;
  InvariantSet inv_;
  RunReport report_;
  TokenCount accounted_;
};

}  // namespace

RunReport run_synthesis(const Program& prog, const std::string& source, const RunConfig& cfg, RunContext ctx) {
  if (cfg.wall_clock_budget <= 0 || cfg.token_budget <= 0) throw std::invalid_argument("budgets must be positive");
  return Run(prog, source, cfg, ctx).execute();
}

json to_json(const RunReport& r) {
  json j;
  j["format"] = "loopinv-run-report";
  j["version"] = RunReport::kVersion;
  j["program"] = r.program;
  j["seed"] = r.seed;
  j["outcome"] = outcome_name(r.outcome);
  j["classification"] = classification_name(r.classification);
  j["feedback_rounds"] = r.feedback_rounds();
  j["tokens"] = tokens_json(r.tokens);
  j["elapsed_s"] = r.elapsed;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  j["initial_invariants"] = r.initial_invariants ? inv_json(*r.initial_invariants) : json(nullptr);
  j["final_invariants"] = r.final_invariants ? inv_json(*r.final_invariants) : json(nullptr);
  json rounds = json::array();
  for (const auto& rd : r.rounds) {
    json x;
    x["index"] = rd.index;
    x["events"] = rd.events;
    x["invariants"] = inv_json(rd.invariants);
    json results = json::array();
    for (const auto& v : rd.vc_results) results.push_back(result_json(v));
    x["vc_results"] = results;
    if (rd.selected) x["selected_vc"] = vc_json(*rd.selected);
    if (!rd.proof_text.empty()) x["proof"] = rd.proof_text;
    if (!rd.formalized_text.empty()) x["formalized_proof"] = rd.formalized_text;
    if (rd.check_report) x["check_report"] = report_json(*rd.check_report);
    if (!rd.feedback_text.empty()) {
      x["feedback"] = rd.feedback_text;
      x["fallback_feedback"] = rd.used_fallback;
    }
    if (rd.refined) x["refined_invariants"] = inv_json(*rd.refined);
    if (rd.failed || !rd.failure.empty()) {
      x["failed"] = rd.failed;
      x["failure"] = rd.failure;
    }
    x["tokens"] = tokens_json(rd.tokens);
    x["elapsed_s"] = rd.elapsed;
    rounds.push_back(std::move(x));
  }
  j["rounds"] = rounds;
  return j;
}

std::string to_json_text(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

}  // namespace loopinv
