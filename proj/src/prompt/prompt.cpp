#include "loopinv/prompt.h"

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "loopinv/printer.h"

namespace loopinv {

namespace detail {
const std::map<std::string, std::string>& embedded_templates();
}

const char* prompt_kind_name(PromptKind k) {
  switch (k) {
    case PromptKind::InitialSynthesis: return "InitialSynthesis";
    case PromptKind::ProofRequest: return "ProofRequest";
    case PromptKind::FormalizeRequest: return "FormalizeRequest";
    case PromptKind::Feedback: return "Feedback";
    case PromptKind::FormatReminder: return "FormatReminder";
  }
  return "?";
}

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string paren(const Expr& e) { return to_string_parenthesized(e); }

std::string step_ref(const std::string& label) { return label.empty() ? "the proof step" : "[" + label + "]"; }

const Invariant* find_invariant(const InvariantSet& inv, const std::string& id) {
  for (const auto& i : inv.items) {
    if (i.id == id) return &i;
  }
  return nullptr;
}

}  // namespace

std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& slots) {
  std::string out;
  auto begin = std::sregex_iterator(tpl.begin(), tpl.end(), placeholder_re());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1].str();
    auto slot = slots.find(name);
    if (slot == slots.end()) throw TemplateError("no value for placeholder {" + name + "}");
    out.append(tpl, last, static_cast<std::size_t>(it->position()) - last);
    out += slot->second;
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(tpl, last, std::string::npos);
  return out;
}

std::vector<std::string> placeholders(const std::string& tpl) {
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(tpl.begin(), tpl.end(), placeholder_re()); it != std::sregex_iterator(); ++it) {
    std::string name = (*it)[1].str();
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

PromptKit::PromptKit(std::string override_dir) : templates_(detail::embedded_templates()) {
  if (override_dir.empty()) return;
  namespace fs = std::filesystem;
  if (!fs::is_directory(override_dir)) throw TemplateError("prompt directory not found: " + override_dir);
  for (const auto& entry : fs::directory_iterator(override_dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::stringstream ss;
    ss << in.rdbuf();
    templates_[entry.path().stem().string()] = ss.str();
  }
}

const std::string& PromptKit::template_text(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("unknown template '" + name + "'");
  return it->second;
}

std::vector<std::string> PromptKit::template_names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

std::string PromptKit::render(const std::string& name, const std::map<std::string, std::string>& slots) const {
  return strip_trailing_newlines(fill_template(template_text(name), slots));
}

PromptBundle PromptKit::render_initial(const std::string& source) const {
  std::map<std::string, std::string> slots{{"program", strip_trailing_newlines(source)}};
  return {PromptKind::InitialSynthesis, render("initial", slots) + "\n", slots};
}

std::string PromptKit::obligation(const Program& prog, const InvariantSet& inv, const VerificationCondition& vc) const {
  std::map<std::string, std::string> slots{{"loop_condition", paren(prog.loop_cond)},
                                           {"assertion", to_string(prog.assertion)},
                                           {"id", vc.target}};
  const Invariant* target = find_invariant(inv, vc.target);
  slots["invariant"] = target ? to_string(target->formula) : to_string(vc.goal);
  switch (vc.kind) {
    case VcKind::Establishment: return render("obligation_establishment", slots);
    case VcKind::Preservation: return render("obligation_preservation", slots);
    case VcKind::PostCondition: return render("obligation_postcondition", slots);
  }
  return "";
}

PromptBundle PromptKit::render_proof_request(const Program& prog, const InvariantSet& inv,
                                             const VerificationCondition& vc) const {
  std::map<std::string, std::string> slots{{"invariants", strip_trailing_newlines(to_string(inv))},
                                           {"obligation", obligation(prog, inv, vc)}};
  return {PromptKind::ProofRequest, render("proof_request", slots) + "\n", slots};
}

PromptBundle PromptKit::render_formalize_request(const StructuredProof& proof) const {
  return render_formalize_request(to_string(proof));
}

PromptBundle PromptKit::render_formalize_request(const std::string& proof_text) const {
  std::map<std::string, std::string> slots{{"proof", strip_trailing_newlines(proof_text)}};
  return {PromptKind::FormalizeRequest, render("formalize", slots) + "\n", slots};
}

PromptBundle PromptKit::render_feedback(const CheckReport& report, const Program& prog, const InvariantSet& inv,
                                        const std::vector<VcResult>& results) const {
  PromptBundle out;
  out.kind = PromptKind::Feedback;
  std::vector<std::string> paragraphs;
  int n = 0;
  for (const auto& err : report.errors) {
    std::map<std::string, std::string> slots{{"step", step_ref(err.step_label)}, {"comment", err.comment}};
    std::string name;
    switch (err.kind) {
      case ErrorKind::InvalidImplication:
        slots["condition"] = paren(err.formula.lhs());
        slots["conclusion"] = paren(err.formula.rhs());
        name = err.soft() ? "error_soft_implication" : "error_invalid_implication";
        break;
      case ErrorKind::UnsupportedPremise:
        slots["condition"] = paren(err.formula);
        name = err.soft() ? "error_soft_premise" : "error_unsupported_premise";
        break;
      case ErrorKind::BadInitialCondition:
        slots["condition"] = paren(err.formula);
        name = err.soft() ? "error_soft_initial" : "error_bad_initial";
        break;
    }
    paragraphs.push_back(render(name, slots));
    ++n;
    for (const auto& [k, v] : slots) out.slots["error" + std::to_string(n) + "." + k] = v;
  }

  bool sufficiency = true;
  for (const auto& r : results) {
    if (r.vc.kind != VcKind::PostCondition && r.status != VcStatus::Valid) sufficiency = false;
  }
  if (report.vc.kind != VcKind::PostCondition) sufficiency = false;

  std::map<std::string, std::string> slots{{"assertion", to_string(prog.assertion)}};
  if (sufficiency) {
    paragraphs.push_back(render("framing_sufficiency", slots));
  } else {
    slots["id"] = report.vc.target;
    const Invariant* target = find_invariant(inv, report.vc.target);
    slots["invariant"] = target ? to_string(target->formula) : to_string(report.vc.goal);
    slots["property"] = report.vc.kind == VcKind::Establishment ? "establishment" : "preservation";
    paragraphs.push_back(render("framing_failing", slots));
  }
  paragraphs.push_back(render("repair", {}));
  for (const auto& [k, v] : slots) out.slots[k] = v;

  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i) out.text += "\n\n";
    out.text += paragraphs[i];
  }
  out.text += "\n";
  return out;
}

PromptBundle PromptKit::render_fallback(const VcResult& failed, const InvariantSet& inv) const {
  std::map<std::string, std::string> slots;
  const VerificationCondition& vc = failed.vc;
  const Invariant* target = find_invariant(inv, vc.target);
  const std::string what = target ? "loop invariant " + vc.target + ": " + to_string(target->formula) : vc.target;
  switch (vc.kind) {
    case VcKind::Establishment: slots["obligation"] = "establishment of the " + what; break;
    case VcKind::Preservation: slots["obligation"] = "preservation of the " + what; break;
    case VcKind::PostCondition: slots["obligation"] = "implication of the assertion " + to_string(vc.goal); break;
  }
  std::string witness;
  if (failed.counterexample) {
    // Fresh names introduced for havoc and SSA versions mean nothing to the model.
    Assignment shown;
    for (const auto& [k, v] : *failed.counterexample) {
      if (k.find("__") == std::string::npos) shown[k] = v;
    }
    if (!shown.empty()) {
      witness = render("fallback_witness", {{"assignment", to_string(shown)}, {"goal", to_string(vc.goal)}}) + "\n";
      slots["assignment"] = to_string(shown);
    }
  }
  slots["witness"] = witness;
  std::string text = render("fallback", slots) + "\n\n" + render("repair", {}) + "\n";
  return {PromptKind::Feedback, text, slots};
}

PromptBundle PromptKit::render_format_reminder(const std::string& problem) const {
  std::map<std::string, std::string> slots{{"problem", problem}};
  return {PromptKind::FormatReminder, render("format_reminder", slots) + "\n", slots};
}

}  // namespace loopinv
