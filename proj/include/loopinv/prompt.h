#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "loopinv/checker.h"
#include "loopinv/proof.h"
#include "loopinv/vcgen.h"

namespace loopinv {

enum class PromptKind { InitialSynthesis, ProofRequest, FormalizeRequest, Feedback, FormatReminder };

const char* prompt_kind_name(PromptKind k);

struct PromptBundle {
  PromptKind kind = PromptKind::InitialSynthesis;
  std::string text;
  std::map<std::string, std::string> slots;
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Substitutes `{name}` placeholders in one pass; substituted values are not
/// rescanned. Throws TemplateError when a placeholder has no slot.
std::string fill_template(const std::string& tpl, const std::map<std::string, std::string>& slots);

/// Placeholder names occurring in a template, in order of first appearance.
std::vector<std::string> placeholders(const std::string& tpl);

/// Renders the prompt templates. Templates are compiled in; a directory given
/// to the constructor overrides any template file found there.
class PromptKit {
 public:
  explicit PromptKit(std::string override_dir = "");

  const std::string& template_text(const std::string& name) const;
  std::vector<std::string> template_names() const;

  /// `source` is the program text as the user wrote it.
  PromptBundle render_initial(const std::string& source) const;
  PromptBundle render_proof_request(const Program& prog, const InvariantSet& inv,
                                    const VerificationCondition& vc) const;
  PromptBundle render_formalize_request(const StructuredProof& proof) const;
  /// Formalize request for a proof kept verbatim as the model wrote it.
  PromptBundle render_formalize_request(const std::string& proof_text) const;
  /// One paragraph per error, then the framing block, then the repair block.
  /// The sufficiency framing is used only when every Establishment and
  /// Preservation result is Valid.
  PromptBundle render_feedback(const CheckReport& report, const Program& prog, const InvariantSet& inv,
                               const std::vector<VcResult>& results) const;
  /// Coarse feedback for a proof in which no error was found.
  PromptBundle render_fallback(const VcResult& failed, const InvariantSet& inv) const;
  PromptBundle render_format_reminder(const std::string& problem) const;

 private:
  std::string render(const std::string& name, const std::map<std::string, std::string>& slots) const;
  std::string obligation(const Program& prog, const InvariantSet& inv, const VerificationCondition& vc) const;

  std::map<std::string, std::string> templates_;
};

}  // namespace loopinv
