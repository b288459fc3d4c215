#include "loopinv/proof.h"

#include <algorithm>
#include <cctype>
#include <optional>
#include <regex>

#include "loopinv/parser.h"
#include "loopinv/printer.h"

namespace loopinv {

const char* proof_diag_name(ProofDiag d) {
  switch (d) {
    case ProofDiag::MissingSection: return "missing-section";
    case ProofDiag::NonMonotoneSteps: return "non-monotone-steps";
    case ProofDiag::NoSteps: return "no-steps";
    case ProofDiag::MissingImplication: return "missing-implication";
    case ProofDiag::AmbiguousImplication: return "ambiguous-implication";
    case ProofDiag::MissingComment: return "missing-comment";
    case ProofDiag::UnboundName: return "unbound-name";
    case ProofDiag::BadFormula: return "bad-formula";
  }
  return "unknown";
}

ProofFormatError::ProofFormatError(ProofDiag code, std::string detail, int line)
    : std::runtime_error(std::string("proof error[") + proof_diag_name(code) + "]" +
                         (line > 0 ? " at line " + std::to_string(line) : std::string()) + ": " + detail),
      code_(code),
      detail_(std::move(detail)),
      line_(line) {}

const char* tag_name(ConditionTag t) {
  switch (t) {
    case ConditionTag::Initial: return "initial";
    case ConditionTag::Derived: return "derived";
    case ConditionTag::Declaration: return "declaration";
  }
  return "derived";
}

std::vector<Expr> FormalizedStep::premises() const {
  std::vector<Expr> out;
  for (const auto& c : initial) out.push_back(c.formula);
  return out;
}

namespace {

struct Line {
  int number;
  std::string text;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  int n = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back({n++, std::move(line)});
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Markdown decoration models like to add around section markers.
std::string undecorate(std::string_view s) {
  std::string t = trim(s);
  auto strip = [](char c) { return c == '*' || c == '#' || c == '_' || c == '`' || std::isspace(static_cast<unsigned char>(c)); };
  std::size_t b = 0;
  while (b < t.size() && strip(t[b])) ++b;
  std::size_t e = t.size();
  while (e > b && strip(t[e - 1])) --e;
  return t.substr(b, e - b);
}

/// If the line starts with `[name]` returns the remainder of the line.
std::optional<std::string> section_marker(const std::string& line, std::string_view name) {
  std::string t = undecorate(line);
  std::string marker = "[" + std::string(name) + "]";
  if (t.size() < marker.size()) return std::nullopt;
  for (std::size_t i = 0; i < marker.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(t[i])) != std::tolower(static_cast<unsigned char>(marker[i]))) {
      return std::nullopt;
    }
  }
  std::string rest = trim(std::string_view(t).substr(marker.size()));
  if (!rest.empty() && rest.front() == ':') rest = trim(std::string_view(rest).substr(1));
  return rest;
}

struct StepLabel {
  int number;
  std::string label;
};

std::optional<StepLabel> step_label(const std::string& line) {
  static const std::regex kStep(R"(^\s*[*#_\s]*\[\s*STEP\s+(\d+)\s*:?\s*([^\]]*)\])", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(line, m, kStep)) return std::nullopt;
  int n = std::stoi(m[1].str());
  std::string name = trim(m[2].str());
  return StepLabel{n, "STEP " + std::to_string(n) + (name.empty() ? "" : ": " + name)};
}

bool is_fence(const std::string& line) { return trim(line).rfind("```", 0) == 0; }

std::string join(const std::vector<std::string>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out += lines[i];
  }
  return out;
}

/// Trims leading and trailing blank lines.
std::string strip_blank_lines(const std::vector<std::string>& lines) {
  std::size_t b = 0;
  std::size_t e = lines.size();
  while (b < e && trim(lines[b]).empty()) ++b;
  while (e > b && trim(lines[e - 1]).empty()) --e;
  return join(std::vector<std::string>(lines.begin() + static_cast<long>(b), lines.begin() + static_cast<long>(e)));
}

}  // namespace

StructuredProof parse_structured_proof(std::string_view text) {
  enum class Phase { Before, Initial, Proof, Conclusion };
  Phase phase = Phase::Before;
  StructuredProof out;
  std::vector<std::string> preamble;
  std::vector<std::string> body;
  std::vector<std::string> conclusion;
  int last_number = 0;

  auto flush_step = [&] {
    if (!out.steps.empty()) out.steps.back().body = strip_blank_lines(body);
    body.clear();
  };

  for (const auto& line : split_lines(text)) {
    if (phase == Phase::Before) {
      if (auto rest = section_marker(line.text, "Initial")) {
        phase = Phase::Initial;
        if (!rest->empty()) out.initial.push_back(*rest);
      }
      continue;
    }
    if (phase == Phase::Initial) {
      if (auto rest = section_marker(line.text, "Proof")) {
        phase = Phase::Proof;
        if (!rest->empty()) preamble.push_back(*rest);
        continue;
      }
      std::string t = trim(line.text);
      if (!t.empty() && !is_fence(t)) out.initial.push_back(t);
      continue;
    }
    if (phase == Phase::Proof) {
      if (auto rest = section_marker(line.text, "Conclusion")) {
        flush_step();
        phase = Phase::Conclusion;
        if (!rest->empty()) conclusion.push_back(*rest);
        continue;
      }
      if (auto label = step_label(line.text)) {
        if (label->number <= last_number || (last_number == 0 && label->number != 1)) {
          throw ProofFormatError(ProofDiag::NonMonotoneSteps,
                                 "step " + std::to_string(label->number) + " follows step " +
                                     std::to_string(last_number),
                                 line.number);
        }
        flush_step();
        last_number = label->number;
        out.steps.push_back({label->number, label->label, ""});
        continue;
      }
      (out.steps.empty() ? preamble : body).push_back(line.text);
      continue;
    }
    conclusion.push_back(line.text);
  }

  if (phase == Phase::Before) throw ProofFormatError(ProofDiag::MissingSection, "Initial");
  if (phase == Phase::Initial) throw ProofFormatError(ProofDiag::MissingSection, "Proof");
  if (phase == Phase::Proof) throw ProofFormatError(ProofDiag::MissingSection, "Conclusion");
  if (out.steps.empty()) throw ProofFormatError(ProofDiag::NoSteps, "the [Proof] section has no [STEP N: ...] labels");
  out.preamble = strip_blank_lines(preamble);
  // A closing fence belongs to the reply, not to the conclusion.
  while (!conclusion.empty() && (trim(conclusion.back()).empty() || is_fence(conclusion.back()))) conclusion.pop_back();
  out.conclusion = strip_blank_lines(conclusion);
  return out;
}

namespace {

struct RawStep {
  std::optional<StepLabel> label;
  int label_line = 0;
  bool has_initial = false;
  bool has_proof = false;
  bool has_conclusion = false;
  std::vector<Line> initial;
  std::vector<Line> proof;
  std::vector<Line> conclusion;
};

/// Splits `expr // comment`. Returns nullopt when there is no comment.
std::optional<std::pair<std::string, std::string>> split_comment(const std::string& line) {
  std::size_t pos = line.find("//");
  if (pos == std::string::npos) return std::nullopt;
  return std::make_pair(trim(std::string_view(line).substr(0, pos)), trim(std::string_view(line).substr(pos + 2)));
}

/// Offsets of `==>` outside parentheses.
std::vector<std::size_t> top_level_arrows(const std::string& s) {
  std::vector<std::size_t> out;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth == 0 && s.compare(i, 3, "==>") == 0) {
      out.push_back(i);
      i += 2;
    }
  }
  return out;
}

ConditionTag classify(const std::string& comment) {
  std::string w;
  for (char c : comment) {
    if (std::isalpha(static_cast<unsigned char>(c))) w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (w == "initial") return ConditionTag::Initial;
  if (w == "declaration") return ConditionTag::Declaration;
  return ConditionTag::Derived;
}

/// A null scope skips the unbound-name check.
Expr formula(const std::string& text, const std::set<std::string>* scope, int line) {
  if (text.empty()) throw ProofFormatError(ProofDiag::BadFormula, "empty formula", line);
  try {
    return parse_formula(text, scope);
  } catch (const ParseError& e) {
    if (e.code() == DiagCode::UndeclaredVariable) throw ProofFormatError(ProofDiag::UnboundName, e.detail(), line);
    throw ProofFormatError(ProofDiag::BadFormula, e.detail() + " in '" + text + "'", line);
  }
}

FormalizedStep build_step(const RawStep& raw, const Program& prog) {
  if (!raw.has_proof) throw ProofFormatError(ProofDiag::MissingSection, "Proof", raw.label_line);
  if (!raw.has_conclusion) throw ProofFormatError(ProofDiag::MissingSection, "Conclusion", raw.label_line);

  FormalizedStep step;
  if (raw.label) {
    step.label = raw.label->label;
    step.number = raw.label->number;
  }

  // Pass 1: declaration lines bind fresh names.
  std::vector<std::tuple<std::string, std::string, int>> initial;  // expr, comment, line
  for (const auto& l : raw.initial) {
    auto parts = split_comment(l.text);
    if (!parts) throw ProofFormatError(ProofDiag::MissingComment, "condition '" + trim(l.text) + "' has no // tag", l.number);
    initial.emplace_back(parts->first, parts->second, l.number);
    if (classify(parts->second) != ConditionTag::Declaration) continue;
    Expr e = formula(parts->first, nullptr, l.number);  // only its shape matters here
    if (e.kind() == Expr::Kind::Binary && e.binary_op() == BinOp::Eq && e.lhs().kind() == Expr::Kind::Var &&
        !prog.vars.count(e.lhs().name())) {
      step.declared.insert(e.lhs().name());
    }
  }
  std::set<std::string> scope = prog.vars;
  scope.insert(step.declared.begin(), step.declared.end());

  // Pass 2: everything is checked against program variables plus declarations.
  for (const auto& [text, comment, line] : initial) {
    step.initial.push_back({formula(text, &scope, line), classify(comment), comment});
  }
  for (const auto& l : raw.proof) {
    auto parts = split_comment(l.text);
    if (!parts) throw ProofFormatError(ProofDiag::MissingComment, "implication '" + trim(l.text) + "' has no // comment", l.number);
    auto arrows = top_level_arrows(parts->first);
    if (arrows.empty()) throw ProofFormatError(ProofDiag::MissingImplication, "'" + parts->first + "' has no ==>", l.number);
    if (arrows.size() > 1) {
      throw ProofFormatError(ProofDiag::AmbiguousImplication,
                             "'" + parts->first + "' has more than one top-level ==>", l.number);
    }
    const std::string& s = parts->first;
    Implication imp{formula(trim(s.substr(0, arrows[0])), &scope, l.number),
                    formula(trim(s.substr(arrows[0] + 3)), &scope, l.number), parts->second};
    step.implications.push_back(std::move(imp));
  }
  if (raw.conclusion.empty()) throw ProofFormatError(ProofDiag::BadFormula, "empty [Conclusion]", raw.label_line);
  if (raw.conclusion.size() > 1) {
    throw ProofFormatError(ProofDiag::BadFormula, "[Conclusion] must be a single line", raw.conclusion[1].number);
  }
  const Line& c = raw.conclusion.front();
  if (auto parts = split_comment(c.text)) {
    step.conclusion = formula(parts->first, &scope, c.number);
    step.conclusion_comment = parts->second;
  } else {
    step.conclusion = formula(trim(c.text), &scope, c.number);
  }
  return step;
}

}  // namespace

FormalizedProof parse_formalized_proof(std::string_view text, const Program& prog, const StructuredProof* structured) {
  enum class Section { None, Initial, Proof, Conclusion };
  std::vector<RawStep> raws;
  Section section = Section::None;

  for (const auto& line : split_lines(text)) {
    if (is_fence(line.text)) continue;
    if (auto label = step_label(line.text)) {
      raws.push_back({});
      raws.back().label = label;
      raws.back().label_line = line.number;
      section = Section::None;
      continue;
    }
    if (auto rest = section_marker(line.text, "Initial")) {
      // An [Initial] with no step open, or a second one, starts an unlabeled step.
      if (raws.empty() || raws.back().has_initial) {
        raws.push_back({});
        raws.back().label_line = line.number;
      }
      raws.back().has_initial = true;
      section = Section::Initial;
      if (!rest->empty()) raws.back().initial.push_back({line.number, *rest});
      continue;
    }
    if (raws.empty()) continue;  // chatter before the first step
    if (auto rest = section_marker(line.text, "Proof")) {
      raws.back().has_proof = true;
      section = Section::Proof;
      if (!rest->empty()) raws.back().proof.push_back({line.number, *rest});
      continue;
    }
    if (auto rest = section_marker(line.text, "Conclusion")) {
      raws.back().has_conclusion = true;
      section = Section::Conclusion;
      if (!rest->empty()) raws.back().conclusion.push_back({line.number, *rest});
      continue;
    }
    if (trim(line.text).empty()) continue;
    switch (section) {
      case Section::Initial: raws.back().initial.push_back(line); break;
      case Section::Proof: raws.back().proof.push_back(line); break;
      case Section::Conclusion: raws.back().conclusion.push_back(line); break;
      case Section::None:
        throw ProofFormatError(ProofDiag::MissingSection, "Initial", line.number);
    }
  }

  if (raws.empty()) throw ProofFormatError(ProofDiag::NoSteps, "no formalized steps found");
  FormalizedProof out;
  for (const auto& raw : raws) {
    if (!raw.has_initial) throw ProofFormatError(ProofDiag::MissingSection, "Initial", raw.label_line);
    FormalizedStep step = build_step(raw, prog);
    if (structured) {
      step.label_matched = std::any_of(structured->steps.begin(), structured->steps.end(),
                                       [&](const ProofStep& s) { return raw.label && s.number == raw.label->number; });
    }
    out.steps.push_back(std::move(step));
  }
  return out;
}

std::string to_string(const StructuredProof& p) {
  std::string out = "[Initial]\n";
  for (const auto& l : p.initial) out += l + "\n";
  out += "\n[Proof]\n";
  if (!p.preamble.empty()) out += p.preamble + "\n";
  for (const auto& s : p.steps) {
    out += "[" + s.label + "]\n";
    if (!s.body.empty()) out += s.body + "\n";
  }
  out += "\n[Conclusion]\n" + p.conclusion + "\n";
  return out;
}

namespace {

std::string side(const Expr& e) {
  if (e.kind() == Expr::Kind::Binary && e.binary_op() == BinOp::Implies && !e.parenthesized()) {
    return to_string_parenthesized(e);
  }
  return to_string(e);
}

}  // namespace

std::string to_string(const FormalizedProof& p) {
  std::string out;
  for (std::size_t i = 0; i < p.steps.size(); ++i) {
    const auto& s = p.steps[i];
    if (i) out += "\n";
    if (!s.label.empty()) out += "[" + s.label + "]\n";
    out += "[Initial]\n";
    for (const auto& c : s.initial) out += to_string(c.formula) + " // " + c.comment + "\n";
    out += "\n[Proof]\n";
    for (const auto& imp : s.implications) {
      out += side(imp.premise) + " ==> " + side(imp.conclusion) + " // " + imp.comment + "\n";
    }
    out += "\n[Conclusion]\n" + to_string(s.conclusion);
    if (!s.conclusion_comment.empty()) out += " // " + s.conclusion_comment;
    out += "\n";
  }
  return out;
}

}  // namespace loopinv
