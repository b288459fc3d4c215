#include "loopinv/smt.h"

#include "loopinv/oracle.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "util/subprocess.h"

namespace loopinv {

namespace {

std::string quote(const std::string& name) { return "|" + name + "|"; }

std::string lit(std::int64_t v) {
  if (v >= 0) return std::to_string(v);
  // -INT64_MIN is not representable; print the magnitude through unsigned.
  std::uint64_t mag = static_cast<std::uint64_t>(-(v + 1)) + 1;
  return "(- " + std::to_string(mag) + ")";
}

std::string cdiv(const std::string& a, const std::string& b) {
  return "(ite (>= " + a + " 0) (div " + a + " " + b + ") (- (div (- " + a + ") " + b + ")))";
}

void emit(const Expr& e, std::string& out) {
  // Variable-free integer terms become numerals; linear logics reject `(div x (- 0 3))`.
  if ((e.kind() == Expr::Kind::Unary || e.kind() == Expr::Kind::Binary) && e.type() == Type::Int &&
      free_vars(e).empty()) {
    try {
      out += lit(evaluate(e, {}));
      return;
    } catch (const EvalError&) {
    }
  }
  switch (e.kind()) {
    case Expr::Kind::IntLit:
      out += lit(e.int_value());
      return;
    case Expr::Kind::BoolLit:
      out += e.bool_value() ? "true" : "false";
      return;
    case Expr::Kind::Var:
      out += quote(e.name());
      return;
    case Expr::Kind::Unary:
      out += e.unary_op() == UnOp::Neg ? "(- " : "(not ";
      emit(e.operand(), out);
      out += ")";
      return;
    case Expr::Kind::Binary: {
      std::string a;
      std::string b;
      emit(e.lhs(), a);
      emit(e.rhs(), b);
      const char* head = nullptr;
      switch (e.binary_op()) {
        case BinOp::Add: head = "+"; break;
        case BinOp::Sub: head = "-"; break;
        case BinOp::Mul: head = "*"; break;
        case BinOp::Div:
          out += cdiv(a, b);
          return;
        case BinOp::Mod:
          out += "(- " + a + " (* " + b + " " + cdiv(a, b) + "))";
          return;
        case BinOp::Lt: head = "<"; break;
        case BinOp::Le: head = "<="; break;
        case BinOp::Gt: head = ">"; break;
        case BinOp::Ge: head = ">="; break;
        case BinOp::Eq: head = "="; break;
        case BinOp::Ne:
          out += "(not (= " + a + " " + b + "))";
          return;
        case BinOp::And: head = "and"; break;
        case BinOp::Or: head = "or"; break;
        case BinOp::Implies: head = "=>"; break;
      }
      out += "(";
      out += head;
      out += " " + a + " " + b + ")";
      return;
    }
  }
}

std::string encode_body(const std::vector<Expr>& assertions, const std::set<std::string>& vars,
                        const SolverBudget& budget) {
  std::set<std::string> all = vars;
  for (const auto& a : assertions) collect_vars(a, all);
  std::string out;
  out += "(set-option :produce-models true)\n";
  const long long ms = std::max<long long>(1, std::llround(budget.per_query_timeout * 1000.0));
  out += "(set-option :timeout " + std::to_string(ms) + ")\n";
  out += "(set-logic " + select_logic(assertions, budget.logic) + ")\n";
  for (const auto& v : all) out += "(declare-const " + quote(v) + " Int)\n";
  for (const auto& a : assertions) out += "(assert " + to_smt(a) + ")\n";
  return out;
}

// ---- reply parsing ----

struct SExpr {
  std::string atom;
  std::vector<SExpr> items;
  bool is_list = false;
};

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : s_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_ws();
    while (i_ < s_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

 private:
  void skip_ws() {
    while (i_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
        ++i_;
      } else if (s_[i_] == ';') {
        while (i_ < s_.size() && s_[i_] != '\n') ++i_;
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_ws();
    if (i_ >= s_.size()) throw std::runtime_error("unexpected end of solver output");
    SExpr e;
    if (s_[i_] == '(') {
      e.is_list = true;
      ++i_;
      skip_ws();
      while (i_ < s_.size() && s_[i_] != ')') {
        e.items.push_back(read());
        skip_ws();
      }
      if (i_ >= s_.size()) throw std::runtime_error("unbalanced parentheses in solver output");
      ++i_;
      return e;
    }
    if (s_[i_] == ')') throw std::runtime_error("unexpected ')' in solver output");
    if (s_[i_] == '|') {
      std::size_t end = s_.find('|', i_ + 1);
      if (end == std::string_view::npos) throw std::runtime_error("unterminated quoted symbol");
      e.atom = std::string(s_.substr(i_ + 1, end - i_ - 1));
      i_ = end + 1;
      return e;
    }
    if (s_[i_] == '"') {
      std::size_t end = i_ + 1;
      while (end < s_.size() && !(s_[end] == '"' && (end + 1 >= s_.size() || s_[end + 1] != '"'))) {
        end += s_[end] == '"' ? 2 : 1;
      }
      e.atom = std::string(s_.substr(i_ + 1, end - i_ - 1));
      i_ = std::min(end + 1, s_.size());
      return e;
    }
    std::size_t start = i_;
    while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' &&
           s_[i_] != ')') {
      ++i_;
    }
    e.atom = std::string(s_.substr(start, i_ - start));
    return e;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::optional<std::int64_t> int_value(const SExpr& e) {
  if (!e.is_list) {
    std::int64_t v = 0;
    std::istringstream is(e.atom);
    if (is >> v && is.eof()) return v;
    return std::nullopt;
  }
  if (e.items.size() == 2 && !e.items[0].is_list && e.items[0].atom == "-") {
    auto inner = int_value(e.items[1]);
    if (inner) return -*inner;
  }
  return std::nullopt;
}

void collect_defines(const SExpr& e, Assignment& out) {
  if (!e.is_list) return;
  if (e.items.size() == 5 && !e.items[0].is_list && e.items[0].atom == "define-fun" &&
      e.items[2].is_list && e.items[2].items.empty()) {
    if (auto v = int_value(e.items[4])) out[e.items[1].atom] = *v;
    return;
  }
  for (const auto& k : e.items) collect_defines(k, out);
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool looks_like_error(const std::string& out) {
  return out.find("(error") != std::string::npos || out.rfind("unsupported", 0) == 0 ||
         out.find("\nunsupported") != std::string::npos;
}

std::atomic<unsigned long> g_dump_counter{0};

void dump_script(const std::string& dir, const std::string& script) {
  std::filesystem::create_directories(dir);
  char name[32];
  std::snprintf(name, sizeof name, "q%06lu.smt2", g_dump_counter.fetch_add(1) + 1);
  std::ofstream(std::filesystem::path(dir) / name) << script;
}

}  // namespace

std::string to_smt(const Expr& e) {
  std::string out;
  emit(e, out);
  return out;
}

std::string select_logic(const std::vector<Expr>& formulas, Logic requested) {
  if (requested == Logic::LinearInts) return "QF_LIA";
  if (requested == Logic::NonlinearInts) return "QF_NIA";
  for (const auto& f : formulas) {
    if (is_nonlinear(f)) return "QF_NIA";
  }
  return "QF_LIA";
}

std::string encode_query(const std::vector<Expr>& assertions, const std::set<std::string>& vars,
                         const SolverBudget& budget) {
  return encode_body(assertions, vars, budget) + "(check-sat)\n(get-model)\n";
}

// ---- sessions ----

class SolverSession {
 public:
  explicit SolverSession(SolverConfig config) : config_(std::move(config)) {}

  QueryVerdict query(const std::vector<Expr>& assertions, const std::set<std::string>& vars,
                     const SolverBudget& budget) {
    const std::string body = encode_body(assertions, vars, budget);
    if (!config_.dump_dir.empty()) dump_script(config_.dump_dir, body + "(check-sat)\n(get-model)\n");
    std::string transcript;
    for (int attempt = 0; attempt < 2; ++attempt) {
      ensure_started();
      const std::string request = "(reset)\n" + body + "(check-sat)\n(echo \"@@sat\")\n";
      transcript += request;
      const auto deadline = std::chrono::steady_clock::now() +
                            std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                std::chrono::duration<double>(budget.per_query_timeout + config_.grace_seconds));
      std::optional<std::string> reply;
      if (proc_->write(request)) reply = proc_->read_until("@@sat", deadline);
      if (!reply) {
        const bool timed_out = std::chrono::steady_clock::now() >= deadline;
        proc_.reset();
        if (timed_out) return {VcStatus::Timeout, std::nullopt, "solver killed at hard deadline"};
        transcript += ";; solver process exited\n";
        continue;  // restart once
      }
      transcript += *reply;
      if (looks_like_error(*reply)) throw SolverProtocolError("solver rejected the query", transcript);
      const std::string answer = trim(*reply);
      if (answer == "unsat") return {VcStatus::Valid, std::nullopt, ""};
      if (answer == "sat") return {VcStatus::Invalid, read_model(assertions, vars, transcript, deadline), ""};
      if (answer == "unknown") return read_reason(transcript, deadline);
      throw SolverProtocolError("unexpected solver answer '" + answer + "'", transcript);
    }
    throw SolverProtocolError("solver process exited twice while answering", transcript);
  }

 private:
  void ensure_started() {
    if (proc_ && proc_->alive()) return;
    try {
      proc_ = std::make_unique<detail::Subprocess>(config_.path, config_.args);
    } catch (const std::exception& e) {
      throw SolverUnavailable(e.what());
    }
  }

  std::string follow_up(const std::string& command, std::string& transcript,
                        std::chrono::steady_clock::time_point deadline) {
    const std::string request = command + "\n(echo \"@@end\")\n";
    transcript += request;
    std::optional<std::string> reply;
    // The check already finished, so these answers are immediate; allow a little slack.
    const auto limit = std::max(deadline, std::chrono::steady_clock::now() + std::chrono::seconds(2));
    if (proc_->write(request)) reply = proc_->read_until("@@end", limit);
    if (!reply) {
      proc_.reset();
      throw SolverProtocolError("solver did not answer " + command, transcript);
    }
    transcript += *reply;
    return *reply;
  }

  Assignment read_model(const std::vector<Expr>& assertions, const std::set<std::string>& vars,
                        std::string& transcript, std::chrono::steady_clock::time_point deadline) {
    std::string raw = follow_up("(get-model)", transcript, deadline);
    Assignment parsed;
    try {
      for (const auto& e : SExprReader(raw).read_all()) collect_defines(e, parsed);
    } catch (const std::exception& e) {
      throw SolverProtocolError(std::string("malformed model: ") + e.what(), transcript);
    }
    std::set<std::string> all = vars;
    for (const auto& a : assertions) collect_vars(a, all);
    Assignment model;
    // Variables the solver left out of the model are unconstrained; 0 is as good as any.
    for (const auto& v : all) {
      auto it = parsed.find(v);
      model[v] = it == parsed.end() ? 0 : it->second;
    }
    return model;
  }

  QueryVerdict read_reason(std::string& transcript, std::chrono::steady_clock::time_point deadline) {
    std::string reason = trim(follow_up("(get-info :reason-unknown)", transcript, deadline));
    for (const char* t : {"canceled", "timeout", "resource", "memout"}) {
      if (reason.find(t) != std::string::npos) return {VcStatus::Timeout, std::nullopt, reason};
    }
    return {VcStatus::Unknown, std::nullopt, reason};
  }

  SolverConfig config_;
  std::unique_ptr<detail::Subprocess> proc_;
};

// ---- pool ----

SolverPool::SolverPool(SolverConfig config, std::size_t capacity)
    : config_(std::move(config)),
      capacity_(capacity ? capacity : std::max(1u, std::thread::hardware_concurrency())) {}

SolverPool::~SolverPool() = default;

SolverPool::Lease::Lease(SolverPool* pool, std::unique_ptr<SolverSession> s)
    : pool_(pool), session_(std::move(s)) {}

SolverPool::Lease::Lease(Lease&& other) noexcept
    : pool_(other.pool_), session_(std::move(other.session_)) {
  other.pool_ = nullptr;
}

SolverPool::Lease::~Lease() {
  if (pool_ && session_) pool_->release(std::move(session_));
}

SolverPool::Lease SolverPool::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !idle_.empty() || created_ < capacity_; });
  if (!idle_.empty()) {
    auto s = std::move(idle_.back());
    idle_.pop_back();
    return Lease(this, std::move(s));
  }
  ++created_;
  return Lease(this, std::make_unique<SolverSession>(config_));
}

void SolverPool::release(std::unique_ptr<SolverSession> s) {
  {
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(s));
  }
  cv_.notify_one();
}

std::string SolverPool::solver_version() const {
  std::string cmd = "'" + config_.path + "' -version 2>/dev/null";
  FILE* f = popen(cmd.c_str(), "r");
  if (!f) return "";
  char buf[256] = {0};
  std::string line;
  if (fgets(buf, sizeof buf, f)) line = trim(buf);
  pclose(f);
  return line;
}

QueryVerdict run_query(SolverSession& session, const std::vector<Expr>& assertions,
                       const std::set<std::string>& vars, const SolverBudget& budget) {
  return session.query(assertions, vars, budget);
}

QueryVerdict check_validity(SolverPool& pool, const Expr& hypothesis, const Expr& goal,
                            const std::set<std::string>& vars, const SolverBudget& budget) {
  auto lease = pool.acquire();
  return run_query(*lease, {hypothesis, mk_not(goal)}, vars, budget);
}

QueryVerdict check_entailment(SolverPool& pool, const std::vector<Expr>& conds, const Expr& p,
                              const std::set<std::string>& vars, const SolverBudget& budget) {
  std::vector<Expr> assertions = conds;
  assertions.push_back(mk_not(p));
  auto lease = pool.acquire();
  return run_query(*lease, assertions, vars, budget);
}

}  // namespace loopinv
