#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "config_file.h"
#include "loopinv/bench.h"
#include "loopinv/checker.h"
#include "loopinv/engine.h"
#include "loopinv/gateway.h"
#include "loopinv/parser.h"
#include "loopinv/printer.h"
#include "loopinv/proof.h"
#include "loopinv/vcgen.h"

namespace fs = std::filesystem;
using namespace loopinv;
using loopinv::cli::ConfigError;
using loopinv::cli::ConfigFile;

namespace {

constexpr int kUsage = 64;
constexpr int kConfig = 78;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

InvariantSet load_invariants(const std::string& path, const Program& prog) {
  std::string text = slurp(path);
  if (text.find("```") == std::string::npos) text = "```\n" + text + "\n```\n";
  return parse_invariant_block(text, prog);
}

/// Raw option values as given on the command line.
struct Flags {
  std::string config;
  bool verbose = false;
  std::optional<std::string> solver;
  std::optional<double> solver_timeout;
  std::optional<long long> solver_sessions;
  std::string dump_smt;
  std::optional<std::string> base_url, model, prompt_dir;
  std::optional<double> temperature, time_budget;
  std::optional<long long> token_budget, max_rounds, seed, jobs;
};

/// Effective settings after applying flags > environment > config file > defaults.
struct Settings {
  SolverConfig solver;
  std::size_t solver_sessions = 0;
  SolverBudget budget;
  RunConfig run;
  LiveConfig live;
  int jobs = 1;
  std::string prompt_dir;
  std::vector<std::pair<std::string, std::string>> provenance;  // key -> "value (source)"
};

template <class T>
T pick(Settings& s, const std::string& key, const std::optional<T>& flag, const std::optional<T>& env,
       const std::optional<T>& file, T fallback) {
  std::string source = "default";
  T v = fallback;
  if (flag) {
    v = *flag;
    source = "flag";
  } else if (env) {
    v = *env;
    source = "environment";
  } else if (file) {
    v = *file;
    source = "config file";
  }
  std::ostringstream shown;
  if constexpr (std::is_same_v<T, std::string>) {
    shown << (key == "api_key" && !v.empty() ? std::string("<set>") : v);
  } else {
    shown << v;
  }
  s.provenance.emplace_back(key, shown.str() + " (" + source + ")");
  return v;
}

Settings resolve(const Flags& f) {
  ConfigFile file;
  if (!f.config.empty()) file = ConfigFile::load(f.config);
  Settings s;
  const std::optional<std::string> none_s;
  std::optional<std::string> env_key;
  if (const char* k = std::getenv("LOOPINV_API_KEY"); k && *k) env_key = k;

  s.solver.path = pick<std::string>(s, "solver", f.solver, none_s, file.get("solver"), "z3");
  s.solver.dump_dir = f.dump_smt;
  s.budget.per_query_timeout = pick<double>(s, "solver_timeout", f.solver_timeout, {}, file.get_double("solver_timeout"), 5.0);
  s.solver_sessions = static_cast<std::size_t>(
      pick<long long>(s, "solver_sessions", f.solver_sessions, {}, file.get_int("solver_sessions"), 0));
  s.run.solver = s.budget;
  s.run.wall_clock_budget = pick<double>(s, "time_budget", f.time_budget, {}, file.get_double("time_budget"), 600.0);
  s.run.token_budget = pick<long long>(s, "token_budget", f.token_budget, {}, file.get_int("token_budget"), 150000);
  s.run.rng_seed = static_cast<std::uint64_t>(pick<long long>(s, "seed", f.seed, {}, file.get_int("seed"), 0));
  long long rounds = pick<long long>(s, "max_rounds", f.max_rounds, {}, file.get_int("max_rounds"), 0);
  if (rounds > 0) s.run.max_feedback_rounds = static_cast<int>(rounds);
  s.jobs = static_cast<int>(pick<long long>(s, "jobs", f.jobs, {}, file.get_int("jobs"), 1));
  s.prompt_dir = pick<std::string>(s, "prompt_dir", f.prompt_dir, none_s, file.get("prompt_dir"), "");
  s.live.base_url = pick<std::string>(s, "base_url", f.base_url, none_s, file.get("base_url"), "");
  s.live.model = pick<std::string>(s, "model", f.model, none_s, file.get("model"), "");
  s.live.api_key = pick<std::string>(s, "api_key", none_s, env_key, file.get("api_key"), "");
  double temp = pick<double>(s, "temperature", f.temperature, {}, file.get_double("temperature"), -1.0);
  if (temp >= 0) s.live.temperature = temp;

  if (s.budget.per_query_timeout <= 0) throw ConfigError("solver_timeout must be positive");
  if (s.run.wall_clock_budget <= 0) throw ConfigError("time_budget must be positive");
  if (s.run.token_budget <= 0) throw ConfigError("token_budget must be positive");
  if (s.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (f.verbose) {
    std::cerr << "effective configuration:\n";
    for (const auto& [k, v] : s.provenance) std::cerr << "  " << k << " = " << v << "\n";
  }
  return s;
}

void require_live(const Settings& s) {
  if (s.live.base_url.empty() || s.live.model.empty()) {
    throw ConfigError("live mode needs base_url and model (flags or config file)");
  }
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Config file of key = value lines")->check(CLI::ExistingFile);
  app->add_flag("-v,--verbose", f.verbose, "Print the effective configuration and where each value came from");
  app->add_option("--solver", f.solver, "SMT solver executable (default z3)");
  app->add_option("--solver-timeout", f.solver_timeout, "Per-query solver timeout in seconds (default 5)");
  app->add_option("--solver-sessions", f.solver_sessions, "Solver processes in the pool (default: hardware threads)");
  app->add_option("--dump-smt", f.dump_smt, "Write every SMT-LIB query into this directory");
}

void add_run_options(CLI::App* app, Flags& f) {
  app->add_option("--seed", f.seed, "RNG seed for failed-VC selection (default 0)");
  app->add_option("--token-budget", f.token_budget, "Token budget per run (default 150000)");
  app->add_option("--time-budget", f.time_budget, "Wall-clock budget per run in seconds (default 600)");
  app->add_option("--max-rounds", f.max_rounds, "Feedback round limit (default unlimited)");
  app->add_option("--prompt-dir", f.prompt_dir, "Directory whose *.txt files override the built-in prompt templates");
  app->add_option("--base-url", f.base_url, "Live mode: chat-completion endpoint base URL");
  app->add_option("--model", f.model, "Live mode: model name");
  app->add_option("--temperature", f.temperature, "Live mode: sampling temperature (provider default if unset)");
}

std::optional<VerificationCondition> find_vc(const std::vector<VerificationCondition>& vcs, const std::string& spec) {
  std::string kind = spec, target;
  if (auto colon = spec.find(':'); colon != std::string::npos) {
    kind = spec.substr(0, colon);
    target = spec.substr(colon + 1);
  }
  std::transform(kind.begin(), kind.end(), kind.begin(), ::tolower);
  for (const auto& vc : vcs) {
    std::string k = kind_name(vc.kind);
    std::transform(k.begin(), k.end(), k.begin(), ::tolower);
    if (k != kind) continue;
    if (vc.kind == VcKind::PostCondition || vc.target == target) return vc;
  }
  return std::nullopt;
}

int cmd_verify(const Flags& f, const std::string& program, const std::string& inv_path) {
  Settings s = resolve(f);
  Program prog = parse_program(slurp(program), fs::path(program).stem().string());
  InvariantSet inv = load_invariants(inv_path, prog);
  SolverPool pool(s.solver, s.solver_sessions);
  auto results = check_vcs(generate_vcs(prog, inv), s.budget, pool);
  for (const auto& r : results) {
    std::cout << kind_name(r.vc.kind) << " " << r.vc.target << " " << status_name(r.status);
    if (r.counterexample) std::cout << "  [" << to_string(*r.counterexample) << "]";
    std::cout << "\n";
  }
  return all_valid(results) ? 0 : 1;
}

int cmd_check_proof(const Flags& f, const std::string& program, const std::string& inv_path,
                    const std::string& proof_path, const std::string& structured_path, const std::string& vc_spec) {
  Settings s = resolve(f);
  Program prog = parse_program(slurp(program), fs::path(program).stem().string());
  InvariantSet inv = load_invariants(inv_path, prog);
  auto vc = find_vc(generate_vcs(prog, inv), vc_spec);
  if (!vc) throw UsageError("no verification condition matches '" + vc_spec + "'");
  std::optional<StructuredProof> structured;
  if (!structured_path.empty()) structured = parse_structured_proof(slurp(structured_path));
  FormalizedProof fp = parse_formalized_proof(slurp(proof_path), prog, structured ? &*structured : nullptr);
  SolverPool pool(s.solver, s.solver_sessions);
  CheckReport report = check_proof(fp, prog, *vc, pool, s.budget);
  std::cout << "checked " << report.checked_implications << " implication(s) for " << kind_name(vc->kind) << " "
            << vc->target << "\n";
  for (const auto& e : report.errors) {
    std::cout << (e.step_label.empty() ? "[proof]" : "[" + e.step_label + "]") << " " << error_kind_name(e.kind)
              << (e.soft() ? " (" + std::string(status_name(e.solver_status)) + ")" : "") << ": "
              << to_string(e.formula);
    if (!e.comment.empty()) std::cout << "  // " << e.comment;
    std::cout << "\n";
  }
  if (report.errors.empty()) std::cout << "no reasoning errors found\n";
  return report.errors.empty() ? 0 : 1;
}

struct BackendChoice {
  std::string replay, scripted, record;
  bool live = false;
};

int cmd_synthesize(const Flags& f, const std::string& program, const BackendChoice& b, const std::string& report_path) {
  Settings s = resolve(f);
  const std::string source = slurp(program);
  Program prog = parse_program(source, fs::path(program).stem().string());

  std::unique_ptr<ChatBackend> backend;
  if (!b.replay.empty()) {
    backend = make_replay_backend(load_transcript(b.replay));
  } else if (!b.scripted.empty()) {
    backend = make_scripted_backend(load_script(b.scripted));
  } else {
    require_live(s);
    backend = make_live_backend(s.live);
  }
  Gateway gateway(std::move(backend));
  if (!b.record.empty()) {
    fs::remove(b.record);
    gateway.record_to(b.record);
  }
  SolverPool pool(s.solver, s.solver_sessions);
  PromptKit kit(s.prompt_dir);
  RunReport report = run_synthesis(prog, source, s.run, {pool, gateway, kit});

  std::cout << "outcome: " << outcome_name(report.outcome) << "\n"
            << "classification: " << classification_name(report.classification) << "\n"
            << "feedback rounds: " << report.feedback_rounds() << "\n"
            << "tokens: " << report.tokens.input << " in, " << report.tokens.output << " out\n";
  if (!report.diagnostic.empty()) std::cout << "diagnostic: " << report.diagnostic << "\n";
  if (report.final_invariants) std::cout << to_string(*report.final_invariants);
  if (!report_path.empty()) write_file(report_path, to_json_text(report));
  return exit_code(report.outcome);
}

int cmd_bench(const Flags& f, const std::string& dir, const std::string& mode, bool record, int repeats,
              const std::string& summary_path) {
  Settings s = resolve(f);
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
  if (record && repeats != 1) throw UsageError("--record needs --repeats 1");
  if (mode == "live") require_live(s);

  CorpusOptions opt;
  opt.run = s.run;
  opt.repeats = repeats;
  opt.workers = s.jobs;
  opt.solver = s.solver;
  opt.solver_sessions = s.solver_sessions;
  opt.prompt_dir = s.prompt_dir;
  const LiveConfig live = s.live;
  opt.backend = [mode, live](const std::string& path, std::uint64_t) -> std::unique_ptr<ChatBackend> {
    fs::path p(path);
    if (mode == "replay") return make_replay_backend(load_transcript(p.replace_extension(".transcript").string()));
    if (mode == "scripted") return make_scripted_backend(load_script(p.replace_extension(".script.json").string()));
    return make_live_backend(live);
  };
  if (record) opt.record_extension = ".transcript";
  CorpusResult result = run_corpus(dir, opt);
  std::cout << summary_table(result);
  if (!summary_path.empty()) write_file(summary_path, summary_json(result).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop invariant synthesis with proof-checked feedback"};
  app.require_subcommand(1);
  app.allow_extras(false);
  Flags flags;

  std::string program, inv_path, proof_path, structured_path, vc_spec = "postcondition", report_path, summary_path;
  std::string bench_dir, mode = "replay";
  bool record = false;
  int repeats = 1;
  BackendChoice backend;

  auto* verify = app.add_subcommand("verify", "Check invariants against a program; one line per verification condition");
  verify->add_option("program", program, "Program file")->required()->check(CLI::ExistingFile);
  verify->add_option("--invariants,-i", inv_path, "Invariant file (annotation block or fenced assert lines)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(verify, flags);

  auto* check = app.add_subcommand("check-proof", "Check a formalized proof of one verification condition");
  check->add_option("program", program, "Program file")->required()->check(CLI::ExistingFile);
  check->add_option("--invariants,-i", inv_path, "Invariant file")->required()->check(CLI::ExistingFile);
  check->add_option("--proof,-p", proof_path, "Formalized proof file")->required()->check(CLI::ExistingFile);
  check->add_option("--structured", structured_path, "Natural-language proof, used to match step labels")
      ->check(CLI::ExistingFile);
  check->add_option("--vc", vc_spec, "postcondition, establishment:<id> or preservation:<id> (default postcondition)");
  add_common(check, flags);

  auto* synth = app.add_subcommand("synthesize", "Run the refinement loop on one program");
  synth->add_option("program", program, "Program file")->required()->check(CLI::ExistingFile);
  auto* o_replay = synth->add_option("--replay", backend.replay, "Answer from a recorded transcript")
                       ->check(CLI::ExistingFile);
  auto* o_script = synth->add_option("--scripted", backend.scripted, "Answer from a JSON script of responses")
                       ->check(CLI::ExistingFile);
  auto* o_live = synth->add_flag("--live", backend.live, "Query the configured provider");
  o_replay->excludes(o_script)->excludes(o_live);
  o_script->excludes(o_live);
  synth->add_option("--record", backend.record, "Write every exchange to this transcript file");
  synth->add_option("--report", report_path, "Write the run report JSON here");
  add_common(synth, flags);
  add_run_options(synth, flags);

  auto* bench = app.add_subcommand("bench", "Run every program in a corpus directory");
  bench->add_option("dir", bench_dir, "Corpus directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("--backend", mode, "replay (sibling .transcript), scripted (sibling .script.json) or live")
      ->check(CLI::IsMember({"replay", "scripted", "live"}));
  bench->add_flag("--record", record, "Write a sibling .transcript per program");
  bench->add_option("--repeats", repeats, "Runs per program, seeds seed..seed+repeats-1 (default 1)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--jobs,-j", flags.jobs, "Programs run in parallel (default 1)");
  bench->add_option("--summary", summary_path, "Write the summary JSON here");
  add_common(bench, flags);
  add_run_options(bench, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*verify) return cmd_verify(flags, program, inv_path);
    if (*check) return cmd_check_proof(flags, program, inv_path, proof_path, structured_path, vc_spec);
    if (*synth) {
      if (backend.replay.empty() && backend.scripted.empty() && !backend.live) {
        std::cerr << "synthesize: choose one of --replay, --scripted, --live\n\n" << synth->help();
        return kUsage;
      }
      return cmd_synthesize(flags, program, backend, report_path);
    }
    if (*bench) return cmd_bench(flags, bench_dir, mode, record, repeats, summary_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const ProofFormatError& e) {
    std::cerr << "proof format error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return kUsage;
}
