#include "loopinv/bench.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "loopinv/parser.h"
#include "loopinv/printer.h"

namespace loopinv {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::set<std::string> clause_set(const InvariantSet& inv) {
  std::set<std::string> out;
  for (const auto& item : inv.items) {
    for (const auto& c : split_conjuncts(item.formula)) out.insert(normalize_clause(c));
  }
  return out;
}

Ratio jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return Ratio(1);
  std::int64_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  const std::int64_t uni = static_cast<std::int64_t>(a.size() + b.size()) - inter;
  return Ratio(inter, uni);
}

Ratio jaccard(const InvariantSet& a, const InvariantSet& b) { return jaccard(clause_set(a), clause_set(b)); }

Ratio RefinementScore::rate() const { return iterations == 0 ? Ratio(0) : Ratio(successes, iterations); }

RefinementScore refinement_success_rate(const std::vector<RunReport>& reports,
                                        const std::map<std::string, InvariantSet>& gold) {
  RefinementScore s;
  for (const auto& r : reports) {
    auto g = gold.find(r.program);
    bool any = false;
    for (const auto& round : r.rounds) {
      if (!round.refined) continue;
      any = true;
      if (g == gold.end()) continue;
      const auto gs = clause_set(g->second);
      ++s.iterations;
      if (jaccard(clause_set(*round.refined), gs) > jaccard(clause_set(round.invariants), gs)) ++s.successes;
    }
    if (any && g == gold.end() &&
        std::find(s.excluded.begin(), s.excluded.end(), r.program) == s.excluded.end()) {
      s.excluded.push_back(r.program);
    }
  }
  return s;
}

Ratio CorpusResult::success_rate() const { return total_runs == 0 ? Ratio(0) : Ratio(successful_runs, total_runs); }

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double to_double(const Ratio& r) { return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator()); }

std::string ratio_text(const Ratio& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string fixed(double v, int digits) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(digits) << v;
  return o.str();
}

}  // namespace

void aggregate(CorpusResult& result, const std::map<std::string, InvariantSet>& gold) {
  result.total_runs = result.successful_runs = result.solved_count = 0;
  result.direct_successes = result.feedback_successes = 0;
  double tin = 0, tout = 0, time = 0;
  std::vector<RunReport> all;
  for (const auto& p : result.programs) {
    bool solved = false;
    for (const auto& r : p.runs) {
      ++result.total_runs;
      all.push_back(r);
      if (r.outcome != Outcome::Solved) continue;
      solved = true;
      ++result.successful_runs;
      if (r.classification == Classification::DirectSuccess) ++result.direct_successes;
      if (r.classification == Classification::FeedbackDrivenSuccess) ++result.feedback_successes;
      tin += static_cast<double>(r.tokens.input);
      tout += static_cast<double>(r.tokens.output);
      time += r.elapsed;
    }
    result.solved_count += solved;
  }
  const double n = static_cast<double>(result.successful_runs);
  result.mean_tokens_in_on_success = n > 0 ? tin / n : 0;
  result.mean_tokens_out_on_success = n > 0 ? tout / n : 0;
  result.mean_time_on_success = n > 0 ? time / n : 0;
  result.refinement = refinement_success_rate(all, gold);
}

CorpusResult run_corpus(const std::string& dir, const CorpusOptions& opt) {
  if (!opt.backend) throw std::invalid_argument("run_corpus needs a backend factory");
  if (opt.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  CorpusResult result;

  struct Entry {
    std::string name;
    std::string path;
    std::string source;
    Program prog;
  };
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".c") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Entry> entries;
  std::map<std::string, InvariantSet> gold;
  for (const auto& f : files) {
    const std::string name = f.stem().string();
    Entry e{name, f.string(), slurp(f), {}};
    try {
      e.prog = parse_program(e.source, name);
    } catch (const ParseError& err) {
      result.unparseable[f.filename().string()] = err.what();
      continue;
    }
    fs::path gold_path = f;
    gold_path.replace_extension(".gold");
    if (fs::exists(gold_path)) {
      std::string text = slurp(gold_path);
      std::istringstream lines(text);
      std::string first;
      std::getline(lines, first);
      const std::string tag = "// provenance:";
      if (first.rfind(tag, 0) == 0) {
        auto pos = first.find_first_not_of(' ', tag.size());
        result.gold_provenance[name] = pos == std::string::npos ? "" : first.substr(pos);
      }
      if (text.find("```") == std::string::npos) text = "```\n" + text + "\n```\n";
      try {
        gold[name] = parse_invariant_block(text, e.prog);
      } catch (const ParseError& err) {
        result.unparseable[gold_path.filename().string()] = err.what();
      }
    }
    entries.push_back(std::move(e));
  }

  SolverPool pool(opt.solver, opt.solver_sessions);
  const PromptKit kit(opt.prompt_dir);
  const std::size_t jobs = entries.size() * static_cast<std::size_t>(opt.repeats);
  std::vector<RunReport> reports(jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      const Entry& e = entries[j / opt.repeats];
      RunConfig cfg = opt.run;
      cfg.rng_seed = opt.run.rng_seed + j % opt.repeats;
      try {
        Gateway gateway(opt.backend(e.path, cfg.rng_seed));
        if (!opt.record_extension.empty()) {
          const std::string out = fs::path(e.path).replace_extension(opt.record_extension).string();
          fs::remove(out);
          gateway.record_to(out);
        }
        reports[j] = run_synthesis(e.prog, e.source, cfg, {pool, gateway, kit});
      } catch (const std::exception& ex) {
        RunReport r;
        r.program = e.name;
        r.seed = cfg.rng_seed;
        r.outcome = Outcome::Error;
        r.classification = Classification::Failure;
        r.diagnostic = ex.what();
        reports[j] = std::move(r);
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(opt.workers, 1)), 1,
                                                        std::max<std::size_t>(jobs, 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_workers; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  for (std::size_t i = 0; i < entries.size(); ++i) {
    ProgramRuns p{entries[i].name, {}};
    for (int k = 0; k < opt.repeats; ++k) p.runs.push_back(std::move(reports[i * opt.repeats + k]));
    result.programs.push_back(std::move(p));
  }
  aggregate(result, gold);
  return result;
}

json summary_json(const CorpusResult& r) {
  json j;
  j["format"] = "loopinv-bench-summary";
  j["version"] = 1;
  j["programs"] = r.programs.size();
  j["total_runs"] = r.total_runs;
  j["successful_runs"] = r.successful_runs;
  j["solved_count"] = r.solved_count;
  j["success_rate"] = to_double(r.success_rate());
  j["direct_successes"] = r.direct_successes;
  j["feedback_successes"] = r.feedback_successes;
  j["mean_tokens_in_on_success"] = r.mean_tokens_in_on_success;
  j["mean_tokens_out_on_success"] = r.mean_tokens_out_on_success;
  j["mean_time_on_success_s"] = r.mean_time_on_success;
  j["refinement"] = {{"successes", r.refinement.successes},
                     {"iterations", r.refinement.iterations},
                     {"rate", ratio_text(r.refinement.rate())},
                     {"excluded_no_gold", r.refinement.excluded}};
  json runs = json::array();
  for (const auto& p : r.programs) {
    for (const auto& run : p.runs) {
      json x = {{"program", p.name},
                {"seed", run.seed},
                {"outcome", outcome_name(run.outcome)},
                {"classification", classification_name(run.classification)},
                {"feedback_rounds", run.feedback_rounds()},
                {"tokens_in", run.tokens.input},
                {"tokens_out", run.tokens.output},
                {"elapsed_s", run.elapsed}};
      if (!run.diagnostic.empty()) x["diagnostic"] = run.diagnostic;
      runs.push_back(std::move(x));
    }
  }
  j["runs"] = runs;
  j["unparseable"] = r.unparseable;
  j["gold_provenance"] = r.gold_provenance;
  return j;
}

std::string summary_table(const CorpusResult& r) {
  std::ostringstream o;
  o << std::left << std::setw(24) << "program" << std::right << std::setw(6) << "runs" << std::setw(8) << "solved"
    << std::setw(8) << "direct" << std::setw(10) << "feedback" << std::setw(10) << "tok_in" << std::setw(10)
    << "tok_out" << "\n";
  for (const auto& p : r.programs) {
    int solved = 0, direct = 0, fb = 0;
    std::int64_t tin = 0, tout = 0;
    for (const auto& run : p.runs) {
      solved += run.outcome == Outcome::Solved;
      direct += run.classification == Classification::DirectSuccess;
      fb += run.classification == Classification::FeedbackDrivenSuccess;
      tin += run.tokens.input;
      tout += run.tokens.output;
    }
    o << std::left << std::setw(24) << p.name << std::right << std::setw(6) << p.runs.size() << std::setw(8) << solved
      << std::setw(8) << direct << std::setw(10) << fb << std::setw(10) << tin << std::setw(10) << tout << "\n";
  }
  o << "\nsolved " << r.solved_count << "/" << r.programs.size() << " programs, success rate "
    << fixed(100.0 * to_double(r.success_rate()), 1) << "% (" << r.successful_runs << "/" << r.total_runs
    << " runs), direct " << r.direct_successes << ", feedback-driven " << r.feedback_successes << "\n";
  o << "refinement success " << r.refinement.successes << "/" << r.refinement.iterations << " iterations";
  if (r.refinement.iterations) o << " (" << fixed(100.0 * to_double(r.refinement.rate()), 1) << "%)";
  o << "\n";
  if (!r.unparseable.empty()) o << r.unparseable.size() << " file(s) could not be parsed\n";
  return o.str();
}

}  // namespace loopinv
