// OpenMP oracle kernels against their serial references.
// Run with OMP_NUM_THREADS to vary the parallel side.

#include <benchmark/benchmark.h>

#include "loopinv/oracle.h"
#include "loopinv/parser.h"

using namespace loopinv;

namespace {

const Expr kHyp = parse_formula("x + 2 * y - z >= -3 && x - y <= 4 && (w < 2 || z != x)");
const Expr kGoal = parse_formula("3 * x - y + w != 40");
const std::set<std::string> kVars = {"w", "x", "y", "z"};

const char* const kProgram = R"(extern int unknown();
int main() {
    int x, y, z;
    while (unknown()) {
        if (x < y) {
            x = x + 1;
            z = unknown();
        } else {
            y = y + z;
        }
    }
    assert(x + y >= -100);
    return 0;
}
)";

void BM_Validity(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const std::int64_t bound = state.range(1);
  for (auto _ : state) {
    OracleResult r = parallel ? brute_force_validity(kHyp, kGoal, kVars, bound)
                              : brute_force_validity_serial(kHyp, kGoal, kVars, bound);
    benchmark::DoNotOptimize(r.points);
    state.counters["points"] = static_cast<double>(r.points);
  }
  state.SetLabel(parallel ? "openmp" : "serial");
}
BENCHMARK(BM_Validity)->ArgsProduct({{0, 1}, {8, 16}})->Unit(benchmark::kMillisecond);

void BM_Interpreter(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  static const Program prog = parse_program(kProgram, "bench");
  InterpConfig cfg;
  cfg.bound = state.range(1);
  cfg.max_iterations = 6;
  for (auto _ : state) {
    InterpResult r = parallel ? find_violation(prog, cfg) : find_violation_serial(prog, cfg);
    benchmark::DoNotOptimize(r.exits);
  }
  state.SetLabel(parallel ? "openmp" : "serial");
}
BENCHMARK(BM_Interpreter)->ArgsProduct({{0, 1}, {2, 3}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
