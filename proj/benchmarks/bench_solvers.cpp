#include <benchmark/benchmark.h>

#include "tic/adjoint.hpp"
#include "tic/bsde.hpp"
#include "tic/scenario.hpp"

namespace {

tic::Scenario make_bench_scenario(int n_steps) {
    tic::ScenarioConfig cfg;
    cfg.scenario = "merton_exponential";
    cfg.n_steps = n_steps;
    return tic::make_scenario(cfg);
}

void bm_brownian_ensemble(benchmark::State& state) {
    const tic::TimeGrid grid(0.0, 1.0, 100);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        tic::BrownianEnsemble ens(grid, m, 42);
        benchmark::DoNotOptimize(ens.dw(m - 1, 99));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * 100);
}
BENCHMARK(bm_brownian_ensemble)->Arg(10000)->Arg(50000);

void bm_forward_solve(benchmark::State& state) {
    const tic::Scenario sc = make_bench_scenario(100);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const tic::BrownianEnsemble ens(sc.problem.grid, m, 42);
    for (auto _ : state) {
        tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
        benchmark::DoNotOptimize(run.states.at(m - 1, 100));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * 100);
}
BENCHMARK(bm_forward_solve)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void bm_bsde_backward(benchmark::State& state) {
    const tic::Scenario sc = make_bench_scenario(100);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const tic::BrownianEnsemble ens(sc.problem.grid, m, 42);
    const tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
    for (auto _ : state) {
        tic::BsdeSolution sol =
            tic::solve_bsde_regression(sc.problem, run.controls, run.states, ens);
        benchmark::DoNotOptimize(sol.y0);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * 100);
}
BENCHMARK(bm_bsde_backward)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

void bm_kappa(benchmark::State& state) {
    const tic::Scenario sc = make_bench_scenario(100);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const tic::BrownianEnsemble ens(sc.problem.grid, m, 42);
    const tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
    const tic::BsdeSolution utility =
        tic::solve_bsde_regression(sc.problem, run.controls, run.states, ens);
    const tic::CandidateTuple tuple{&run.states, &run.controls, &utility};
    for (auto _ : state) {
        tic::KappaPath kappa = tic::compute_kappa(sc.problem, tuple, ens);
        benchmark::DoNotOptimize(kappa.min_value());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * 100);
}
BENCHMARK(bm_kappa)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

void bm_adjoints(benchmark::State& state) {
    const tic::Scenario sc = make_bench_scenario(50);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    const tic::BrownianEnsemble ens(sc.problem.grid, m, 42);
    const tic::PolicyRun run = tic::solve_state_forward(sc.problem, sc.candidate, ens);
    const tic::BsdeSolution utility =
        tic::solve_bsde_regression(sc.problem, run.controls, run.states, ens);
    const tic::CandidateTuple tuple{&run.states, &run.controls, &utility};
    for (auto _ : state) {
        tic::AdjointBundle adjoints = tic::solve_adjoints(sc.problem, tuple, ens);
        benchmark::DoNotOptimize(adjoints.p0());
    }
}
BENCHMARK(bm_adjoints)->Arg(5000)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
