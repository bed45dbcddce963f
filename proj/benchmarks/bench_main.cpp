#include <benchmark/benchmark.h>

#include "sirlt/brw.hpp"
#include "sirlt/families.hpp"
#include "sirlt/kernel.hpp"
#include "sirlt/lattice.hpp"
#include "sirlt/likelihood.hpp"
#include "sirlt/sir.hpp"

#include <cmath>

using namespace sirlt;

namespace {

void BM_StencilStep(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    BoxGrid g = BoxGrid::centered(d, static_cast<int>(state.range(1)));
    for (double& v : g.values()) v = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(stencil_step(g));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}
BENCHMARK(BM_StencilStep)->Args({2, 64})->Args({2, 512})->Args({3, 32});

void BM_KernelTable(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(KernelTable(WalkSpec(d), static_cast<int>(state.range(1))));
}
BENCHMARK(BM_KernelTable)->Args({2, 256})->Args({3, 64})->Unit(benchmark::kMillisecond);

// One replicate of the critical BRW from k particles, k steps.
void BM_BrwRun(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    const LatticeField mu = LatticeField::point(2, {0, 0, 0}, k);
    const auto law = OffspringLaw::poisson_unit();
    std::uint64_t rep = 0;
    for (auto _ : state) benchmark::DoNotOptimize(brw_evolve(mu, law, k, RngContext(1, rep++), [](int, const LatticeField&) { return true; }));
}
BENCHMARK(BM_BrwRun)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CoupledRun(benchmark::State& state) {
    const std::int64_t village = state.range(0);
    const LatticeField mu = LatticeField::point(2, {0, 0, 0}, static_cast<std::int64_t>(std::sqrt(village)));
    const int horizon = static_cast<int>(2.0 * std::sqrt(static_cast<double>(village)));
    const auto law = OffspringLaw::envelope(village);
    std::uint64_t rep = 0;
    for (auto _ : state) benchmark::DoNotOptimize(coupled_run(mu, village, 0.5, horizon, law, RngContext(2, rep++)));
}
BENCHMARK(BM_CoupledRun)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_LogLr(benchmark::State& state) {
    const std::int64_t village = state.range(0);
    const Trajectory traj = brw_run(LatticeField::point(2, {0, 0, 0}, 3), OffspringLaw::poisson_unit(), 8, RngContext(3, 0));
    for (auto _ : state) benchmark::DoNotOptimize(log_lr(traj, village, 0.5));
}
BENCHMARK(BM_LogLr)->Arg(50)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
