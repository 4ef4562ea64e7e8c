#include "pmdlab/bregman.hpp"
#include "pmdlab/mdp.hpp"
#include "pmdlab/pmd.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace pmdlab;

namespace {

Vector random_row(Index n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = normal(gen);
    return x;
}

void BM_ProjectSimplex(benchmark::State &state) {
    const Vector x = random_row(state.range(0), 1);
    for (auto _ : state) benchmark::DoNotOptimize(project_simplex(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectSimplex)->RangeMultiplier(4)->Range(8, 2048)->Complexity(benchmark::oNLogN);

void BM_MirrorStep(benchmark::State &state, DivergenceSpec spec) {
    const Index n = state.range(0);
    const Vector row = Vector::Constant(n, 1.0 / static_cast<double>(n));
    const Vector g = random_row(n, 2).cwiseAbs();
    for (auto _ : state) benchmark::DoNotOptimize(mirror_step(spec, row, g));
}
BENCHMARK_CAPTURE(BM_MirrorStep, euclidean, DivergenceSpec::euclidean())->Arg(100);
BENCHMARK_CAPTURE(BM_MirrorStep, kl, DivergenceSpec::kl())->Arg(100);
BENCHMARK_CAPTURE(BM_MirrorStep, tsallis_half, DivergenceSpec::tsallis(0.5))->Arg(100);
BENCHMARK_CAPTURE(BM_MirrorStep, tsallis_two, DivergenceSpec::tsallis(2.0))->Arg(100);

void BM_EvaluateValues(benchmark::State &state) {
    const Index n = state.range(0);
    const Mdp mdp = random_mdp(3, n, 100, 0.999);
    const Policy pi = Policy::uniform(n, 100);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_values(mdp, pi));
}
BENCHMARK(BM_EvaluateValues)->Arg(20)->Arg(80);

void BM_PmdStep(benchmark::State &state, DivergenceSpec spec) {
    const Mdp mdp = random_mdp(4, 20, 100, 0.999);
    Policy pi = Policy::uniform(20, 100);
    if (spec.kind == DivergenceKind::kl) pi = pi.to_log_domain();
    for (auto _ : state) benchmark::DoNotOptimize(pmd_step(mdp, pi, spec, 1.0));
}
BENCHMARK_CAPTURE(BM_PmdStep, euclidean, DivergenceSpec::euclidean());
BENCHMARK_CAPTURE(BM_PmdStep, kl, DivergenceSpec::kl());
BENCHMARK_CAPTURE(BM_PmdStep, tsallis_two, DivergenceSpec::tsallis(2.0));

void BM_SolveOptimal(benchmark::State &state) {
    const Mdp mdp = random_mdp(5, 20, 100, 0.999);
    for (auto _ : state) benchmark::DoNotOptimize(solve_optimal(mdp));
}
BENCHMARK(BM_SolveOptimal);

} // namespace

BENCHMARK_MAIN();
