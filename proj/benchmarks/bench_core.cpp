#include "msdybo/dybo.hpp"
#include "msdybo/media.hpp"
#include "msdybo/msbasis.hpp"
#include "msdybo/online.hpp"
#include "msdybo/simulation.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace msdybo;

namespace {

Problem desk_problem(Index nc, Index nf)
{
    const GridPair g(nc, nf);
    CoefficientModel model(high_contrast_mean(g, 12, 4.0, 1000.0, 7), example1_fluctuations(g));
    return make_problem(g, std::move(model), 1.0, InitialCondition::Example1);
}

}  // namespace

static void BM_SolveCD(benchmark::State& state)
{
    const auto m = static_cast<Index>(state.range(0));
    std::mt19937 rng(1);
    std::normal_distribution<double> n01;
    Matrix g(m, m);
    for (Index k = 0; k < g.size(); ++k) g(k) = n01(rng);
    const Vector lambda = Vector::LinSpaced(m, 2.0, 0.1);
    for (auto _ : state) benchmark::DoNotOptimize(solve_cd(g, lambda));
}
BENCHMARK(BM_SolveCD)->Arg(4)->Arg(16);

static void BM_MomentTensors(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(GpcSpace(static_cast<int>(state.range(0)), 3));
}
BENCHMARK(BM_MomentTensors)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

static void BM_FineStiffness(benchmark::State& state)
{
    const GridPair g(10, state.range(0));
    const CellField a = high_contrast_mean(g, 12, 4.0, 1000.0, 7);
    for (auto _ : state) benchmark::DoNotOptimize(assemble_stiffness(g, a, g.interior_dofs()));
}
BENCHMARK(BM_FineStiffness)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_OfflineSpace(benchmark::State& state)
{
    const GridPair g(10, state.range(0));
    const CellField a = high_contrast_mean(g, 12, 4.0, 1000.0, 7);
    for (auto _ : state) benchmark::DoNotOptimize(build_offline_space(g, a, 4));
}
BENCHMARK(BM_OfflineSpace)->Arg(10)->Unit(benchmark::kMillisecond)->Iterations(2);

static void BM_FineDyboStep(benchmark::State& state)
{
    const Problem p = desk_problem(10, state.range(0));
    const GpcSpace gpc(3, 2);
    RunSettings s;
    s.space = SpaceKind::Fine;
    Simulation sim(p, gpc, s);
    for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_FineDyboStep)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_MultiscaleStep(benchmark::State& state)
{
    const Problem p = desk_problem(10, 10);
    const GpcSpace gpc(3, 2);
    RunSettings s;
    s.space = SpaceKind::Multiscale;
    s.online = state.range(0) != 0;
    s.enrichment.max_rounds = 2;
    Simulation sim(p, gpc, s);
    for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_MultiscaleStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Enrichment(benchmark::State& state)
{
    const Problem p = desk_problem(10, 10);
    const FineOperators fine = fine_operators(p.grid, p.model, p.source);
    const OfflineSpace off = build_offline_space(p.grid, p.model.mean(), 4);
    const SparseMatrix system = fine.stiffness + 1e3 * fine.mass;
    const OnlineContext ctx(p.grid, p.model.mean());
    const Matrix rhs = fine.load + 1e3 * (fine.mass * Vector::Ones(fine.size()));
    EnrichmentOptions opt;
    opt.max_rounds = static_cast<int>(state.range(0));
    opt.theta = 0.0;
    for (auto _ : state) {
        EnrichedSpace space(off.prolongation, system);
        benchmark::DoNotOptimize(enrich(space, ctx, system, rhs, opt));
    }
}
BENCHMARK(BM_Enrichment)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
