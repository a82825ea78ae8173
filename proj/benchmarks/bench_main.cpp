#include <benchmark/benchmark.h>

#include "slabkin/collision_operator.hpp"
#include "slabkin/slab_solver.hpp"
#include "slabkin/special_functions.hpp"

using namespace slabkin;

namespace
{
std::shared_ptr<VelocityGrid const> grid(int n1, int nr)
{
    VelocityGridParams p;
    p.n_zeta1 = n1;
    p.n_zeta_r = nr;
    p.zeta_max = 5;
    p.zeta1_min = 1e-2;
    p.eps_grid = 1e-2;
    return std::make_shared<VelocityGrid const>(p);
}

void BM_E1(benchmark::State& state)
{
    double x = 1e-6;
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(exp_integral_E1(x));
        x = x < 50 ? x * 1.01 : 1e-6;
    }
}
BENCHMARK(BM_E1);

void BM_CollisionFrequency(benchmark::State& state)
{
    auto const hs = CrossSectionModel::hard_sphere();
    double c = 0;
    for (auto _ : state)
    {
        benchmark::DoNotOptimize(compute_nu(hs, c));
        c = c < 8 ? c + 0.01 : 0;
    }
}
BENCHMARK(BM_CollisionFrequency);

void BM_Assembly(benchmark::State& state)
{
    auto const g = grid(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    auto const hs = CrossSectionModel::hard_sphere();
    // The plane-integral table is built once per process; keep it out.
    CollisionKernel const warm(hs, g->zeta_max());
    for (auto _ : state)
        benchmark::DoNotOptimize(assemble_operator(hs, g));
    state.SetComplexityN(static_cast<std::int64_t>(g->size()));
}
BENCHMARK(BM_Assembly)->Args({16, 8})->Args({32, 8})->Unit(benchmark::kMillisecond);

void BM_MildStep(benchmark::State& state)
{
    auto const op = assemble_operator(CrossSectionModel::hard_sphere(), grid(32, 16));
    SlabConfig cfg;
    cfg.x_nodes = make_x_nodes(1.0, static_cast<int>(state.range(0)), 4, 12);
    cfg.min_wall_depth = 0;
    auto const bc = BoundaryData::temperature_jump();
    auto f = free_streaming(bc, op, cfg);
    for (auto _ : state)
        benchmark::DoNotOptimize(f = mild_step(f, bc, op, cfg));
}
BENCHMARK(BM_MildStep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
}  // namespace

BENCHMARK_MAIN();
