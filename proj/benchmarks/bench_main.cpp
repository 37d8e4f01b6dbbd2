#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mlshe/bridgesim.hpp"
#include "mlshe/detcalc.hpp"
#include "mlshe/diffusion.hpp"
#include "mlshe/kernels.hpp"
#include "mlshe/pdesolve.hpp"
#include "mlshe/polymer.hpp"
#include "mlshe/potential.hpp"
#include "mlshe/rng.hpp"
#include "mlshe/shelattice.hpp"

using namespace mlshe;

static void BM_Philox(benchmark::State& state) {
    std::uint32_t c = 0;
    for (auto _ : state) {
        auto r = rng::philox4x32({c++, 0, 0, 0}, {7, 11});
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_Philox);

static void BM_DiffusionStep(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto stencil = state.range(1) ? DiffusionStencil::Compact4 : DiffusionStencil::Standard2;
    const double dy = 16.0 / static_cast<double>(n - 1);
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = kernels::heat_kernel(0.5, 0.0, -8.0 + dy * static_cast<double>(j));
    const DiffusionStep step(n, dy, 1e-3, stencil);
    for (auto _ : state) {
        step.apply(u);
        benchmark::DoNotOptimize(u.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_DiffusionStep)->Args({401, 0})->Args({401, 1})->Args({1601, 1});

static void BM_SolveSmooth(benchmark::State& state) {
    GridSpec g = GridSpec::symmetric(8.0, 0.05, 1.0, static_cast<std::size_t>(state.range(0)));
    g.x_nodes = {0.0, 0.05, 0.1};
    const auto phi = PotentialField::single_bump(1.0, 0.5, 0.0, 0.2, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(pde::solve_smooth(phi, g));
}
BENCHMARK(BM_SolveSmooth)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

using detcalc::Function1D;
using detcalc::GTOptions;
using detcalc::gt_integral;
using kernels::WeylPoint;

static void BM_GTIntegral(benchmark::State& state) {
    const std::vector<Function1D> s{[](double z) { return 1.0 + 0.1 * z * z; },
                                    [](double z) { return std::exp(-0.2 * z); },
                                    [](double) { return 1.0; }};
    GTOptions o;
    o.nodes = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gt_integral(s, WeylPoint{1.0, 0.0, -1.0}, o));
}
BENCHMARK(BM_GTIntegral)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_BridgeSampler(benchmark::State& state) {
    const bridges::NonIntersectingSampler s(static_cast<int>(state.range(0)), 1.0, kernels::WeylPoint{1.0, 0.0, -1.0},
                                              kernels::WeylPoint{1.0, 0.0, -1.0}, 200);
    bridges::BridgeEnsemble e;
    std::uint64_t k = 0;
    for (auto _ : state) {
        s.draw(e, 3, 1, k++);
        benchmark::DoNotOptimize(e);
    }
}
BENCHMARK(BM_BridgeSampler)->Arg(3);

static void BM_LatticeEvolve(benchmark::State& state) {
    const GridSpec g = lattice::default_grid(0.25, 0.1, {0.0, 0.1});
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(lattice::evolve_she(lattice::NoiseField::for_grid(seed++, g), g));
}
BENCHMARK(BM_LatticeEvolve)->Unit(benchmark::kMillisecond);

static void BM_PolymerTable(benchmark::State& state) {
    const auto p = polymer::DisorderPath::sample(static_cast<std::size_t>(state.range(0)), 1000, 1.0, 4);
    for (auto _ : state) benchmark::DoNotOptimize(polymer::hierarchy_table(p, 1));
}
BENCHMARK(BM_PolymerTable)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
