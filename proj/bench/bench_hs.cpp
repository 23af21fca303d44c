#include <benchmark/benchmark.h>

#include <limits>

#include "edge_ops/noise.hpp"
#include "edge_ops/slops.hpp"
#include "edge_ops/transition.hpp"

using namespace edge;

namespace {

TriangularKernel airy_kernel(double h) {
    const double Lg = 16.0;
    NoiseGrid g = sample_grid(sample_path(1, Lg, h), Lg, h);
    SolutionPair d = airy_dirichlet(g, 2.0, Lg);
    return assemble_kernel(d, airy_infty(d, g, Lg), 1.0);
}

void BM_hs_norm_linear(benchmark::State& st) {
    TriangularKernel K = airy_kernel(16.0 / static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(hs_norm(K));
    st.SetComplexityN(st.range(0));
}

void BM_hs_norm_direct(benchmark::State& st) {
    TriangularKernel K = airy_kernel(16.0 / static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(hs_norm_direct(K));
    st.SetComplexityN(st.range(0));
}

void BM_hs_norm_direct_parallel(benchmark::State& st) {
    TriangularKernel K = airy_kernel(16.0 / static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(hs_norm_direct_parallel(K));
    st.SetComplexityN(st.range(0));
}

ExperimentConfig sweep(int jobs) {
    ExperimentConfig c;
    c.replicas = 4;
    c.hw_k = 0;
    c.jobs = jobs;
    return c;
}

void BM_sweep_serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(run_coupled_sweep_serial(sweep(1)));
}

void BM_sweep_parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(run_coupled_sweep(sweep(0)));
}

}  // namespace

BENCHMARK(BM_hs_norm_linear)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity();
BENCHMARK(BM_hs_norm_direct)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity();
BENCHMARK(BM_hs_norm_direct_parallel)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity();
BENCHMARK(BM_sweep_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
