#include <benchmark/benchmark.h>

#include "sim.hpp"
#include "znib/distributions.hpp"
#include "znib/fit.hpp"
#include "znib/inference.hpp"
#include "znib/likelihood.hpp"

using namespace znib;

namespace {

Dataset gender() {
    const double counts[] = {215, 1485, 5331, 10649, 14959, 11929, 6678, 2092, 342};
    return Dataset::grouped_counts(8, counts);
}

void BM_ZnibPmfTable(benchmark::State& state) {
    const ZnibParams x{static_cast<int>(state.range(0)), 0.37, 0.05, 0.08};
    for (auto _ : state) benchmark::DoNotOptimize(znib_pmf_table(x));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ZnibPmfTable)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void BM_ZnibbPmfTable(benchmark::State& state) {
    const ZnibbParams x{{static_cast<int>(state.range(0)), 150.0, 140.0}, 0.0006, 0.001};
    for (auto _ : state) benchmark::DoNotOptimize(znibb_pmf_table(x));
}
BENCHMARK(BM_ZnibbPmfTable)->RangeMultiplier(4)->Range(8, 512);

void BM_PowerLinkGradient(benchmark::State& state) {
    const Dataset d = sim::power_link({0.2, 0.7, 0.1, -0.1}, static_cast<int>(state.range(0)), 5, 50, 1);
    const Likelihood lik(sim::power_spec(), d);
    const Eigen::Vector4d x(0.1, 0.5, 0.2, -0.2);
    for (auto _ : state) benchmark::DoNotOptimize(lik.gradient(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PowerLinkGradient)->Arg(500)->Arg(5000);

void BM_GenderZnibbFit(benchmark::State& state) {
    const Dataset d = gender();
    for (auto _ : state) benchmark::DoNotOptimize(fit_grouped_hurdle(d, Family::ZNIBB));
}
BENCHMARK(BM_GenderZnibbFit)->Unit(benchmark::kMillisecond);

void BM_SoftmaxEm(benchmark::State& state) {
    const Dataset d = sim::softmax({}, static_cast<int>(state.range(0)), 5, 2);
    for (auto _ : state) benchmark::DoNotOptimize(fit_em(d, sim::softmax_spec()));
}
BENCHMARK(BM_SoftmaxEm)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PowerLinkFit(benchmark::State& state) {
    const Dataset d = sim::power_link({0.2, 0.7, 0.1, -0.1}, static_cast<int>(state.range(0)), 5, 50, 3);
    for (auto _ : state) benchmark::DoNotOptimize(fit_powerlink(d, sim::power_spec()));
}
BENCHMARK(BM_PowerLinkFit)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_Bootstrap(benchmark::State& state) {
    const Dataset d = sim::power_link({0.2, 0.7, 0.1, -0.1}, 300, 5, 50, 4);
    const FitResult fit = fit_powerlink(d, sim::power_spec());
    BootstrapOptions o;
    o.column = "c";
    o.replicates = 50;
    o.threads = static_cast<unsigned>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(bootstrap_bands(fit, d, o));
}
BENCHMARK(BM_Bootstrap)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
