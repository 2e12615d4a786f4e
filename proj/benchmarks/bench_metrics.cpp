#include <benchmark/benchmark.h>

#include <vector>

#include "naap/metrics.hpp"
#include "naap/rng.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    naap::Rng rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform();
    return v;
}

void ViolationCounter(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> pred = random_values(n, 1);
    const std::vector<double> gt = random_values(n, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(naap::metrics::count_violations(pred, gt));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(ViolationCounter)->RangeMultiplier(4)->Range(16, 4096)->Complexity();

void ViolationCounterBruteForce(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> pred = random_values(n, 1);
    const std::vector<double> gt = random_values(n, 2);
    for (auto _ : state) {
        std::int64_t count = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if ((gt[i] - gt[j]) * (pred[i] - pred[j]) < 0.0) ++count;
        benchmark::DoNotOptimize(count);
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(ViolationCounterBruteForce)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void FullEvaluation(benchmark::State& state) {
    const std::vector<double> pred = random_values(40, 3);
    const std::vector<double> gt = random_values(40, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(naap::metrics::evaluate(pred, gt));
    }
}
BENCHMARK(FullEvaluation);

}  // namespace

BENCHMARK_MAIN();
