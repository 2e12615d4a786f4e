#include <benchmark/benchmark.h>

#include "naap/featsel.hpp"
#include "naap/rng.hpp"

namespace {

/// Cost is a hash of the mask: measures pure search overhead (queue churn,
/// pruning, trace bookkeeping) without any model fitting.
naap::featsel::Evaluator hashed_evaluator() {
    return [](const naap::featsel::FeatureMask& mask) {
        naap::metrics::EvalResult r;
        r.mae = static_cast<double>(naap::splitmix64(mask.bits()) >> 11) * 0x1.0p-53;
        r.n_test = 40;
        r.cost = r.mae;
        return r;
    };
}

naap::featsel::Evaluator tie_heavy_evaluator() {
    return [](const naap::featsel::FeatureMask& mask) {
        naap::metrics::EvalResult r;
        r.mae = 0.01 * static_cast<double>(naap::splitmix64(mask.bits()) % 3);
        r.n_test = 40;
        r.cost = r.mae;
        return r;
    };
}

void HillClimbOverhead(benchmark::State& state) {
    const int n_features = static_cast<int>(state.range(0));
    naap::featsel::SearchConfig config;
    config.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            naap::featsel::hill_climb(hashed_evaluator(), n_features, config));
    }
}
BENCHMARK(HillClimbOverhead)->Arg(8)->Arg(17)->Arg(26)->Arg(35);

void HillClimbWithPruning(benchmark::State& state) {
    naap::featsel::SearchConfig config;
    config.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(naap::featsel::hill_climb(tie_heavy_evaluator(), 35, config));
    }
}
BENCHMARK(HillClimbWithPruning);

void ExhaustiveEnumeration(benchmark::State& state) {
    const int n_features = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            naap::featsel::exhaustive_search(hashed_evaluator(), n_features));
    }
}
BENCHMARK(ExhaustiveEnumeration)->Arg(8)->Arg(12)->Arg(16);

}  // namespace

BENCHMARK_MAIN();
