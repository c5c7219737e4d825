#include <benchmark/benchmark.h>

#include "mlseq/generate.hpp"
#include "mlseq/policies.hpp"

using namespace mlseq;

namespace {

const TransitionModel& bench_chain() {
    static const TransitionModel model = generate_chain(GenSpec{100, 5, 7, true});
    return model;
}

const DecodeEngine& bench_engine() {
    static const DecodeEngine engine(bench_chain(), 100);
    return engine;
}

}  // namespace

static void BM_GenerateChain(benchmark::State& state) {
    const auto states = static_cast<std::uint32_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto m = generate_chain(GenSpec{states, states / 20, seed++, true});
        benchmark::DoNotOptimize(m);
    }
}
BENCHMARK(BM_GenerateChain)->Arg(100)->Arg(1000);

static void BM_EngineBuild(benchmark::State& state) {
    for (auto _ : state) {
        DecodeEngine engine(bench_chain(), 100);
        benchmark::DoNotOptimize(engine);
    }
}
BENCHMARK(BM_EngineBuild);

static void BM_OptimalTables(benchmark::State& state) {
    for (auto _ : state) {
        auto table = optimal_tables(bench_chain(), 100);
        benchmark::DoNotOptimize(table);
    }
}
BENCHMARK(BM_OptimalTables);

static void BM_GreedyDecode(benchmark::State& state) {
    const auto& engine = bench_engine();
    StateId x = 0;
    for (auto _ : state) {
        auto traj = engine.greedy(x);
        benchmark::DoNotOptimize(traj);
        x = (x + 1) % 100;
    }
}
BENCHMARK(BM_GreedyDecode);

static void BM_RolloutDecode(benchmark::State& state) {
    const auto& engine = bench_engine();
    RolloutSpec spec;
    spec.lookahead = static_cast<std::uint32_t>(state.range(0));
    StateId x = 0;
    for (auto _ : state) {
        auto traj = engine.rollout(x, spec);
        benchmark::DoNotOptimize(traj);
        x = (x + 1) % 100;
    }
}
BENCHMARK(BM_RolloutDecode)->DenseRange(1, 5);

static void BM_TruncatedRollout(benchmark::State& state) {
    const auto& engine = bench_engine();
    RolloutSpec spec;
    spec.lookahead = static_cast<std::uint32_t>(state.range(0));
    spec.truncation = 10;
    StateId x = 0;
    for (auto _ : state) {
        auto traj = engine.rollout(x, spec);
        benchmark::DoNotOptimize(traj);
        x = (x + 1) % 100;
    }
}
BENCHMARK(BM_TruncatedRollout)->DenseRange(1, 5);

static void BM_DoubleRollout(benchmark::State& state) {
    const auto& engine = bench_engine();
    RolloutSpec spec;
    spec.level = 1;
    StateId x = 0;
    for (auto _ : state) {
        auto traj = engine.rollout(x, spec);
        benchmark::DoNotOptimize(traj);
        x = (x + 1) % 100;
    }
}
BENCHMARK(BM_DoubleRollout);

BENCHMARK_MAIN();
