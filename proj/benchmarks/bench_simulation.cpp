#include <benchmark/benchmark.h>

#include "riskquant/gaussian_toy.hpp"
#include "riskquant/market.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

namespace {

void bm_toy_generate(benchmark::State& state) {
    Rng rng(7);
    GaussianToySpec spec = toy_spec_sample(static_cast<int>(state.range(0)), rng);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(toy_generate(spec, 1 << 14, seed++, true));
    }
    state.SetItemsProcessed(state.iterations() * (1 << 14));
}

void bm_simulate_paths(benchmark::State& state) {
    MarketConfig cfg;
    cfg.n_swaps = 20;
    cfg.steps = 40;
    cfg.seed = 3;
    SwapBook book = SwapBook::sample(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_paths(cfg, book, state.range(0)));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.steps);
}

}  // namespace

BENCHMARK(bm_toy_generate)->Arg(5)->Arg(25);
BENCHMARK(bm_simulate_paths)->Arg(1024)->Arg(4096);
