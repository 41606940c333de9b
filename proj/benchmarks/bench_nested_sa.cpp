#include <benchmark/benchmark.h>

#include "riskquant/nested_sa.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

namespace {

void bm_nested_sa_node(benchmark::State& state) {
    NestedMcConfig cfg;
    cfg.n_inner = static_cast<int>(state.range(0));
    cfg.iterations = 256;
    cfg.gamma = 1.0;
    cfg.alpha = AlphaLevel(0.95);
    std::uint64_t node = 0;
    for (auto _ : state) {
        Rng base(derive_stream(42, node++));
        InnerSampler sampler = [&base](int iteration, std::span<double> out) {
            Rng it = base.split(static_cast<std::uint64_t>(iteration));
            for (double& v : out) v = it.normal();
        };
        benchmark::DoNotOptimize(nested_var_sa(sampler, cfg, NestedInit::GaussianMoment));
    }
    state.SetItemsProcessed(state.iterations() * cfg.iterations * cfg.n_inner);
}

}  // namespace

BENCHMARK(bm_nested_sa_node)->Arg(256)->Arg(1024);
