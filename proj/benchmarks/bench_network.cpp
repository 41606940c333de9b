#include <benchmark/benchmark.h>

#include "riskquant/nn.hpp"
#include "riskquant/rng.hpp"

using namespace riskquant;

namespace {

nn::Network make_net(int d, int out) {
    Rng rng(1);
    return nn::Network::glorot(nn::make_mlp_arch(d, out, 3, 2 * d), rng);
}

Eigen::MatrixXd make_batch(Eigen::Index rows, int d) {
    Rng rng(2);
    Eigen::MatrixXd x(rows, d);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    }
    return x;
}

void bm_forward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    nn::Network net = make_net(d, 1);
    Eigen::MatrixXd x = make_batch(4096, d);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward(x));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}

void bm_forward_backward(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    nn::Network net = make_net(d, 1);
    Eigen::MatrixXd x = make_batch(4096, d);
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Constant(4096, 1, 1.0 / 4096.0);
    for (auto _ : state) {
        nn::ForwardCache cache;
        net.forward(x, cache);
        benchmark::DoNotOptimize(net.backward(cache, d_out));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}

void bm_forward_with_tangent(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    nn::Network net = make_net(d, 1);
    Eigen::MatrixXd x = make_batch(4096, d);
    Eigen::MatrixXd tangent;
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.forward_with_alpha_tangent(x, tangent));
    }
    state.SetItemsProcessed(state.iterations() * 4096);
}

}  // namespace

BENCHMARK(bm_forward)->Arg(5)->Arg(10)->Arg(25);
BENCHMARK(bm_forward_backward)->Arg(5)->Arg(10)->Arg(25);
BENCHMARK(bm_forward_with_tangent)->Arg(6)->Arg(11)->Arg(26);
