#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "batchlab/network.hpp"
#include "batchlab/optim.hpp"
#include "batchlab/theory.hpp"

namespace {

batchlab::Batch make_batch(std::size_t n, std::size_t d, std::size_t c) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> normal(0.0, 1.0);
    batchlab::Batch batch;
    batch.inputs = batchlab::Tensor(n, d);
    for (double& v : batch.inputs.data) v = normal(rng);
    batch.targets = batchlab::Tensor(n, c);
    std::uniform_int_distribution<std::size_t> pick(0, c - 1);
    for (std::size_t i = 0; i < n; ++i) batch.targets(i, pick(rng)) = 1.0;
    batch.sample_ids.resize(n);
    std::iota(batch.sample_ids.begin(), batch.sample_ids.end(), 0);
    return batch;
}

void BM_ForwardBackward(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    auto net = batchlab::make_network(
        16, {64, 32, 4},
        {batchlab::Activation::kRelu, batchlab::Activation::kRelu,
         batchlab::Activation::kIdentity},
        batchlab::LossKind::kSoftmaxCrossEntropy, 1);
    auto batch = make_batch(n, 16, 4);
    for (auto _ : state) {
        auto res = batchlab::backward(net, batch);
        benchmark::DoNotOptimize(res.mean_loss);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(256)->Arg(2048);

void BM_LayerLr(benchmark::State& state) {
    auto net = batchlab::make_network(
        16, {256, 4}, {batchlab::Activation::kRelu, batchlab::Activation::kIdentity},
        batchlab::LossKind::kSoftmaxCrossEntropy, 1);
    auto batch = make_batch(256, 16, 4);
    batchlab::backward(net, batch);
    batchlab::OptimizerConfig cfg;
    for (auto _ : state) {
        double eta = batchlab::mclr_layer_lr(net.layers[0], cfg);
        benchmark::DoNotOptimize(eta);
    }
}
BENCHMARK(BM_LayerLr);

void BM_McGradientMoments(benchmark::State& state) {
    std::size_t n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto m = batchlab::mc_gradient_moments(1.0, n, 10000, 7);
        benchmark::DoNotOptimize(m.abs_mean.mean);
    }
}
BENCHMARK(BM_McGradientMoments)->Arg(1)->Arg(16)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
