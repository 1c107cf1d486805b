#include <benchmark/benchmark.h>

#include "hill/diffcore/backward.hpp"
#include "hill/diffcore/ops.hpp"
#include "hill/diffcore/optimizer.hpp"
#include "hill/models/backbone.hpp"
#include "hill/util/rng.hpp"

using namespace hill;

namespace {

ad::Tensor<float> random_input(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(rows * cols);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return ad::Tensor<float>::input({rows, cols}, std::move(v));
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_input(n, n, 1);
    const auto b = random_input(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b).data().data());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

// One forward, backward and Adam step of the default 16-128-64-5 backbone.
void BM_TrainStep(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto net = models::Backbone<float>::build(models::BackboneSpec::mlp({16, 128, 64}, 2, 5), 3);
    const auto x = random_input(batch, 16, 4);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % 5);
    ad::Optimizer<float> opt(ad::OptimizerConfig{});
    const auto params = net.parameters();
    for (auto _ : state) {
        const auto tap = net.forward_with_tap(x, true, 0);
        const auto loss = ad::softmax_cross_entropy(tap.logits, labels);
        opt.step(params, ad::backward(loss));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(128);

}  // namespace
