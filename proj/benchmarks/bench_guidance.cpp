#include <benchmark/benchmark.h>

#include "hill/diffcore/backward.hpp"
#include "hill/guidance/layout.hpp"
#include "hill/guidance/losses.hpp"
#include "hill/util/rng.hpp"

using namespace hill;

namespace {

void BM_HumanLoss(benchmark::State& state) {
    const auto batch = static_cast<std::size_t>(state.range(0));
    const auto classes = static_cast<int>(state.range(1));
    Rng rng(7);
    std::vector<float> xy(batch * 2);
    for (auto& v : xy) v = static_cast<float>(rng.normal());
    std::vector<int> labels(batch);
    for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
    guidance::TargetLayout layout;
    for (int c = 0; c < classes; ++c) layout.targets.push_back({c, {rng.normal(), rng.normal()}, 0.5});
    layout.derive_separations();
    const auto p = ad::Tensor<float>::parameter({batch, 2}, xy);
    for (auto _ : state) {
        const auto h = guidance::human_loss(p, labels, &layout);
        benchmark::DoNotOptimize(ad::backward(h.total).size());
    }
}
BENCHMARK(BM_HumanLoss)->Args({32, 5})->Args({64, 10})->Args({256, 10});

}  // namespace
