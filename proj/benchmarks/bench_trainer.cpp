#include <benchmark/benchmark.h>

#include "hill/trainer/experiment.hpp"
#include "hill/trainer/session.hpp"

using namespace hill;

namespace {

// Wall time of one guided epoch on blobs-hard after the projector is frozen.
void BM_GuidedEpoch(benchmark::State& state) {
    trainer::ExperimentOptions o;
    o.epochs = 45;
    o.pretrain = 2;
    o.interventions = "compact:0.6+sep:1.5@2";
    const auto config = trainer::make_session_config(o);
    for (auto _ : state) {
        state.PauseTiming();
        trainer::Session s(config);
        s.control(trainer::Command::resume());
        s.train_epoch();
        s.train_epoch();
        s.commit({}, "bench");
        state.ResumeTiming();
        s.train_epoch();
    }
}
BENCHMARK(BM_GuidedEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
