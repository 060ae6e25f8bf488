#include "ama/analyzer.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_AnalyzeSample(benchmark::State& state)
{
    const ama::WorldConfig world;
    ama::Rng rng(3);
    const ama::FamilySpec family = ama::generate_family(rng, world);
    const ama::MalwareSample sample = ama::instantiate_sample(family, rng, world);
    ama::AnalyzerConfig c;
    c.max_actions = static_cast<std::uint32_t>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        c.seed = seed++;
        benchmark::DoNotOptimize(ama::analyze_sample(sample, c));
    }
}
BENCHMARK(BM_AnalyzeSample)->Arg(7)->Arg(12)->Arg(50);

} // namespace
