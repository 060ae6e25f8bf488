#include "ama/bmc_exploration.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

void BM_EpsilonBmcObserve(benchmark::State& state)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(1.0, 0.5);
    ama::EpsilonBmc c(ama::NormalGammaParams{}, ama::BetaWeight{});
    for (auto _ : state) {
        const double g = n(rng);
        c.observe(g + n(rng) * 0.1, g - 0.5, g);
        benchmark::DoNotOptimize(c.epsilon());
    }
}
BENCHMARK(BM_EpsilonBmcObserve);

void BM_BetaMixtureUpdate(benchmark::State& state)
{
    double log_ratio = -3.0;
    for (auto _ : state) {
        const auto p = ama::beta_mixture_update(ama::BetaWeight{3.0, 5.0}, log_ratio, 0.0);
        benchmark::DoNotOptimize(p);
        log_ratio = log_ratio > 3.0 ? -3.0 : log_ratio + 0.01;
    }
}
BENCHMARK(BM_BetaMixtureUpdate);

} // namespace
