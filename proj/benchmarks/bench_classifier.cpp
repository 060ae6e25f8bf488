#include "ama/evaluation.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

void BM_TrainClassifier(benchmark::State& state)
{
    const std::uint32_t classes = 20;
    const std::uint32_t per_class = 30;
    const std::size_t dim = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> centers(classes, std::vector<double>(dim));
    for (auto& c : centers) {
        for (double& v : c) {
            v = noise(rng);
        }
    }
    std::vector<ama::FeatureVector> features;
    std::vector<std::uint32_t> labels;
    for (std::uint32_t k = 0; k < classes; ++k) {
        for (std::uint32_t j = 0; j < per_class; ++j) {
            ama::FeatureVector x;
            x.dimension = dim;
            for (std::size_t d = 0; d < dim; ++d) {
                x.index.push_back(static_cast<std::uint32_t>(d));
                x.value.push_back(centers[k][d] + 0.5 * noise(rng));
            }
            features.push_back(std::move(x));
            labels.push_back(k);
        }
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            ama::train_classifier(features, labels, classes, ama::SplitSpec{}, ama::ClassifierHyper{}));
    }
}
BENCHMARK(BM_TrainClassifier)->Arg(64)->Arg(640)->Unit(benchmark::kMillisecond);

} // namespace
