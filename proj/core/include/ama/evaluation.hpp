#pragma once

// Evaluation harness: a family-structured synthetic corpus, call-graph
// featurization, a one-vs-rest linear SVM, macro-F1, and the sweep that
// reads the "optimal number of analyzer actions" off the F1-vs-budget curve.

#include "ama/analyzer.hpp"
#include "ama/call_graph.hpp"
#include "ama/malware_world.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ama {

struct CorpusConfig {
    std::uint32_t families = 20;
    std::uint32_t samples_per_family = 30;
    WorldConfig world;

    void validate() const;
};

struct Corpus {
    WorldConfig world;
    std::uint32_t family_count = 0;
    std::uint32_t samples_per_family = 0;
    std::uint64_t seed = 0;
    std::vector<FamilySpec> families;
    std::vector<MalwareSample> samples;
    /// labels[i] is the family of samples[i].
    std::vector<std::uint32_t> labels;

    bool empty() const { return samples.empty(); }
};

/// Families first, then samples family-major: sample id = family * M + j.
Corpus build_corpus(const CorpusConfig& config, std::uint64_t seed);

std::string corpus_to_json(const Corpus& corpus);
/// Throws UsageError on malformed input.
Corpus corpus_from_json(const std::string& text);

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
};

struct ClassifierHyper {
    double lambda = 1e-4;
    std::uint32_t epochs = 40;
};

/// One weight vector and bias per class, scored one-vs-rest.
struct LinearModel {
    std::uint32_t num_classes = 0;
    std::size_t dimension = 0;
    std::vector<std::vector<double>> weights;
    std::vector<double> bias;

    std::uint32_t predict(const FeatureVector& x) const;
};

struct TrainedClassifier {
    LinearModel model;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    /// predictions[k] is the predicted class of test_indices[k].
    std::vector<std::uint32_t> predictions;
    std::uint32_t epochs_run = 0;
    double final_train_hinge = 0.0;
};

/// Per class: shuffled, then round(train_fraction * n) (kept within [1, n-1]
/// when n >= 2) go to the training side.
void stratified_split(const std::vector<std::uint32_t>& labels, std::uint32_t num_classes, const SplitSpec& split,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& test);

/// Pegasos hinge-loss subgradient descent with L2 regularization, one binary
/// problem per class. Stops early once the training hinge loss is exactly 0.
TrainedClassifier train_classifier(const std::vector<FeatureVector>& features,
                                   const std::vector<std::uint32_t>& labels, std::uint32_t num_classes,
                                   const SplitSpec& split, const ClassifierHyper& hyper);

struct F1Report {
    double macro = 0.0;
    std::vector<double> per_class;
    /// False for classes absent from both predictions and labels; those are
    /// left out of the macro average.
    std::vector<bool> included;
};

F1Report macro_f1(const std::vector<std::uint32_t>& predictions, const std::vector<std::uint32_t>& labels,
                  std::uint32_t num_classes);

struct SweepConfig {
    std::uint32_t max_actions = 12;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    double train_fraction = 0.7;
    ClassifierHyper classifier;
    double plateau_tolerance = 0.01;
    std::size_t pair_dimension = kDefaultPairDimension;
    std::uint32_t workers = 1;

    void validate() const;
};

struct SweepRow {
    std::uint32_t budget = 0;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;
};

struct SweepResult {
    std::string agent;
    std::vector<std::uint64_t> seeds;
    std::vector<SweepRow> rows;
    /// per_seed_f1[s][n-1]: macro-F1 of seed s at budget n.
    std::vector<std::vector<double>> per_seed_f1;
    /// Macro-F1 at the largest budget with labels shuffled before the split, per seed.
    std::vector<double> null_f1;

    std::vector<double> mean_curve() const;
};

/// Seed of the analysis of `sample_id` under sweep seed `seed`; shared by
/// every agent so comparisons are paired.
std::uint64_t analysis_seed(std::uint64_t seed, std::uint32_t sample_id);

/// Analyzes every sample once with the largest budget and featurizes the
/// graph after each step. The run truncated at step n is exactly the run
/// with budget n, since nothing in the loop depends on the budget.
SweepResult sweep_action_budget(const Corpus& corpus, const AgentSpec& agent, const AnalyzerConfig& analyzer,
                                const SweepConfig& config);

/// Smallest budget n (1-based) with curve[n-1] >= max(curve) - tolerance.
std::uint32_t optimal_actions(const std::vector<double>& curve, double tolerance);
std::uint32_t optimal_actions(const SweepResult& sweep, double tolerance);
std::vector<std::uint32_t> optimal_actions_per_seed(const SweepResult& sweep, double tolerance);

double median(std::vector<double> values);

struct ComparisonRow {
    std::string agent;
    std::uint32_t optimal_actions = 0;
    double median_seed_optimal = 0.0;
    double seconds = 0.0;
};

ComparisonRow comparison_row(const SweepResult& sweep, double tolerance, double seconds_per_action);

struct Comparison {
    std::vector<SweepResult> sweeps;
    std::vector<ComparisonRow> rows;
};

Comparison compare_agents(const Corpus& corpus, const std::vector<AgentSpec>& agents, const AnalyzerConfig& analyzer,
                          const SweepConfig& config);

std::string sweep_csv(const SweepResult& sweep);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
std::string comparison_text(const std::vector<ComparisonRow>& rows);

} // namespace ama
