#include "ama/error.hpp"
#include "ama/evaluation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace ama;

namespace {

CorpusConfig small_corpus_config(std::uint32_t families = 3, std::uint32_t per_family = 8)
{
    CorpusConfig c;
    c.families = families;
    c.samples_per_family = per_family;
    return c;
}

FeatureVector dense_to_sparse(const std::vector<double>& dense)
{
    FeatureVector f;
    f.dimension = dense.size();
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            f.index.push_back(static_cast<std::uint32_t>(i));
            f.value.push_back(dense[i]);
        }
    }
    return f;
}

/// Gaussian blobs around class-specific one-hot directions.
void blobs(std::uint32_t classes, std::uint32_t per_class, double spread, std::uint64_t seed,
           std::vector<FeatureVector>& features, std::vector<std::uint32_t>& labels)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    const std::size_t dim = classes + 4;
    for (std::uint32_t c = 0; c < classes; ++c) {
        for (std::uint32_t i = 0; i < per_class; ++i) {
            std::vector<double> x(dim);
            for (auto& v : x) {
                v = noise(rng);
            }
            x[c] += 1.0;
            features.push_back(dense_to_sparse(x));
            labels.push_back(c);
        }
    }
}

SweepResult synthetic_sweep(const std::vector<double>& curve)
{
    SweepResult s;
    s.agent = "test";
    s.seeds = {1};
    s.per_seed_f1 = {curve};
    for (std::size_t n = 0; n < curve.size(); ++n) {
        s.rows.push_back(SweepRow{static_cast<std::uint32_t>(n + 1), curve[n], 0.0});
    }
    return s;
}

/// Saturating curve that reaches its plateau at `knee`.
std::vector<double> saturating(std::uint32_t knee, std::uint32_t length)
{
    std::vector<double> curve;
    for (std::uint32_t n = 1; n <= length; ++n) {
        curve.push_back(n >= knee ? 0.9 : 0.9 - 0.05 * (knee - n));
    }
    return curve;
}

} // namespace

TEST(BuildCorpus, DeskScaleShape)
{
    const Corpus c = build_corpus(CorpusConfig{}, 1);
    EXPECT_EQ(c.samples.size(), 600u);
    EXPECT_EQ(c.families.size(), 20u);
    std::vector<int> per_family(20, 0);
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
        EXPECT_EQ(c.samples[i].id, i);
        EXPECT_EQ(c.labels[i], c.samples[i].family);
        EXPECT_EQ(c.labels[i], i / 30);
        per_family[c.labels[i]]++;
    }
    for (int n : per_family) {
        EXPECT_EQ(n, 30);
    }
}

TEST(BuildCorpus, LargeScaleShape)
{
    CorpusConfig cfg;
    cfg.families = 100;
    cfg.samples_per_family = 150;
    const Corpus c = build_corpus(cfg, 3);
    EXPECT_EQ(c.samples.size(), 15000u);
    EXPECT_EQ(c.labels.back(), 99u);
}

TEST(BuildCorpus, SameSeedIdenticalAndJsonRoundTrips)
{
    const CorpusConfig cfg = small_corpus_config(4, 5);
    const std::string a = corpus_to_json(build_corpus(cfg, 42));
    const std::string b = corpus_to_json(build_corpus(cfg, 42));
    EXPECT_EQ(a, b);
    EXPECT_NE(a, corpus_to_json(build_corpus(cfg, 43)));
    const Corpus back = corpus_from_json(a);
    EXPECT_EQ(corpus_to_json(back), a);
    EXPECT_EQ(back.seed, 42u);
    EXPECT_EQ(back.samples.size(), 20u);
}

TEST(BuildCorpus, DegenerateConfigsRejected)
{
    EXPECT_THROW(build_corpus(small_corpus_config(1, 5), 1), UsageError);
    EXPECT_THROW(build_corpus(small_corpus_config(3, 1), 1), UsageError);
    EXPECT_THROW(corpus_from_json("[]"), UsageError);
}

TEST(StratifiedSplit, PerClassFractionsAndPartition)
{
    std::vector<std::uint32_t> labels;
    for (std::uint32_t c = 0; c < 4; ++c) {
        for (int i = 0; i < 10; ++i) {
            labels.push_back(c);
        }
    }
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    stratified_split(labels, 4, SplitSpec{0.7, 5}, train, test);
    EXPECT_EQ(train.size(), 28u);
    EXPECT_EQ(test.size(), 12u);
    std::set<std::size_t> all(train.begin(), train.end());
    all.insert(test.begin(), test.end());
    EXPECT_EQ(all.size(), labels.size());
    std::vector<int> per_class(4, 0);
    for (std::size_t i : train) {
        per_class[labels[i]]++;
    }
    for (int n : per_class) {
        EXPECT_EQ(n, 7);
    }
}

TEST(TrainClassifier, SeparableTwoClassIsPerfect)
{
    std::vector<FeatureVector> x;
    std::vector<std::uint32_t> y;
    blobs(2, 40, 0.05, 1, x, y);
    const auto trained = train_classifier(x, y, 2, SplitSpec{0.7, 3}, ClassifierHyper{});
    ASSERT_EQ(trained.predictions.size(), trained.test_indices.size());
    for (std::size_t k = 0; k < trained.test_indices.size(); ++k) {
        EXPECT_EQ(trained.predictions[k], y[trained.test_indices[k]]);
    }
}

TEST(TrainClassifier, DoublingEpochsIsFixedPointOnceHingeIsZero)
{
    std::vector<FeatureVector> x;
    std::vector<std::uint32_t> y;
    blobs(3, 30, 0.05, 2, x, y);
    const auto a = train_classifier(x, y, 3, SplitSpec{0.7, 4}, ClassifierHyper{1e-4, 40});
    ASSERT_EQ(a.final_train_hinge, 0.0);
    const auto b = train_classifier(x, y, 3, SplitSpec{0.7, 4}, ClassifierHyper{1e-4, 80});
    EXPECT_EQ(a.predictions, b.predictions);
    EXPECT_EQ(a.model.weights, b.model.weights);
}

TEST(TrainClassifier, DeterministicGivenSeed)
{
    std::vector<FeatureVector> x;
    std::vector<std::uint32_t> y;
    blobs(4, 20, 0.8, 3, x, y);
    const auto a = train_classifier(x, y, 4, SplitSpec{0.7, 9}, ClassifierHyper{});
    const auto b = train_classifier(x, y, 4, SplitSpec{0.7, 9}, ClassifierHyper{});
    EXPECT_EQ(a.model.weights, b.model.weights);
    EXPECT_EQ(a.model.bias, b.model.bias);
    EXPECT_EQ(a.predictions, b.predictions);
}

TEST(TrainClassifier, PermutedLabelsGiveChanceF1)
{
    // Unstructured features with shuffled labels carry no class signal.
    const std::uint32_t classes = 5;
    double sum = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) {
        std::mt19937_64 rng(100 + s);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<FeatureVector> x;
        std::vector<std::uint32_t> y;
        for (std::uint32_t i = 0; i < classes * 60; ++i) {
            std::vector<double> v(40);
            for (auto& e : v) {
                e = noise(rng);
            }
            x.push_back(dense_to_sparse(v));
            y.push_back(i % classes);
        }
        std::shuffle(y.begin(), y.end(), rng);
        const auto t = train_classifier(x, y, classes, SplitSpec{0.7, std::uint64_t(s)}, ClassifierHyper{});
        std::vector<std::uint32_t> truth;
        for (std::size_t i : t.test_indices) {
            truth.push_back(y[i]);
        }
        sum += macro_f1(t.predictions, truth, classes).macro;
    }
    EXPECT_NEAR(sum / seeds, 1.0 / classes, 0.05);
}

TEST(TrainClassifier, DegenerateSplitRejected)
{
    std::vector<FeatureVector> x;
    std::vector<std::uint32_t> y;
    blobs(1, 10, 0.1, 4, x, y);
    EXPECT_THROW(train_classifier(x, y, 1, SplitSpec{}, ClassifierHyper{}), UsageError);
    blobs(2, 10, 0.1, 4, x, y);
    std::fill(y.begin(), y.end(), 0u);
    EXPECT_THROW(train_classifier(x, y, 2, SplitSpec{}, ClassifierHyper{}), UsageError);
}

TEST(MacroF1, PerfectPredictions)
{
    const std::vector<std::uint32_t> y{0, 1, 2, 1, 0};
    EXPECT_EQ(macro_f1(y, y, 3).macro, 1.0);
}

TEST(MacroF1, AllOneClassOnBalancedPair)
{
    // Class 0: precision 0.5, recall 1 -> 2/3; class 1 -> 0.
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    const std::vector<std::uint32_t> pred{0, 0, 0, 0};
    const auto r = macro_f1(pred, labels, 2);
    EXPECT_NEAR(r.per_class[0], 2.0 / 3.0, 1e-15);
    EXPECT_EQ(r.per_class[1], 0.0);
    EXPECT_NEAR(r.macro, 1.0 / 3.0, 1e-15);
}

TEST(MacroF1, InvariantUnderConsistentRelabeling)
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::uint32_t> cls(0, 3);
    std::vector<std::uint32_t> labels(50);
    std::vector<std::uint32_t> pred(50);
    for (std::size_t i = 0; i < 50; ++i) {
        labels[i] = cls(rng);
        pred[i] = cls(rng) == 0 ? cls(rng) : labels[i];
    }
    const std::vector<std::uint32_t> perm{2, 0, 3, 1};
    std::vector<std::uint32_t> labels_p;
    std::vector<std::uint32_t> pred_p;
    for (std::size_t i = 0; i < 50; ++i) {
        labels_p.push_back(perm[labels[i]]);
        pred_p.push_back(perm[pred[i]]);
    }
    EXPECT_NEAR(macro_f1(pred, labels, 4).macro, macro_f1(pred_p, labels_p, 4).macro, 1e-15);
}

TEST(MacroF1, AbsentClassExcludedOnlyWhenAbsentEverywhere)
{
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    const auto r = macro_f1(labels, labels, 3);
    EXPECT_FALSE(r.included[2]);
    EXPECT_EQ(r.per_class[2], 0.0);
    EXPECT_EQ(r.macro, 1.0);
    // Class 2 predicted but never true: included with F1 0.
    const auto r2 = macro_f1({0, 0, 1, 2}, labels, 3);
    EXPECT_TRUE(r2.included[2]);
    EXPECT_EQ(r2.per_class[2], 0.0);
    EXPECT_NEAR(r2.macro, (1.0 + 2.0 / 3.0 + 0.0) / 3.0, 1e-15);
}

TEST(OptimalActions, SaturatingCurve)
{
    EXPECT_EQ(optimal_actions(saturating(7, 12), 0.01), 7u);
    EXPECT_EQ(optimal_actions(saturating(8, 12), 0.01), 8u);
}

TEST(OptimalActions, FlatCurveAndLargeTolerance)
{
    EXPECT_EQ(optimal_actions(std::vector<double>(12, 0.4), 0.01), 1u);
    EXPECT_EQ(optimal_actions(saturating(7, 12), 0.5), 1u);
}

TEST(OptimalActions, PlateauWithinTolerance)
{
    // Reaches 0.795 at n=3, max 0.80 at n=5.
    const std::vector<double> curve{0.5, 0.7, 0.795, 0.79, 0.80, 0.798};
    EXPECT_EQ(optimal_actions(curve, 0.01), 3u);
    EXPECT_EQ(optimal_actions(curve, 0.001), 5u);
}

TEST(ComparisonRow, TableArithmetic)
{
    const auto bmc = comparison_row(synthetic_sweep(saturating(7, 12)), 0.01, 21.0);
    const auto constant = comparison_row(synthetic_sweep(saturating(8, 12)), 0.01, 21.0);
    EXPECT_EQ(bmc.optimal_actions, 7u);
    EXPECT_EQ(bmc.seconds, 147.0);
    EXPECT_EQ(constant.optimal_actions, 8u);
    EXPECT_EQ(constant.seconds, 168.0);
    const std::string csv = comparison_csv({bmc, constant});
    EXPECT_NE(csv.find("test,7,7,147\n"), std::string::npos);
    EXPECT_NE(csv.find("test,8,8,168\n"), std::string::npos);
    EXPECT_NE(comparison_text({bmc}).find("147"), std::string::npos);
}

TEST(Median, OddAndEven)
{
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(Sweep, SnapshotEqualsBudgetRun)
{
    const Corpus c = build_corpus(small_corpus_config(2, 3), 7);
    for (const MalwareSample& s : c.samples) {
        AnalyzerConfig cfg;
        cfg.max_actions = 10;
        cfg.seed = analysis_seed(1, s.id);
        std::vector<FeatureVector> snapshots;
        analyze_sample(s, cfg, [&](const StepLog&, const CallGraph& g) {
            snapshots.push_back(graph_features(g, c.world.vocab_size));
        });
        for (std::uint32_t n : {1u, 4u, 10u}) {
            cfg.max_actions = n;
            EXPECT_EQ(graph_features(analyze_sample(s, cfg).graph, c.world.vocab_size), snapshots[n - 1]);
        }
    }
}

TEST(Sweep, ShapeBoundsAndDeterminism)
{
    const Corpus c = build_corpus(small_corpus_config(3, 8), 11);
    SweepConfig cfg;
    cfg.max_actions = 5;
    cfg.seeds = {1, 2};
    const AgentSpec agent{"epsilon-bmc", BmcSpec{}};
    const SweepResult a = sweep_action_budget(c, agent, AnalyzerConfig{}, cfg);
    ASSERT_EQ(a.rows.size(), 5u);
    ASSERT_EQ(a.per_seed_f1.size(), 2u);
    ASSERT_EQ(a.null_f1.size(), 2u);
    for (std::uint32_t n = 0; n < 5; ++n) {
        EXPECT_EQ(a.rows[n].budget, n + 1);
        EXPECT_GE(a.rows[n].mean_f1, 0.0);
        EXPECT_LE(a.rows[n].mean_f1, 1.0);
        EXPECT_GE(a.rows[n].std_f1, 0.0);
        EXPECT_NEAR(a.rows[n].mean_f1, 0.5 * (a.per_seed_f1[0][n] + a.per_seed_f1[1][n]), 1e-15);
    }
    cfg.workers = 4;
    const SweepResult b = sweep_action_budget(c, agent, AnalyzerConfig{}, cfg);
    EXPECT_EQ(sweep_csv(a), sweep_csv(b));
    EXPECT_EQ(a.per_seed_f1, b.per_seed_f1);
    EXPECT_EQ(a.null_f1, b.null_f1);
}

TEST(Sweep, RejectsDegenerateCorpora)
{
    Corpus c = build_corpus(small_corpus_config(2, 3), 1);
    c.family_count = 1;
    EXPECT_THROW(sweep_action_budget(c, AgentSpec{}, AnalyzerConfig{}, SweepConfig{}), UsageError);
    Corpus empty;
    EXPECT_THROW(sweep_action_budget(empty, AgentSpec{}, AnalyzerConfig{}, SweepConfig{}), UsageError);
}

TEST(CompareAgents, RowPerAgentAndDuplicatesMatch)
{
    const Corpus c = build_corpus(small_corpus_config(3, 6), 13);
    SweepConfig cfg;
    cfg.max_actions = 4;
    cfg.seeds = {1};
    const std::vector<AgentSpec> agents{{"a", BmcSpec{}}, {"b", BmcSpec{}}, {"c", ConstantSpec{}}};
    const Comparison cmp = compare_agents(c, agents, AnalyzerConfig{}, cfg);
    ASSERT_EQ(cmp.rows.size(), 3u);
    EXPECT_EQ(cmp.rows[0].optimal_actions, cmp.rows[1].optimal_actions);
    EXPECT_EQ(cmp.sweeps[0].per_seed_f1, cmp.sweeps[1].per_seed_f1);
    for (const auto& row : cmp.rows) {
        EXPECT_EQ(row.seconds, row.optimal_actions * 21.0);
    }
    const Comparison single = compare_agents(c, {agents[2]}, AnalyzerConfig{}, cfg);
    EXPECT_EQ(single.rows.size(), 1u);
}
