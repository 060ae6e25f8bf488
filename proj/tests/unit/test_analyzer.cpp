#include "ama/analyzer.hpp"
#include "ama/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <deque>
#include <set>

using namespace ama;

namespace {

MalwareSample default_sample(std::uint64_t seed)
{
    const WorldConfig c;
    Rng rng(seed);
    const FamilySpec f = generate_family(rng, c);
    return instantiate_sample(f, rng, c);
}

/// Five local nodes, four reachable from the single intent.
MalwareSample small_chain_sample()
{
    MalwareSample s;
    s.id = 1;
    s.manifest = {0};
    s.kernel.nodes = {ApiCallId{5}, ApiCallId{6}, ApiCallId{7}, ApiCallId{8}, ApiCallId{9}};
    s.kernel.entry = {{0.5, 0.5, 0.0, 0.0, 0.0}};
    s.kernel.transition = {
        {0.0, 1.0, 0.0, 0.0, 0.0},
        {0.5, 0.0, 0.5, 0.0, 0.0},
        {0.0, 0.0, 0.0, 1.0, 0.0},
        {1.0, 0.0, 0.0, 0.0, 0.0},
        {1.0, 0.0, 0.0, 0.0, 0.0},
    };
    s.kernel.terminal = {0.3, 0.3, 0.3, 0.3, 0.3};
    s.max_trace_length = 32;
    return s;
}

/// Global ids reachable from Init in at most `cap - 1` calls.
std::set<std::uint32_t> reachable_set(const MalwareSample& s)
{
    const auto& k = s.kernel;
    std::set<std::uint32_t> seen{kInit.value};
    std::deque<std::pair<std::size_t, std::size_t>> frontier;
    for (const auto& row : k.entry) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] > 0.0 && seen.insert(k.nodes[j].value).second) {
                frontier.emplace_back(j, 2);
            }
        }
    }
    while (!frontier.empty()) {
        const auto [i, len] = frontier.front();
        frontier.pop_front();
        if (len >= s.max_trace_length || k.terminal[i] >= 1.0) {
            continue;
        }
        for (std::size_t j = 0; j < k.nodes.size(); ++j) {
            if (k.transition[i][j] > 0.0 && seen.insert(k.nodes[j].value).second) {
                frontier.emplace_back(j, len + 1);
            }
        }
    }
    return seen;
}

} // namespace

TEST(AnalyzerConfig, Validation)
{
    AnalyzerConfig c;
    EXPECT_NO_THROW(c.validate());
    c.max_actions = 0;
    EXPECT_THROW(c.validate(), UsageError);
    c = AnalyzerConfig{};
    c.seconds_per_action = 0.0;
    EXPECT_THROW(c.validate(), UsageError);
    c = AnalyzerConfig{};
    c.controller = ConstantSpec{2.0};
    EXPECT_THROW(c.validate(), UsageError);
}

TEST(NoveltyReward, Definition)
{
    EXPECT_EQ(novelty_reward({0, 0}), 0.0);
    EXPECT_EQ(novelty_reward({1, 1}), 2.0);
    EXPECT_EQ(novelty_reward({3, 4}, RewardKind::NewNodes), 3.0);
}

TEST(AnalyzerState, InitBeforeFirstActionThenLastCall)
{
    CallGraph g;
    EXPECT_EQ(analyzer_state(g, std::nullopt), StateId{0});
    const Trace t{kInit, ApiCallId{3}, ApiCallId{4}};
    g.ingest_trace(ActionId{0}, t);
    EXPECT_EQ(analyzer_state(g, t), StateId{4});
}

TEST(AnalyzeSample, SingleActionBudget)
{
    const MalwareSample s = default_sample(1);
    AnalyzerConfig c;
    c.max_actions = 1;
    c.seed = 9;
    const AnalysisResult r = analyze_sample(s, c);
    ASSERT_EQ(r.steps.size(), 1u);
    EXPECT_EQ(r.steps[0].step, 1u);
    EXPECT_EQ(r.steps[0].state, StateId{0});
    // The graph is exactly one trace: a walk with trace_length - 1 transitions.
    EXPECT_EQ(r.graph.total_transitions(), r.steps[0].trace_length - 1);
    EXPECT_EQ(r.graph.node_count() - 1, r.steps[0].novelty.new_nodes);
    EXPECT_EQ(r.graph.edge_count(), r.steps[0].novelty.new_edges);
}

TEST(AnalyzeSample, ElapsedTimeIsBudgetTimesCost)
{
    const MalwareSample s = default_sample(2);
    AnalyzerConfig c;
    c.max_actions = 7;
    c.seconds_per_action = 21.0;
    const AnalysisResult r = analyze_sample(s, c);
    EXPECT_EQ(r.steps.size(), 7u);
    EXPECT_EQ(r.elapsed_seconds, 147.0);
    c.max_actions = 8;
    EXPECT_EQ(analyze_sample(s, c).elapsed_seconds, 168.0);
}

TEST(AnalyzeSample, DeterministicGivenSeed)
{
    const MalwareSample s = default_sample(3);
    AnalyzerConfig c;
    c.max_actions = 20;
    c.seed = 77;
    const AnalysisResult a = analyze_sample(s, c);
    const AnalysisResult b = analyze_sample(s, c);
    EXPECT_EQ(a.graph, b.graph);
    ASSERT_EQ(a.steps.size(), b.steps.size());
    for (std::size_t i = 0; i < a.steps.size(); ++i) {
        EXPECT_EQ(step_log_csv_row(a.steps[i]), step_log_csv_row(b.steps[i]));
    }
}

TEST(AnalyzeSample, GraphCoversReachableSetOfSmallChain)
{
    const MalwareSample s = small_chain_sample();
    const auto expected = reachable_set(s);
    ASSERT_EQ(expected.size(), 5u);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        AnalyzerConfig c;
        c.max_actions = 50;
        c.seed = seed;
        const AnalysisResult r = analyze_sample(s, c);
        std::set<std::uint32_t> got;
        for (const auto& [id, stats] : r.graph.nodes()) {
            got.insert(id.value);
        }
        EXPECT_EQ(got, expected) << "seed " << seed;
    }
}

TEST(AnalyzeSample, GraphCoversReachableSetOfGeneratedChains)
{
    WorldConfig w;
    w.nodes_per_family = 5;
    w.intents_min = 1;
    w.intents_max = 1;
    w.noise_rate = 0.0;
    w.max_fanout = 2;
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const FamilySpec f = generate_family(rng, w);
        const MalwareSample s = instantiate_sample(f, rng, w);
        const auto expected = reachable_set(s);
        AnalyzerConfig c;
        c.max_actions = 50;
        c.seed = 100 + trial;
        const AnalysisResult r = analyze_sample(s, c);
        std::set<std::uint32_t> got;
        for (const auto& [id, stats] : r.graph.nodes()) {
            got.insert(id.value);
        }
        // Rare edges may go unseen in 50 traces; the node set can only shrink.
        for (std::uint32_t v : got) {
            EXPECT_TRUE(expected.contains(v));
        }
    }
}

TEST(AnalyzeSample, TelescopingRewardIdentity)
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const MalwareSample s = default_sample(seed);
        AnalyzerConfig c;
        c.max_actions = 1 + seed % 15;
        c.seed = seed;
        c.controller = seed % 3 == 0 ? ControllerSpec{ConstantSpec{}} : ControllerSpec{BmcSpec{}};
        const AnalysisResult r = analyze_sample(s, c);
        double cumulative = 0.0;
        for (const StepLog& log : r.steps) {
            cumulative += log.reward;
        }
        const double size = static_cast<double>(r.graph.node_count() - 1 + r.graph.edge_count());
        EXPECT_EQ(cumulative, size);
    }
}

TEST(AnalyzeSample, ObserverSeesGraphAfterEveryStep)
{
    const MalwareSample s = default_sample(4);
    AnalyzerConfig c;
    c.max_actions = 6;
    std::vector<std::size_t> sizes;
    std::uint32_t last_step = 0;
    const AnalysisResult r = analyze_sample(s, c, [&](const StepLog& log, const CallGraph& g) {
        EXPECT_EQ(log.step, last_step + 1);
        last_step = log.step;
        sizes.push_back(g.node_count() + g.edge_count());
    });
    ASSERT_EQ(sizes.size(), 6u);
    EXPECT_EQ(sizes.back(), r.graph.node_count() + r.graph.edge_count());
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        EXPECT_GE(sizes[i], sizes[i - 1]);
    }
}

TEST(AnalyzeSample, SmallerBudgetGivesSubgraph)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const MalwareSample s = default_sample(50 + seed);
        AnalyzerConfig c;
        c.seed = seed;
        c.max_actions = 4;
        const CallGraph small = analyze_sample(s, c).graph;
        c.max_actions = 12;
        const CallGraph large = analyze_sample(s, c).graph;
        for (const auto& [id, stats] : small.nodes()) {
            ASSERT_TRUE(large.contains(id));
            EXPECT_LE(stats.visits, large.nodes().at(id).visits);
        }
        for (const auto& [edge, count] : small.edges()) {
            ASSERT_TRUE(large.edges().contains(edge));
            EXPECT_LE(count, large.edges().at(edge));
        }
    }
}

TEST(AnalyzeSample, EpsilonTrajectoryFiniteAndBounded)
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        AnalyzerConfig c;
        c.max_actions = 40;
        c.seed = seed;
        const AnalysisResult r = analyze_sample(default_sample(seed), c);
        for (const StepLog& log : r.steps) {
            EXPECT_TRUE(std::isfinite(log.epsilon));
            EXPECT_GE(log.epsilon, 0.0);
            EXPECT_LE(log.epsilon, 1.0);
        }
    }
}

TEST(AnalyzeSample, SymmetricSampleKeepsExploring)
{
    // Every intent leads to the same sub-chain, so no action is better than another.
    WorldConfig w;
    w.intents_min = 8;
    w.intents_max = 8;
    w.noise_rate = 0.0;
    Rng rng(12);
    const FamilySpec f = generate_family(rng, w);
    MalwareSample s = instantiate_sample(f, rng, w, 0.0, 0.0);
    for (auto& row : s.kernel.entry) {
        row = s.kernel.entry[0];
    }
    const std::uint32_t budget = 50;
    const int runs = 20;
    std::vector<double> mean_eps(budget, 0.0);
    for (int run = 0; run < runs; ++run) {
        AnalyzerConfig c;
        c.max_actions = budget;
        c.seed = 1000 + run;
        const AnalysisResult r = analyze_sample(s, c);
        for (std::uint32_t t = 0; t < budget; ++t) {
            mean_eps[t] += r.steps[t].epsilon / runs;
        }
    }
    for (std::uint32_t t = 0; t < budget; ++t) {
        EXPECT_GE(mean_eps[t], 0.05) << "step " << t + 1;
    }
}

TEST(AnalyzeSample, InvalidSampleRejected)
{
    MalwareSample s = small_chain_sample();
    s.manifest.clear();
    EXPECT_THROW(analyze_sample(s, AnalyzerConfig{}), UsageError);
}

TEST(StepLogCsv, HeaderAndRowShape)
{
    EXPECT_EQ(step_log_csv_header(), "step,state,action,epsilon,trace_length,reward,new_nodes,new_edges,g_q,g_u,g_exp");
    StepLog log;
    log.step = 3;
    log.state = StateId{5};
    log.action = ActionId{2};
    log.epsilon = 0.5;
    log.trace_length = 4;
    log.reward = 2.0;
    log.novelty = {1, 1};
    log.g_q = 1.25;
    log.g_u = 1.0;
    log.g_exp = 1.125;
    EXPECT_EQ(step_log_csv_row(log), "3,5,2,0.5,4,2,1,1,1.25,1,1.125");
}
