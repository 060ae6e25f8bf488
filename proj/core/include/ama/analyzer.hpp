#pragma once

// Per-sample analysis loop. Each step reads epsilon from the controller,
// picks an intent epsilon-greedily, runs it against the sample, folds the
// trace into the call graph, and trains Q with the expected-SARSA target
// while the controller observes all three bootstrapped targets.

#include "ama/bmc_exploration.hpp"
#include "ama/call_graph.hpp"
#include "ama/malware_world.hpp"
#include "ama/rl_core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ama {

enum class RewardKind {
    /// new nodes + new edges
    Novelty,
    /// new nodes only
    NewNodes,
};

struct AgentSpec {
    std::string name = "epsilon-bmc";
    ControllerSpec controller = BmcSpec{};
};

struct AnalyzerConfig {
    std::uint32_t max_actions = 7;
    LearningConfig learning;
    ControllerSpec controller = BmcSpec{};
    RewardKind reward = RewardKind::Novelty;
    double seconds_per_action = 21.0;
    double kappa = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StepLog {
    std::uint32_t step = 0;
    StateId state;
    ActionId action;
    double epsilon = 0.0;
    std::size_t trace_length = 0;
    double reward = 0.0;
    NoveltyReport novelty;
    double g_q = 0.0;
    double g_u = 0.0;
    double g_exp = 0.0;
};

struct AnalysisResult {
    CallGraph graph;
    std::vector<StepLog> steps;
    double elapsed_seconds = 0.0;
};

/// A step failed; carries everything completed before the failure.
class AnalysisError : public std::runtime_error {
public:
    AnalysisError(const std::string& what, AnalysisResult partial)
        : std::runtime_error(what), partial_(std::move(partial))
    {
    }

    const AnalysisResult& partial() const { return partial_; }

private:
    AnalysisResult partial_;
};

double novelty_reward(const NoveltyReport& report, RewardKind kind = RewardKind::Novelty);

/// The terminal API call of the previous trace, or Init before the first action.
StateId analyzer_state(const CallGraph& g, const std::optional<Trace>& last_trace);

/// Called after every step with the graph as it stands after that step.
using StepObserver = std::function<void(const StepLog&, const CallGraph&)>;

AnalysisResult analyze_sample(const MalwareSample& sample, const AnalyzerConfig& config,
                              const StepObserver& observer = {});

std::string step_log_csv_header();
std::string step_log_csv_row(const StepLog& log);

} // namespace ama
