#include "ama/analyzer.hpp"

#include "ama/csv.hpp"
#include "ama/error.hpp"

#include <cmath>
#include <sstream>

namespace ama {

namespace {

Rng stream(std::uint64_t seed, std::uint32_t tag)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return Rng(seq);
}

} // namespace

void AnalyzerConfig::validate() const
{
    if (max_actions < 1) {
        throw UsageError("max_actions must be >= 1");
    }
    if (!(seconds_per_action > 0.0) || !std::isfinite(seconds_per_action)) {
        throw UsageError("seconds_per_action must be > 0");
    }
    learning.validate();
    EpsilonController probe(controller);
    (void)probe;
}

double novelty_reward(const NoveltyReport& report, RewardKind kind)
{
    switch (kind) {
    case RewardKind::NewNodes:
        return static_cast<double>(report.new_nodes);
    case RewardKind::Novelty:
    default:
        return static_cast<double>(report.new_nodes + report.new_edges);
    }
}

StateId analyzer_state(const CallGraph& g, const std::optional<Trace>& last_trace)
{
    if (!last_trace || last_trace->empty()) {
        return StateId{kInit.value};
    }
    const ApiCallId last = last_trace->back();
    if (!g.contains(last)) {
        throw UsageError("state node is not in the call graph");
    }
    return StateId{last.value};
}

AnalysisResult analyze_sample(const MalwareSample& sample, const AnalyzerConfig& config,
                              const StepObserver& observer)
{
    config.validate();
    sample.validate();

    AnalysisResult result{CallGraph(config.kappa), {}, 0.0};
    result.steps.reserve(config.max_actions);

    const std::vector<ActionId> actions = extract_action_space(sample);
    QTable q;
    EpsilonController controller(config.controller);
    Rng policy_rng = stream(config.seed, 1);
    Rng env_rng = stream(config.seed, 2);
    const double gamma = config.learning.gamma;

    std::optional<Trace> last_trace;
    StateId state = analyzer_state(result.graph, last_trace);
    for (std::uint32_t t = 1; t <= config.max_actions; ++t) {
        try {
            StepLog log;
            log.step = t;
            log.state = state;
            log.epsilon = controller.epsilon();
            log.action = epsilon_greedy_sample(q, state, actions, log.epsilon, policy_rng);

            Trace trace = execute_trigger(sample, log.action, env_rng);
            log.trace_length = trace.size();
            log.novelty = result.graph.ingest_trace(log.action, trace);
            log.reward = novelty_reward(log.novelty, config.reward);
            last_trace = std::move(trace);
            const StateId next = analyzer_state(result.graph, last_trace);

            const Transition tr{state, log.action, log.reward, next, actions};
            log.g_q = target_q(q, tr, gamma);
            log.g_u = target_uniform(q, tr, gamma);
            log.g_exp = target_expected_sarsa(q, tr, gamma, log.epsilon);
            td_update(q, state, log.action, log.g_exp, config.learning.eta);
            controller.observe(log.g_q, log.g_u, log.g_exp);

            state = next;
            reset_environment(sample);
            result.steps.push_back(log);
            result.elapsed_seconds = static_cast<double>(t) * config.seconds_per_action;
            if (observer) {
                observer(result.steps.back(), result.graph);
            }
        } catch (const std::exception& e) {
            throw AnalysisError("analysis of sample " + std::to_string(sample.id) + " failed at step " +
                                    std::to_string(t) + ": " + e.what(),
                                std::move(result));
        }
    }
    return result;
}

std::string step_log_csv_header()
{
    return "step,state,action,epsilon,trace_length,reward,new_nodes,new_edges,g_q,g_u,g_exp";
}

std::string step_log_csv_row(const StepLog& log)
{
    std::ostringstream out;
    out << log.step << ',' << log.state.value << ',' << log.action.value << ',' << format_number(log.epsilon) << ','
        << log.trace_length << ',' << format_number(log.reward) << ',' << log.novelty.new_nodes << ','
        << log.novelty.new_edges << ',' << format_number(log.g_q) << ',' << format_number(log.g_u) << ','
        << format_number(log.g_exp);
    return out.str();
}

} // namespace ama
