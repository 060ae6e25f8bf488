#include "ama/rl_core.hpp"

#include "ama/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ama {

namespace {

void require_actions(std::span<const ActionId> actions)
{
    if (actions.empty()) {
        throw UsageError("action list must be nonempty");
    }
}

void require_epsilon(double epsilon)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw UsageError("epsilon must lie in [0,1]");
    }
}

double max_value(const QTable& q, StateId s, std::span<const ActionId> actions)
{
    double best = -std::numeric_limits<double>::infinity();
    for (ActionId a : actions) {
        best = std::max(best, q.get(s, a));
    }
    return best;
}

double mean_value(const QTable& q, StateId s, std::span<const ActionId> actions)
{
    double sum = 0.0;
    for (ActionId a : actions) {
        sum += q.get(s, a);
    }
    return sum / static_cast<double>(actions.size());
}

} // namespace

void LearningConfig::validate() const
{
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw UsageError("gamma must lie in (0,1)");
    }
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw UsageError("eta must lie in (0,1]");
    }
}

QTable::QTable(double default_value) : default_value_(default_value)
{
    if (!std::isfinite(default_value)) {
        throw NumericError("Q-table default must be finite");
    }
}

double QTable::get(StateId s, ActionId a) const
{
    auto it = values_.find({s, a});
    return it == values_.end() ? default_value_ : it->second;
}

void QTable::set(StateId s, ActionId a, double value)
{
    if (!std::isfinite(value)) {
        throw NumericError("Q value must be finite");
    }
    values_[{s, a}] = value;
}

ActionId greedy_action(const QTable& q, StateId s, std::span<const ActionId> actions, Rng& tie_rng)
{
    require_actions(actions);
    const double best = max_value(q, s, actions);
    std::vector<ActionId> ties;
    for (ActionId a : actions) {
        if (q.get(s, a) == best) {
            ties.push_back(a);
        }
    }
    if (ties.size() == 1) {
        return ties.front();
    }
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(tie_rng)];
}

std::vector<double> epsilon_greedy_probabilities(const QTable& q, StateId s,
                                                 std::span<const ActionId> actions, double epsilon)
{
    require_epsilon(epsilon);
    require_actions(actions);

    const double best = max_value(q, s, actions);
    std::size_t tie_count = 0;
    for (ActionId a : actions) {
        tie_count += q.get(s, a) == best ? 1 : 0;
    }

    const double explore = epsilon / static_cast<double>(actions.size());
    const double greedy_share = (1.0 - epsilon) / static_cast<double>(tie_count);
    std::vector<double> probs;
    probs.reserve(actions.size());
    for (ActionId a : actions) {
        probs.push_back(q.get(s, a) == best ? explore + greedy_share : explore);
    }
    return probs;
}

ActionId epsilon_greedy_sample(const QTable& q, StateId s, std::span<const ActionId> actions,
                               double epsilon, Rng& rng)
{
    require_epsilon(epsilon);
    require_actions(actions);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        return actions[pick(rng)];
    }
    return greedy_action(q, s, actions, rng);
}

double target_q(const QTable& q, const Transition& t, double gamma)
{
    require_actions(t.next_action_space);
    return t.reward + gamma * max_value(q, t.next_state, t.next_action_space);
}

double target_uniform(const QTable& q, const Transition& t, double gamma)
{
    require_actions(t.next_action_space);
    return t.reward + gamma * mean_value(q, t.next_state, t.next_action_space);
}

double target_expected_sarsa(const QTable& q, const Transition& t, double gamma, double epsilon)
{
    require_epsilon(epsilon);
    require_actions(t.next_action_space);
    const double best = max_value(q, t.next_state, t.next_action_space);
    const double mean = mean_value(q, t.next_state, t.next_action_space);
    double expected = 0.0;
    if (epsilon == 0.0) {
        expected = best;
    } else if (epsilon == 1.0) {
        expected = mean;
    } else {
        expected = (1.0 - epsilon) * best + epsilon * mean;
    }
    return t.reward + gamma * expected;
}

double td_update(QTable& q, StateId s, ActionId a, double target, double eta)
{
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw UsageError("eta must lie in (0,1]");
    }
    if (!std::isfinite(target)) {
        throw NumericError("TD target must be finite");
    }
    const double old = q.get(s, a);
    const double updated = old + eta * (target - old);
    q.set(s, a, updated);
    return updated;
}

} // namespace ama
