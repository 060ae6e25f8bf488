#pragma once

// Tabular value-learning primitives: the Q-table, the three bootstrapped
// return targets (greedy, uniform, expected SARSA), the TD update and the
// epsilon-greedy action law.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

namespace ama {

using Rng = std::mt19937_64;

struct StateId {
    std::uint32_t value = 0;
    auto operator<=>(const StateId&) const = default;
};

/// Index of a trigger action within one sample's action space.
struct ActionId {
    std::uint32_t value = 0;
    auto operator<=>(const ActionId&) const = default;
};

struct LearningConfig {
    double gamma = 0.95;
    double eta = 0.1;

    /// Throws UsageError unless gamma is in (0,1) and eta in (0,1].
    void validate() const;
};

struct Transition {
    StateId state;
    ActionId action;
    double reward = 0.0;
    StateId next_state;
    std::vector<ActionId> next_action_space;
};

class QTable {
public:
    explicit QTable(double default_value = 0.0);

    double get(StateId s, ActionId a) const;

    /// Stores a finite value; throws NumericError otherwise.
    void set(StateId s, ActionId a, double value);

    double default_value() const { return default_value_; }
    std::size_t size() const { return values_.size(); }
    void clear() { values_.clear(); }

private:
    struct KeyHash {
        std::size_t operator()(const std::pair<StateId, ActionId>& k) const noexcept {
            std::uint64_t x = (std::uint64_t{k.first.value} << 32) | k.second.value;
            return std::hash<std::uint64_t>{}(x);
        }
    };

    double default_value_;
    std::unordered_map<std::pair<StateId, ActionId>, double, KeyHash> values_;
};

/// An action attaining max Q(s, .); ties broken uniformly via tie_rng.
ActionId greedy_action(const QTable& q, StateId s, std::span<const ActionId> actions, Rng& tie_rng);

/// Probabilities aligned with `actions`. The tie set of maximizers shares the
/// greedy mass (1 - epsilon) equally; every action also gets epsilon/|A|.
std::vector<double> epsilon_greedy_probabilities(const QTable& q, StateId s,
                                                 std::span<const ActionId> actions, double epsilon);

/// Explores uniformly with probability epsilon, otherwise acts greedily.
ActionId epsilon_greedy_sample(const QTable& q, StateId s, std::span<const ActionId> actions,
                               double epsilon, Rng& rng);

/// r + gamma * max_a' Q(s', a')
double target_q(const QTable& q, const Transition& t, double gamma);

/// r + gamma * mean_a' Q(s', a')
double target_uniform(const QTable& q, const Transition& t, double gamma);

/// r + gamma * sum_a' pi_eps(a'|s') Q(s', a') under the epsilon-greedy policy.
///
/// Evaluated as (1-eps)*max + eps*mean, which is the same sum because every
/// member of the tie set holds the maximum. The endpoints eps=0 and eps=1
/// reproduce target_q and target_uniform bit for bit.
double target_expected_sarsa(const QTable& q, const Transition& t, double gamma, double epsilon);

/// Q(s,a) += eta * (target - Q(s,a)). Returns the new value.
double td_update(QTable& q, StateId s, ActionId a, double target, double eta);

} // namespace ama
