#pragma once

// Synthetic stand-in for the instrumented emulator. Each family owns a hidden
// Markov behavior model rooted at Init: an intent picks the first API call,
// then the chain walks a row-stochastic node-to-node kernel until a
// per-node terminal draw succeeds or the trace reaches its length cap.
// Samples are jittered copies of their family's kernel with their own intent
// manifest and an optional rate of injected noise calls.

#include "ama/rl_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ama {

struct ApiCallId {
    std::uint32_t value = 0;
    auto operator<=>(const ApiCallId&) const = default;
};

inline constexpr ApiCallId kInit{0};

struct WorldConfig {
    std::uint32_t vocab_size = 200;
    /// Nodes in a family's kernel, counting Init.
    std::uint32_t nodes_per_family = 16;
    std::uint32_t intents_min = 5;
    std::uint32_t intents_max = 15;
    double terminal_min = 0.15;
    double terminal_max = 0.4;
    /// Size of the noise-call pool at the top of the vocabulary.
    std::uint32_t noise_pool = 20;
    /// Common API ids [1, 1 + shared_pool) that every family may draw from.
    std::uint32_t shared_pool = 40;
    /// Fraction of a family's nodes drawn from the shared pool.
    double shared_fraction = 0.7;
    std::uint32_t max_trace_length = 32;
    /// Successors per kernel row and entry nodes per intent are drawn in [1, max_fanout].
    std::uint32_t max_fanout = 3;
    double jitter = 0.1;
    double noise_rate = 0.05;

    /// Throws UsageError on an infeasible configuration.
    void validate() const;

    /// First id of the noise pool; informative ids are [1, noise_begin()).
    std::uint32_t noise_begin() const { return vocab_size - noise_pool; }
    /// Family nodes (excluding Init) taken from the shared pool.
    std::uint32_t shared_nodes() const;
};

/// Hidden behavior kernel over a local node index space [0, nodes.size()).
/// nodes[i] maps local index i to its global API id; Init is not a local node.
struct BehaviorKernel {
    std::vector<ApiCallId> nodes;
    /// entry[k][i]: probability that intent k's first call is nodes[i].
    std::vector<std::vector<double>> entry;
    /// transition[i][j]: probability of nodes[i] -> nodes[j] given the walk continues.
    std::vector<std::vector<double>> transition;
    /// terminal[i]: probability the walk stops after visiting nodes[i].
    std::vector<double> terminal;

    /// Throws UsageError unless every row is stochastic within 1e-9.
    void validate() const;
};

struct FamilySpec {
    std::uint32_t id = 0;
    BehaviorKernel kernel;
    std::uint32_t intents_min = 1;
    std::uint32_t intents_max = 1;
};

struct MalwareSample {
    std::uint32_t id = 0;
    std::uint32_t family = 0;
    /// manifest[k] is the family intent behind local action k.
    std::vector<std::uint32_t> manifest;
    /// Jittered kernel; entry rows are indexed by local action, not family intent.
    BehaviorKernel kernel;
    double noise_rate = 0.0;
    std::uint32_t noise_begin = 0;
    std::uint32_t noise_end = 0;
    std::uint32_t max_trace_length = 32;

    void validate() const;
};

/// Ordered API calls; front() is always Init.
using Trace = std::vector<ApiCallId>;

FamilySpec generate_family(Rng& rng, const WorldConfig& config, std::uint32_t family_id = 0);

MalwareSample instantiate_sample(const FamilySpec& family, Rng& rng, const WorldConfig& config,
                                 std::uint32_t sample_id = 0);

/// Uses config.jitter and config.noise_rate from the explicit arguments instead.
MalwareSample instantiate_sample(const FamilySpec& family, Rng& rng, const WorldConfig& config,
                                 double jitter, double noise_rate, std::uint32_t sample_id = 0);

/// The sample's intents as a fresh local action space {0, ..., k-1}.
std::vector<ActionId> extract_action_space(const MalwareSample& sample);

/// One random walk triggered by `action`. Throws UsageError for an action
/// outside the manifest.
Trace execute_trigger(const MalwareSample& sample, ActionId action, Rng& rng);

/// The synthetic world keeps no per-execution state, so there is nothing to
/// restore. Kept so the analysis loop mirrors the emulator protocol.
void reset_environment(const MalwareSample& sample);

/// L1 distance between two kernels embedded in the global vocabulary as
/// Init-row (mean over intents) plus continuation-weighted node rows.
double kernel_l1_distance(const BehaviorKernel& a, const BehaviorKernel& b);

} // namespace ama
