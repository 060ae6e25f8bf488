#pragma once

// Observed malware model: an Init-rooted call graph with visit counts,
// counted edges and a Dirichlet posterior over each node's successors.
// Every node keeps one reserved "unknown successor" category so the
// posterior stays proper for transitions that were never observed.

#include "ama/malware_world.hpp"
#include "ama/rl_core.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ama {

struct NoveltyReport {
    std::uint64_t new_nodes = 0;
    std::uint64_t new_edges = 0;
};

struct NodeStats {
    std::uint64_t visits = 0;
    /// Visits attributed to each triggering action.
    std::map<ActionId, std::uint64_t> triggers;

    bool operator==(const NodeStats&) const = default;
};

/// Pseudo-counts of the per-node Dirichlet posteriors: count + kappa for each
/// observed successor plus kappa for the unknown slot.
struct DirichletCounts {
    double kappa = 1.0;
    std::map<ApiCallId, std::map<ApiCallId, double>> successors;

    double unknown_mass() const { return kappa; }
};

struct HyperState {
    ApiCallId current = kInit;
    DirichletCounts phi;
};

/// Sparse real vector of fixed dimension, indices strictly increasing.
struct FeatureVector {
    std::size_t dimension = 0;
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::vector<double> to_dense() const;
    bool operator==(const FeatureVector&) const = default;
};

enum class GraphFormat { Dot, Json };

class CallGraph {
public:
    explicit CallGraph(double kappa = 1.0);

    /// Adds every consecutive pair of the trace. Throws UsageError (graph
    /// unchanged) unless the trace is nonempty and starts at Init.
    NoveltyReport ingest_trace(ActionId triggered_by, const Trace& trace);

    /// Dirichlet posterior mean of u -> v. A successor never seen from u
    /// receives the unknown slot's mass. Throws UsageError if u is absent.
    double transition_probability(ApiCallId u, ApiCallId v) const;

    /// Posterior mass of the reserved unknown-successor slot of u.
    double unknown_probability(ApiCallId u) const;

    bool contains(ApiCallId u) const { return nodes_.contains(u); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::uint64_t total_transitions() const { return total_transitions_; }
    double kappa() const { return kappa_; }

    const std::map<ApiCallId, NodeStats>& nodes() const { return nodes_; }
    const std::map<std::pair<ApiCallId, ApiCallId>, std::uint64_t>& edges() const { return edges_; }
    std::uint64_t out_count(ApiCallId u) const;
    std::vector<ApiCallId> successors(ApiCallId u) const;

    DirichletCounts dirichlet_counts() const;
    HyperState hyper_state(ApiCallId current) const;

    bool operator==(const CallGraph&) const = default;

private:
    double kappa_;
    std::map<ApiCallId, NodeStats> nodes_;
    std::map<std::pair<ApiCallId, ApiCallId>, std::uint64_t> edges_;
    std::map<ApiCallId, std::uint64_t> out_counts_;
    std::uint64_t total_transitions_ = 0;

    friend CallGraph graph_from_json(const std::string& text);
};

CallGraph new_graph(double kappa = 1.0);

inline constexpr std::size_t kDefaultPairDimension = 512;

/// Node-visit histogram over the vocabulary (L1-normalized; all mass on Init
/// for a graph with no visits) followed by hashed edge transition
/// probabilities in `pair_dimension` buckets.
FeatureVector graph_features(const CallGraph& g, std::uint32_t vocab_size,
                             std::size_t pair_dimension = kDefaultPairDimension);

std::string export_graph(const CallGraph& g, GraphFormat format);

/// Inverse of export_graph(g, GraphFormat::Json). Throws UsageError on
/// malformed input.
CallGraph graph_from_json(const std::string& text);

} // namespace ama
