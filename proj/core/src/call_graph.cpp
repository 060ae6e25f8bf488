#include "ama/call_graph.hpp"

#include "ama/error.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace ama {

namespace {

constexpr const char* kJsonFormat = "ama-callgraph";
constexpr int kJsonVersion = 1;

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string node_label(ApiCallId id)
{
    return id == kInit ? std::string("Init") : "api_" + std::to_string(id.value);
}

} // namespace

std::vector<double> FeatureVector::to_dense() const
{
    std::vector<double> dense(dimension, 0.0);
    for (std::size_t i = 0; i < index.size(); ++i) {
        dense[index[i]] = value[i];
    }
    return dense;
}

CallGraph::CallGraph(double kappa) : kappa_(kappa)
{
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw UsageError("Dirichlet prior kappa must be > 0");
    }
    nodes_.emplace(kInit, NodeStats{});
}

CallGraph new_graph(double kappa)
{
    return CallGraph(kappa);
}

NoveltyReport CallGraph::ingest_trace(ActionId triggered_by, const Trace& trace)
{
    if (trace.empty() || trace.front() != kInit) {
        throw UsageError("trace must start at Init");
    }
    NoveltyReport report;
    std::set<ApiCallId> fresh_nodes;
    std::set<std::pair<ApiCallId, ApiCallId>> fresh_edges;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const ApiCallId v = trace[i];
        auto [node_it, inserted] = nodes_.try_emplace(v);
        if (inserted) {
            fresh_nodes.insert(v);
        }
        node_it->second.visits += 1;
        node_it->second.triggers[triggered_by] += 1;
        if (i == 0) {
            continue;
        }
        const ApiCallId u = trace[i - 1];
        auto [edge_it, edge_new] = edges_.try_emplace({u, v}, 0);
        if (edge_new) {
            fresh_edges.insert({u, v});
        }
        edge_it->second += 1;
        out_counts_[u] += 1;
        total_transitions_ += 1;
    }
    report.new_nodes = fresh_nodes.size();
    report.new_edges = fresh_edges.size();
    return report;
}

std::uint64_t CallGraph::out_count(ApiCallId u) const
{
    auto it = out_counts_.find(u);
    return it == out_counts_.end() ? 0 : it->second;
}

std::vector<ApiCallId> CallGraph::successors(ApiCallId u) const
{
    std::vector<ApiCallId> out;
    for (auto it = edges_.lower_bound({u, ApiCallId{0}}); it != edges_.end() && it->first.first == u; ++it) {
        out.push_back(it->first.second);
    }
    return out;
}

double CallGraph::transition_probability(ApiCallId u, ApiCallId v) const
{
    if (!contains(u)) {
        throw UsageError("node is not in the call graph");
    }
    const auto support = static_cast<double>(successors(u).size());
    const double denom = static_cast<double>(out_count(u)) + kappa_ * (support + 1.0);
    auto it = edges_.find({u, v});
    const double count = it == edges_.end() ? 0.0 : static_cast<double>(it->second);
    return (count + kappa_) / denom;
}

double CallGraph::unknown_probability(ApiCallId u) const
{
    if (!contains(u)) {
        throw UsageError("node is not in the call graph");
    }
    const auto support = static_cast<double>(successors(u).size());
    return kappa_ / (static_cast<double>(out_count(u)) + kappa_ * (support + 1.0));
}

DirichletCounts CallGraph::dirichlet_counts() const
{
    DirichletCounts phi;
    phi.kappa = kappa_;
    for (const auto& [edge, count] : edges_) {
        phi.successors[edge.first][edge.second] = static_cast<double>(count) + kappa_;
    }
    return phi;
}

HyperState CallGraph::hyper_state(ApiCallId current) const
{
    if (!contains(current)) {
        throw UsageError("hyper-state node is not in the call graph");
    }
    return HyperState{current, dirichlet_counts()};
}

FeatureVector graph_features(const CallGraph& g, std::uint32_t vocab_size, std::size_t pair_dimension)
{
    if (vocab_size == 0 || pair_dimension == 0) {
        throw UsageError("feature dimensions must be positive");
    }
    std::map<std::uint32_t, double> sparse;

    std::uint64_t total = 0;
    for (const auto& [id, stats] : g.nodes()) {
        total += stats.visits;
    }
    if (total == 0) {
        sparse[kInit.value] = 1.0;
    } else {
        for (const auto& [id, stats] : g.nodes()) {
            if (id.value >= vocab_size) {
                throw UsageError("graph node outside the vocabulary");
            }
            if (stats.visits > 0) {
                sparse[id.value] = static_cast<double>(stats.visits) / static_cast<double>(total);
            }
        }
    }

    for (const auto& [edge, count] : g.edges()) {
        const std::uint64_t key = (std::uint64_t{edge.first.value} << 32) | edge.second.value;
        const auto bucket = static_cast<std::uint32_t>(vocab_size + mix64(key) % pair_dimension);
        sparse[bucket] += g.transition_probability(edge.first, edge.second);
    }

    FeatureVector out;
    out.dimension = vocab_size + pair_dimension;
    for (const auto& [i, x] : sparse) {
        out.index.push_back(i);
        out.value.push_back(x);
    }
    return out;
}

std::string export_graph(const CallGraph& g, GraphFormat format)
{
    std::ostringstream out;
    if (format == GraphFormat::Dot) {
        out << "digraph callgraph {\n";
        out << "  node [shape=box];\n";
        for (const auto& [id, stats] : g.nodes()) {
            out << "  n" << id.value << " [label=\"" << node_label(id) << "\\nvisits=" << stats.visits << "\"];\n";
        }
        out << std::setprecision(4) << std::fixed;
        for (const auto& [edge, count] : g.edges()) {
            out << "  n" << edge.first.value << " -> n" << edge.second.value << " [label=\"" << count << " ("
                << g.transition_probability(edge.first, edge.second) << ")\", weight=" << count << "];\n";
        }
        out << "}\n";
        return out.str();
    }

    nlohmann::ordered_json doc;
    doc["format"] = kJsonFormat;
    doc["version"] = kJsonVersion;
    doc["kappa"] = g.kappa();
    doc["total_transitions"] = g.total_transitions();
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& [id, stats] : g.nodes()) {
        nlohmann::ordered_json n;
        n["id"] = id.value;
        n["label"] = node_label(id);
        n["visits"] = stats.visits;
        auto triggers = nlohmann::ordered_json::array();
        for (const auto& [action, count] : stats.triggers) {
            triggers.push_back({{"action", action.value}, {"count", count}});
        }
        n["triggers"] = std::move(triggers);
        nodes.push_back(std::move(n));
    }
    doc["nodes"] = std::move(nodes);
    auto edges = nlohmann::ordered_json::array();
    for (const auto& [edge, count] : g.edges()) {
        edges.push_back({{"from", edge.first.value},
                         {"to", edge.second.value},
                         {"count", count},
                         {"probability", g.transition_probability(edge.first, edge.second)}});
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

CallGraph graph_from_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != kJsonFormat || doc.at("version").get<int>() != kJsonVersion) {
            throw UsageError("not an ama-callgraph v1 document");
        }
        CallGraph g(doc.at("kappa").get<double>());
        g.nodes_.clear();
        for (const auto& n : doc.at("nodes")) {
            NodeStats stats;
            stats.visits = n.at("visits").get<std::uint64_t>();
            for (const auto& t : n.at("triggers")) {
                stats.triggers[ActionId{t.at("action").get<std::uint32_t>()}] = t.at("count").get<std::uint64_t>();
            }
            g.nodes_[ApiCallId{n.at("id").get<std::uint32_t>()}] = std::move(stats);
        }
        if (!g.nodes_.contains(kInit)) {
            throw UsageError("graph document lacks the Init node");
        }
        for (const auto& e : doc.at("edges")) {
            const ApiCallId u{e.at("from").get<std::uint32_t>()};
            const ApiCallId v{e.at("to").get<std::uint32_t>()};
            if (!g.nodes_.contains(u) || !g.nodes_.contains(v)) {
                throw UsageError("edge references an unknown node");
            }
            const auto count = e.at("count").get<std::uint64_t>();
            g.edges_[{u, v}] = count;
            g.out_counts_[u] += count;
            g.total_transitions_ += count;
        }
        if (g.total_transitions_ != doc.at("total_transitions").get<std::uint64_t>()) {
            throw UsageError("edge counts do not sum to total_transitions");
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed graph document: ") + e.what());
    }
}

} // namespace ama
