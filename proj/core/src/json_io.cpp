#include "ama/json_io.hpp"

#include "ama/error.hpp"

#include <algorithm>
#include <cstring>

namespace ama {

void reject_unknown_keys(const nlohmann::json& doc, std::initializer_list<const char*> allowed,
                         const std::string& where)
{
    if (!doc.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    for (const auto& [key, value] : doc.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return key == k; });
        if (!known) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

nlohmann::ordered_json to_json(const WorldConfig& c)
{
    return {
        {"vocab_size", c.vocab_size},
        {"nodes_per_family", c.nodes_per_family},
        {"intents_min", c.intents_min},
        {"intents_max", c.intents_max},
        {"terminal_min", c.terminal_min},
        {"terminal_max", c.terminal_max},
        {"noise_pool", c.noise_pool},
        {"shared_pool", c.shared_pool},
        {"shared_fraction", c.shared_fraction},
        {"max_trace_length", c.max_trace_length},
        {"max_fanout", c.max_fanout},
        {"jitter", c.jitter},
        {"noise_rate", c.noise_rate},
    };
}

WorldConfig world_config_from_json(const nlohmann::json& doc)
{
    reject_unknown_keys(doc,
                        {"vocab_size", "nodes_per_family", "intents_min", "intents_max", "terminal_min",
                         "terminal_max", "noise_pool", "shared_pool", "shared_fraction", "max_trace_length", "max_fanout", "jitter", "noise_rate"},
                        "world");
    WorldConfig c;
    c.vocab_size = doc.value("vocab_size", c.vocab_size);
    c.nodes_per_family = doc.value("nodes_per_family", c.nodes_per_family);
    c.intents_min = doc.value("intents_min", c.intents_min);
    c.intents_max = doc.value("intents_max", c.intents_max);
    c.terminal_min = doc.value("terminal_min", c.terminal_min);
    c.terminal_max = doc.value("terminal_max", c.terminal_max);
    c.noise_pool = doc.value("noise_pool", c.noise_pool);
    c.shared_pool = doc.value("shared_pool", c.shared_pool);
    c.shared_fraction = doc.value("shared_fraction", c.shared_fraction);
    c.max_trace_length = doc.value("max_trace_length", c.max_trace_length);
    c.max_fanout = doc.value("max_fanout", c.max_fanout);
    c.jitter = doc.value("jitter", c.jitter);
    c.noise_rate = doc.value("noise_rate", c.noise_rate);
    return c;
}

nlohmann::ordered_json to_json(const BehaviorKernel& k)
{
    auto nodes = nlohmann::ordered_json::array();
    for (ApiCallId id : k.nodes) {
        nodes.push_back(id.value);
    }
    return {
        {"nodes", std::move(nodes)},
        {"entry", k.entry},
        {"transition", k.transition},
        {"terminal", k.terminal},
    };
}

BehaviorKernel kernel_from_json(const nlohmann::json& doc)
{
    BehaviorKernel k;
    for (const auto& id : doc.at("nodes")) {
        k.nodes.push_back(ApiCallId{id.get<std::uint32_t>()});
    }
    k.entry = doc.at("entry").get<std::vector<std::vector<double>>>();
    k.transition = doc.at("transition").get<std::vector<std::vector<double>>>();
    k.terminal = doc.at("terminal").get<std::vector<double>>();
    return k;
}

} // namespace ama
