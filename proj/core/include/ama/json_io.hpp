#pragma once

// JSON mappings shared by the corpus file and the experiment config.

#include "ama/malware_world.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace ama {

nlohmann::ordered_json to_json(const WorldConfig& config);
nlohmann::ordered_json to_json(const BehaviorKernel& kernel);

/// Missing keys keep their defaults; unknown keys throw ConfigError.
WorldConfig world_config_from_json(const nlohmann::json& doc);
BehaviorKernel kernel_from_json(const nlohmann::json& doc);

/// Throws ConfigError naming the first key of `doc` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& doc, std::initializer_list<const char*> allowed,
                         const std::string& where);

} // namespace ama
