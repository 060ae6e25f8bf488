#pragma once

#include "ama/analyzer.hpp"
#include "ama/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ama::cli {

struct ExperimentConfig {
    std::uint64_t seed = 2024;
    std::uint32_t workers = 1;
    std::filesystem::path output_dir = "out";
    CorpusConfig corpus;
    /// Load the corpus from this file instead of generating it.
    std::optional<std::filesystem::path> corpus_path;
    AnalyzerConfig analyzer;
    std::vector<AgentSpec> agents;
    SweepConfig sweep;
};

/// The three agents compared by default: epsilon-BMC, constant epsilon and
/// annealed epsilon.
std::vector<AgentSpec> default_agents();

/// Parses and validates a config document. Relative paths are resolved
/// against `base_dir`. Throws ConfigError on any problem, including unknown keys.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace ama::cli
