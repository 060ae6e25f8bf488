#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace ama::cli {

enum ExitCode : int {
    kSuccess = 0,
    kConfigError = 2,
    kRuntimeFailure = 3,
};

struct CommonOptions {
    std::filesystem::path config;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> output_dir;
};

int cmd_gen_corpus(const CommonOptions& opts, const std::filesystem::path& out_path, std::ostream& out,
                   std::ostream& err);
int cmd_run(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err);

/// Converts a graph JSON document to `format` ("dot" or "json").
int cmd_export_graph(const std::filesystem::path& graph_path, const std::string& format,
                     const std::optional<std::filesystem::path>& out_path, std::ostream& out, std::ostream& err);

} // namespace ama::cli
