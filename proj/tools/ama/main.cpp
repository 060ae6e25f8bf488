#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace ama::cli;

    CLI::App app{"Active malware analysis lab: epsilon-BMC analyzer agents on synthetic malware corpora"};
    app.require_subcommand(1);

    CommonOptions common;
    std::uint64_t seed = 0;
    std::string output_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", common.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "Override the master seed");
        cmd->add_option("--out-dir", output_dir, "Override the output directory");
    };

    std::string corpus_out;
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic corpus and write it as JSON");
    add_common(gen);
    gen->add_option("-o,--output", corpus_out, "Corpus file to write")->required();

    auto* run = app.add_subcommand("run", "Analyze every sample; write graphs and step logs");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "Macro-F1 versus action budget for every agent");
    add_common(sweep);
    auto* compare = app.add_subcommand("compare", "Optimal action count and simulated time per agent");
    add_common(compare);

    std::string graph_in;
    std::string format = "dot";
    std::string graph_out;
    auto* exp = app.add_subcommand("export-graph", "Convert a graph JSON document to DOT or JSON");
    exp->add_option("graph", graph_in, "Graph JSON file")->required()->check(CLI::ExistingFile);
    exp->add_option("-f,--format", format, "dot or json");
    exp->add_option("-o,--output", graph_out, "Output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kConfigError;
    }

    for (auto* cmd : {gen, run, sweep, compare}) {
        if (cmd->parsed()) {
            if (cmd->count("--seed") > 0) {
                common.seed = seed;
            }
            if (cmd->count("--out-dir") > 0) {
                common.output_dir = output_dir;
            }
        }
    }

    if (gen->parsed()) {
        return cmd_gen_corpus(common, corpus_out, std::cout, std::cerr);
    }
    if (run->parsed()) {
        return cmd_run(common, std::cout, std::cerr);
    }
    if (sweep->parsed()) {
        return cmd_sweep(common, std::cout, std::cerr);
    }
    if (compare->parsed()) {
        return cmd_compare(common, std::cout, std::cerr);
    }
    std::optional<std::filesystem::path> out_path;
    if (!graph_out.empty()) {
        out_path = graph_out;
    }
    return cmd_export_graph(graph_in, format, out_path, std::cout, std::cerr);
}
