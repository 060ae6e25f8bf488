#include "commands.hpp"

#include "experiment_config.hpp"

#include "ama/analyzer.hpp"
#include "ama/call_graph.hpp"
#include "ama/csv.hpp"
#include "ama/error.hpp"
#include "ama/evaluation.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ama::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

/// Writes through a temporary so a failed command never leaves a partial file.
void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + path.string());
        }
        f << content;
        if (!f) {
            throw std::runtime_error("write failed for " + path.string());
        }
    }
    fs::rename(tmp, path);
}

ExperimentConfig resolve(const CommonOptions& opts)
{
    ExperimentConfig cfg = load_config(opts.config);
    if (opts.seed) {
        const std::uint64_t old = cfg.seed;
        cfg.seed = *opts.seed;
        // Derived sweep seeds follow the override.
        for (auto& s : cfg.sweep.seeds) {
            s = s - old + cfg.seed;
        }
    }
    if (opts.output_dir) {
        cfg.output_dir = *opts.output_dir;
    }
    return cfg;
}

Corpus obtain_corpus(const ExperimentConfig& cfg)
{
    if (cfg.corpus_path) {
        return corpus_from_json(read_file(*cfg.corpus_path));
    }
    return build_corpus(cfg.corpus, cfg.seed);
}

std::string metadata_line(const ExperimentConfig& cfg, const std::string& extra)
{
    std::string line = "# seed=" + std::to_string(cfg.seed);
    if (!extra.empty()) {
        line += " " + extra;
    }
    return line + "\n";
}

std::string safe_name(const std::string& name)
{
    std::string out;
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("agent") : out;
}

template <class Body>
int guarded(std::ostream& err, Body&& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

std::string sweep_document(const ExperimentConfig& cfg, const SweepResult& sweep)
{
    std::string extra = "agent=" + sweep.agent + " seeds=";
    for (std::size_t i = 0; i < sweep.seeds.size(); ++i) {
        extra += (i ? ";" : "") + std::to_string(sweep.seeds[i]);
    }
    double null_mean = 0.0;
    for (double x : sweep.null_f1) {
        null_mean += x;
    }
    null_mean /= static_cast<double>(std::max<std::size_t>(1, sweep.null_f1.size()));
    extra += " null_f1=" + format_number(null_mean);
    return metadata_line(cfg, extra) + sweep_csv(sweep);
}

void print_sweep(std::ostream& out, const SweepResult& sweep, double tolerance)
{
    out << "agent " << sweep.agent << " (optimal actions " << optimal_actions(sweep, tolerance) << ")\n";
    out << "  budget  mean_f1  std_f1\n";
    for (const auto& r : sweep.rows) {
        out << "  " << std::setw(6) << r.budget << "  " << std::fixed << std::setprecision(4) << r.mean_f1 << "   "
            << r.std_f1 << '\n';
        out.unsetf(std::ios::floatfield);
    }
}

} // namespace

int cmd_gen_corpus(const CommonOptions& opts, const fs::path& out_path, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve(opts);
        const Corpus corpus = build_corpus(cfg.corpus, cfg.seed);
        write_file(out_path, corpus_to_json(corpus));
        out << "wrote " << corpus.samples.size() << " samples (" << corpus.family_count << " families x "
            << corpus.samples_per_family << ") to " << out_path.string() << '\n';
        return static_cast<int>(kSuccess);
    });
}

int cmd_run(const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve(opts);
        const Corpus corpus = obtain_corpus(cfg);
        if (corpus.empty()) {
            throw UsageError("corpus is empty");
        }
        const fs::path root = cfg.output_dir / "run";
        std::size_t failures = 0;
        for (const AgentSpec& agent : cfg.agents) {
            const fs::path dir = root / safe_name(agent.name);
            for (const MalwareSample& sample : corpus.samples) {
                AnalyzerConfig acfg = cfg.analyzer;
                acfg.controller = agent.controller;
                acfg.seed = analysis_seed(cfg.seed, sample.id);
                const std::string stem = "sample_" + std::to_string(sample.id);
                try {
                    const AnalysisResult result = analyze_sample(sample, acfg);
                    std::string csv = metadata_line(cfg, "agent=" + agent.name + " sample=" + std::to_string(sample.id) +
                                                             " elapsed_seconds=" + format_number(result.elapsed_seconds));
                    csv += step_log_csv_header() + "\n";
                    for (const StepLog& log : result.steps) {
                        csv += step_log_csv_row(log) + "\n";
                    }
                    write_file(dir / (stem + ".csv"), csv);
                    write_file(dir / (stem + ".json"), export_graph(result.graph, GraphFormat::Json));
                    write_file(dir / (stem + ".dot"), export_graph(result.graph, GraphFormat::Dot));
                } catch (const std::exception& e) {
                    ++failures;
                    err << "sample " << sample.id << " (" << agent.name << "): " << e.what() << '\n';
                }
            }
        }
        nlohmann::ordered_json meta;
        meta["seed"] = cfg.seed;
        meta["corpus_seed"] = corpus.seed;
        meta["samples"] = corpus.samples.size();
        meta["max_actions"] = cfg.analyzer.max_actions;
        meta["seconds_per_action"] = cfg.analyzer.seconds_per_action;
        meta["elapsed_seconds_per_sample"] = cfg.analyzer.max_actions * cfg.analyzer.seconds_per_action;
        meta["failures"] = failures;
        auto agents = nlohmann::ordered_json::array();
        for (const auto& a : cfg.agents) {
            agents.push_back({{"name", a.name}, {"controller", controller_kind(a.controller)}});
        }
        meta["agents"] = std::move(agents);
        write_file(root / "metadata.json", meta.dump(2) + "\n");
        out << "analyzed " << corpus.samples.size() << " samples x " << cfg.agents.size() << " agents, "
            << cfg.analyzer.max_actions << " actions each; outputs in " << root.string() << '\n';
        if (failures > 0) {
            err << failures << " sample analyses failed\n";
            return static_cast<int>(kRuntimeFailure);
        }
        return static_cast<int>(kSuccess);
    });
}

int cmd_sweep(const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve(opts);
        const Corpus corpus = obtain_corpus(cfg);
        for (const AgentSpec& agent : cfg.agents) {
            const SweepResult sweep = sweep_action_budget(corpus, agent, cfg.analyzer, cfg.sweep);
            write_file(cfg.output_dir / ("sweep_" + safe_name(agent.name) + ".csv"), sweep_document(cfg, sweep));
            print_sweep(out, sweep, cfg.sweep.plateau_tolerance);
        }
        return static_cast<int>(kSuccess);
    });
}

int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = resolve(opts);
        const Corpus corpus = obtain_corpus(cfg);
        const Comparison cmp = compare_agents(corpus, cfg.agents, cfg.analyzer, cfg.sweep);
        for (const SweepResult& sweep : cmp.sweeps) {
            write_file(cfg.output_dir / ("sweep_" + safe_name(sweep.agent) + ".csv"), sweep_document(cfg, sweep));
        }
        write_file(cfg.output_dir / "comparison.csv",
                   metadata_line(cfg, "seconds_per_action=" + format_number(cfg.analyzer.seconds_per_action)) +
                       comparison_csv(cmp.rows));
        out << comparison_text(cmp.rows);
        return static_cast<int>(kSuccess);
    });
}

int cmd_export_graph(const fs::path& graph_path, const std::string& format, const std::optional<fs::path>& out_path,
                     std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        GraphFormat fmt;
        if (format == "dot") {
            fmt = GraphFormat::Dot;
        } else if (format == "json") {
            fmt = GraphFormat::Json;
        } else {
            throw ConfigError("unknown graph format '" + format + "' (expected dot or json)");
        }
        const CallGraph g = graph_from_json(read_file(graph_path));
        const std::string doc = export_graph(g, fmt);
        if (out_path) {
            write_file(*out_path, doc);
        } else {
            out << doc;
        }
        return static_cast<int>(kSuccess);
    });
}

} // namespace ama::cli
