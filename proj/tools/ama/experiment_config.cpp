#include "experiment_config.hpp"

#include "ama/error.hpp"
#include "ama/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ama::cli {

namespace {

using nlohmann::json;

AgentSpec parse_agent(const json& doc, std::size_t index)
{
    const std::string where = "agents[" + std::to_string(index) + "]";
    reject_unknown_keys(doc,
                        {"name", "controller", "epsilon", "epsilon0", "decay", "epsilon_min", "prior", "alpha", "beta"},
                        where);
    AgentSpec agent;
    const std::string kind = doc.value("controller", std::string("epsilon_bmc"));
    agent.name = doc.value("name", kind);
    if (kind == "constant") {
        reject_unknown_keys(doc, {"name", "controller", "epsilon"}, where);
        agent.controller = ConstantSpec{doc.value("epsilon", ConstantSpec{}.epsilon)};
    } else if (kind == "annealed") {
        reject_unknown_keys(doc, {"name", "controller", "epsilon0", "decay", "epsilon_min"}, where);
        AnnealedSpec s;
        s.epsilon0 = doc.value("epsilon0", s.epsilon0);
        s.decay = doc.value("decay", s.decay);
        s.epsilon_min = doc.value("epsilon_min", s.epsilon_min);
        agent.controller = s;
    } else if (kind == "epsilon_bmc") {
        reject_unknown_keys(doc, {"name", "controller", "prior", "alpha", "beta"}, where);
        BmcSpec s;
        if (doc.contains("prior")) {
            const json& p = doc.at("prior");
            reject_unknown_keys(p, {"mu0", "tau0", "a0", "b0"}, where + ".prior");
            s.prior.mu0 = p.value("mu0", s.prior.mu0);
            s.prior.tau0 = p.value("tau0", s.prior.tau0);
            s.prior.a0 = p.value("a0", s.prior.a0);
            s.prior.b0 = p.value("b0", s.prior.b0);
        }
        s.weight_prior.alpha = doc.value("alpha", s.weight_prior.alpha);
        s.weight_prior.beta = doc.value("beta", s.weight_prior.beta);
        agent.controller = s;
    } else {
        throw ConfigError(where + ": unknown controller '" + kind + "'");
    }
    try {
        EpsilonController probe(agent.controller);
    } catch (const UsageError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return agent;
}

RewardKind parse_reward(const std::string& name)
{
    if (name == "novelty") {
        return RewardKind::Novelty;
    }
    if (name == "new_nodes") {
        return RewardKind::NewNodes;
    }
    throw ConfigError("analyzer.reward: unknown reward '" + name + "'");
}

} // namespace

std::vector<AgentSpec> default_agents()
{
    return {
        AgentSpec{"epsilon-bmc", BmcSpec{}},
        AgentSpec{"constant-epsilon", ConstantSpec{}},
        AgentSpec{"annealed-epsilon", AnnealedSpec{}},
    };
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir)
{
    ExperimentConfig cfg;
    try {
        const json doc = json::parse(text);
        reject_unknown_keys(doc, {"seed", "workers", "output_dir", "world", "corpus", "analyzer", "agents", "sweep"},
                            "config");
        cfg.seed = doc.value("seed", cfg.seed);
        cfg.workers = doc.value("workers", cfg.workers);
        if (doc.contains("output_dir")) {
            cfg.output_dir = doc.at("output_dir").get<std::string>();
        }
        if (cfg.output_dir.is_relative() && !base_dir.empty()) {
            cfg.output_dir = base_dir / cfg.output_dir;
        }
        if (doc.contains("world")) {
            cfg.corpus.world = world_config_from_json(doc.at("world"));
        }
        if (doc.contains("corpus")) {
            const json& c = doc.at("corpus");
            reject_unknown_keys(c, {"families", "samples_per_family", "path"}, "corpus");
            cfg.corpus.families = c.value("families", cfg.corpus.families);
            cfg.corpus.samples_per_family = c.value("samples_per_family", cfg.corpus.samples_per_family);
            if (c.contains("path")) {
                std::filesystem::path p = c.at("path").get<std::string>();
                cfg.corpus_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            }
        }
        if (doc.contains("analyzer")) {
            const json& a = doc.at("analyzer");
            reject_unknown_keys(a, {"max_actions", "gamma", "eta", "seconds_per_action", "reward", "kappa"},
                                "analyzer");
            cfg.analyzer.max_actions = a.value("max_actions", cfg.analyzer.max_actions);
            cfg.analyzer.learning.gamma = a.value("gamma", cfg.analyzer.learning.gamma);
            cfg.analyzer.learning.eta = a.value("eta", cfg.analyzer.learning.eta);
            cfg.analyzer.seconds_per_action = a.value("seconds_per_action", cfg.analyzer.seconds_per_action);
            cfg.analyzer.kappa = a.value("kappa", cfg.analyzer.kappa);
            cfg.analyzer.reward = parse_reward(a.value("reward", std::string("novelty")));
        }
        if (doc.contains("agents")) {
            const json& list = doc.at("agents");
            if (!list.is_array() || list.empty()) {
                throw ConfigError("agents: expected a nonempty array");
            }
            std::set<std::string> names;
            for (std::size_t i = 0; i < list.size(); ++i) {
                cfg.agents.push_back(parse_agent(list[i], i));
                if (!names.insert(cfg.agents.back().name).second) {
                    throw ConfigError("agents: duplicate name '" + cfg.agents.back().name + "'");
                }
            }
        } else {
            cfg.agents = default_agents();
        }
        if (doc.contains("sweep")) {
            const json& s = doc.at("sweep");
            reject_unknown_keys(s,
                                {"max_actions", "seeds", "num_seeds", "train_fraction", "lambda", "epochs",
                                 "plateau_tolerance", "pair_dimension"},
                                "sweep");
            cfg.sweep.max_actions = s.value("max_actions", cfg.sweep.max_actions);
            if (s.contains("seeds") && s.contains("num_seeds")) {
                throw ConfigError("sweep: give either seeds or num_seeds, not both");
            }
            if (s.contains("seeds")) {
                cfg.sweep.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
            } else {
                const auto n = s.value("num_seeds", std::uint32_t{5});
                cfg.sweep.seeds.clear();
                for (std::uint32_t k = 0; k < n; ++k) {
                    cfg.sweep.seeds.push_back(cfg.seed + k);
                }
            }
            cfg.sweep.train_fraction = s.value("train_fraction", cfg.sweep.train_fraction);
            cfg.sweep.classifier.lambda = s.value("lambda", cfg.sweep.classifier.lambda);
            cfg.sweep.classifier.epochs = s.value("epochs", cfg.sweep.classifier.epochs);
            cfg.sweep.plateau_tolerance = s.value("plateau_tolerance", cfg.sweep.plateau_tolerance);
            cfg.sweep.pair_dimension = s.value("pair_dimension", cfg.sweep.pair_dimension);
        } else {
            cfg.sweep.seeds.clear();
            for (std::uint32_t k = 0; k < 5; ++k) {
                cfg.sweep.seeds.push_back(cfg.seed + k);
            }
        }
        cfg.sweep.workers = cfg.workers;

        if (cfg.workers < 1) {
            throw ConfigError("workers must be >= 1");
        }
        cfg.corpus.validate();
        cfg.analyzer.validate();
        cfg.sweep.validate();
        if (!(cfg.sweep.classifier.lambda > 0.0) || cfg.sweep.classifier.epochs == 0) {
            throw ConfigError("sweep: lambda must be > 0 and epochs >= 1");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const UsageError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path());
}

} // namespace ama::cli
