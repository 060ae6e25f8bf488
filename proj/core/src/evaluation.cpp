#include "ama/evaluation.hpp"

#include "ama/csv.hpp"
#include "ama/error.hpp"
#include "ama/json_io.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace ama {

namespace {

constexpr const char* kCorpusFormat = "ama-corpus";
constexpr int kCorpusVersion = 1;

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng seeded(std::uint64_t seed, std::uint32_t tag)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return Rng(seq);
}

double dot(const std::vector<double>& w, const FeatureVector& x)
{
    double s = 0.0;
    for (std::size_t k = 0; k < x.index.size(); ++k) {
        s += w[x.index[k]] * x.value[k];
    }
    return s;
}

/// w = scale * v, with the bias stored as the weight of a constant feature.
struct ScaledBinarySvm {
    std::vector<double> v;
    double v_bias = 0.0;
    double scale = 1.0;

    explicit ScaledBinarySvm(std::size_t dim) : v(dim, 0.0) {}

    double score(const FeatureVector& x) const { return scale * (dot(v, x) + v_bias); }

    void shrink(double factor)
    {
        if (factor <= 0.0) {
            std::fill(v.begin(), v.end(), 0.0);
            v_bias = 0.0;
            scale = 1.0;
            return;
        }
        scale *= factor;
        if (scale < 1e-9) {
            for (auto& x : v) {
                x *= scale;
            }
            v_bias *= scale;
            scale = 1.0;
        }
    }

    void add(const FeatureVector& x, double coeff)
    {
        const double c = coeff / scale;
        for (std::size_t k = 0; k < x.index.size(); ++k) {
            v[x.index[k]] += c * x.value[k];
        }
        v_bias += c;
    }
};

std::vector<std::uint32_t> shuffled_labels(const std::vector<std::uint32_t>& labels, std::uint64_t seed)
{
    std::vector<std::uint32_t> out = labels;
    Rng rng = seeded(seed, 0x6e756c6c);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

double evaluate_f1(const std::vector<FeatureVector>& features, const std::vector<std::uint32_t>& labels,
                   std::uint32_t num_classes, const SplitSpec& split, const ClassifierHyper& hyper)
{
    const TrainedClassifier trained = train_classifier(features, labels, num_classes, split, hyper);
    std::vector<std::uint32_t> truth;
    truth.reserve(trained.test_indices.size());
    for (std::size_t i : trained.test_indices) {
        truth.push_back(labels[i]);
    }
    return macro_f1(trained.predictions, truth, num_classes).macro;
}

} // namespace

void CorpusConfig::validate() const
{
    if (families < 2) {
        throw UsageError("corpus needs at least 2 families");
    }
    if (samples_per_family < 2) {
        throw UsageError("corpus needs at least 2 samples per family");
    }
    world.validate();
}

Corpus build_corpus(const CorpusConfig& config, std::uint64_t seed)
{
    config.validate();
    Corpus corpus;
    corpus.world = config.world;
    corpus.family_count = config.families;
    corpus.samples_per_family = config.samples_per_family;
    corpus.seed = seed;

    Rng family_rng = seeded(seed, 0x66616d);
    for (std::uint32_t f = 0; f < config.families; ++f) {
        corpus.families.push_back(generate_family(family_rng, config.world, f));
    }
    Rng sample_rng = seeded(seed, 0x73616d);
    for (std::uint32_t f = 0; f < config.families; ++f) {
        for (std::uint32_t j = 0; j < config.samples_per_family; ++j) {
            const std::uint32_t id = f * config.samples_per_family + j;
            corpus.samples.push_back(instantiate_sample(corpus.families[f], sample_rng, config.world, id));
            corpus.labels.push_back(f);
        }
    }
    return corpus;
}

std::string corpus_to_json(const Corpus& corpus)
{
    nlohmann::ordered_json doc;
    doc["format"] = kCorpusFormat;
    doc["version"] = kCorpusVersion;
    doc["seed"] = corpus.seed;
    doc["families_count"] = corpus.family_count;
    doc["samples_per_family"] = corpus.samples_per_family;
    doc["world"] = to_json(corpus.world);
    auto families = nlohmann::ordered_json::array();
    for (const auto& f : corpus.families) {
        families.push_back({{"id", f.id},
                            {"intents_min", f.intents_min},
                            {"intents_max", f.intents_max},
                            {"kernel", to_json(f.kernel)}});
    }
    doc["families"] = std::move(families);
    auto samples = nlohmann::ordered_json::array();
    for (const auto& s : corpus.samples) {
        samples.push_back({{"id", s.id},
                           {"family", s.family},
                           {"manifest", s.manifest},
                           {"noise_rate", s.noise_rate},
                           {"noise_begin", s.noise_begin},
                           {"noise_end", s.noise_end},
                           {"max_trace_length", s.max_trace_length},
                           {"kernel", to_json(s.kernel)}});
    }
    doc["samples"] = std::move(samples);
    return doc.dump() + "\n";
}

Corpus corpus_from_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.at("format").get<std::string>() != kCorpusFormat || doc.at("version").get<int>() != kCorpusVersion) {
            throw UsageError("not an ama-corpus v1 document");
        }
        Corpus corpus;
        corpus.seed = doc.at("seed").get<std::uint64_t>();
        corpus.family_count = doc.at("families_count").get<std::uint32_t>();
        corpus.samples_per_family = doc.at("samples_per_family").get<std::uint32_t>();
        corpus.world = world_config_from_json(doc.at("world"));
        for (const auto& f : doc.at("families")) {
            FamilySpec family;
            family.id = f.at("id").get<std::uint32_t>();
            family.intents_min = f.at("intents_min").get<std::uint32_t>();
            family.intents_max = f.at("intents_max").get<std::uint32_t>();
            family.kernel = kernel_from_json(f.at("kernel"));
            family.kernel.validate();
            corpus.families.push_back(std::move(family));
        }
        for (const auto& s : doc.at("samples")) {
            MalwareSample sample;
            sample.id = s.at("id").get<std::uint32_t>();
            sample.family = s.at("family").get<std::uint32_t>();
            sample.manifest = s.at("manifest").get<std::vector<std::uint32_t>>();
            sample.noise_rate = s.at("noise_rate").get<double>();
            sample.noise_begin = s.at("noise_begin").get<std::uint32_t>();
            sample.noise_end = s.at("noise_end").get<std::uint32_t>();
            sample.max_trace_length = s.at("max_trace_length").get<std::uint32_t>();
            sample.kernel = kernel_from_json(s.at("kernel"));
            sample.validate();
            if (sample.family >= corpus.family_count) {
                throw UsageError("sample family label out of range");
            }
            corpus.labels.push_back(sample.family);
            corpus.samples.push_back(std::move(sample));
        }
        return corpus;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("malformed corpus document: ") + e.what());
    } catch (const ConfigError& e) {
        throw UsageError(std::string("malformed corpus document: ") + e.what());
    }
}

std::uint32_t LinearModel::predict(const FeatureVector& x) const
{
    std::uint32_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        const double s = dot(weights[c], x) + bias[c];
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

void stratified_split(const std::vector<std::uint32_t>& labels, std::uint32_t num_classes, const SplitSpec& split,
                      std::vector<std::size_t>& train, std::vector<std::size_t>& test)
{
    if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
        throw UsageError("train fraction must lie in (0,1)");
    }
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes) {
            throw UsageError("label out of range");
        }
        by_class[labels[i]].push_back(i);
    }
    Rng rng = seeded(split.seed, 0x73706c);
    train.clear();
    test.clear();
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t n = members.size();
        auto n_train = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(n)));
        if (n >= 2) {
            n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        }
        train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
}

TrainedClassifier train_classifier(const std::vector<FeatureVector>& features,
                                   const std::vector<std::uint32_t>& labels, std::uint32_t num_classes,
                                   const SplitSpec& split, const ClassifierHyper& hyper)
{
    if (features.size() != labels.size() || features.empty()) {
        throw UsageError("features and labels must be nonempty and aligned");
    }
    if (!(hyper.lambda > 0.0) || hyper.epochs == 0) {
        throw UsageError("classifier needs lambda > 0 and epochs >= 1");
    }
    const std::size_t dim = features.front().dimension;
    for (const auto& x : features) {
        if (x.dimension != dim) {
            throw UsageError("feature vectors disagree on dimension");
        }
    }

    TrainedClassifier out;
    stratified_split(labels, num_classes, split, out.train_indices, out.test_indices);
    std::vector<bool> seen(num_classes, false);
    std::uint32_t train_classes = 0;
    for (std::size_t i : out.train_indices) {
        if (!seen[labels[i]]) {
            seen[labels[i]] = true;
            ++train_classes;
        }
    }
    if (train_classes < 2 || out.test_indices.empty()) {
        throw UsageError("degenerate split: need >= 2 training classes and a nonempty test set");
    }

    std::vector<ScaledBinarySvm> svms(num_classes, ScaledBinarySvm(dim));
    std::vector<std::size_t> order = out.train_indices;
    Rng rng = seeded(split.seed, 0x737664);
    std::uint64_t t = 0;
    for (std::uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (hyper.lambda * static_cast<double>(t));
            const FeatureVector& x = features[i];
            for (std::uint32_t c = 0; c < num_classes; ++c) {
                const double y = labels[i] == c ? 1.0 : -1.0;
                const double margin = y * svms[c].score(x);
                svms[c].shrink(1.0 - eta * hyper.lambda);
                if (margin < 1.0) {
                    svms[c].add(x, eta * y);
                }
            }
        }
        out.epochs_run = epoch + 1;

        double hinge = 0.0;
        for (std::size_t i : out.train_indices) {
            for (std::uint32_t c = 0; c < num_classes; ++c) {
                const double y = labels[i] == c ? 1.0 : -1.0;
                hinge += std::max(0.0, 1.0 - y * svms[c].score(features[i]));
            }
        }
        out.final_train_hinge = hinge;
        if (hinge == 0.0) {
            break;
        }
    }

    out.model.num_classes = num_classes;
    out.model.dimension = dim;
    for (const auto& svm : svms) {
        std::vector<double> w(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            w[k] = svm.scale * svm.v[k];
        }
        out.model.weights.push_back(std::move(w));
        out.model.bias.push_back(svm.scale * svm.v_bias);
    }
    for (std::size_t i : out.test_indices) {
        out.predictions.push_back(out.model.predict(features[i]));
    }
    return out;
}

F1Report macro_f1(const std::vector<std::uint32_t>& predictions, const std::vector<std::uint32_t>& labels,
                  std::uint32_t num_classes)
{
    if (predictions.size() != labels.size()) {
        throw UsageError("predictions and labels differ in length");
    }
    std::vector<std::uint64_t> tp(num_classes, 0);
    std::vector<std::uint64_t> predicted(num_classes, 0);
    std::vector<std::uint64_t> actual(num_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= num_classes || predictions[i] >= num_classes) {
            throw UsageError("class index out of range");
        }
        ++predicted[predictions[i]];
        ++actual[labels[i]];
        if (predictions[i] == labels[i]) {
            ++tp[labels[i]];
        }
    }
    F1Report report;
    report.per_class.assign(num_classes, 0.0);
    report.included.assign(num_classes, false);
    double sum = 0.0;
    std::uint32_t counted = 0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        if (predicted[c] == 0 && actual[c] == 0) {
            continue;
        }
        report.included[c] = true;
        ++counted;
        if (tp[c] > 0) {
            const double precision = static_cast<double>(tp[c]) / static_cast<double>(predicted[c]);
            const double recall = static_cast<double>(tp[c]) / static_cast<double>(actual[c]);
            report.per_class[c] = 2.0 * precision * recall / (precision + recall);
        }
        sum += report.per_class[c];
    }
    report.macro = counted == 0 ? 0.0 : sum / static_cast<double>(counted);
    return report;
}

void SweepConfig::validate() const
{
    if (max_actions < 1) {
        throw UsageError("sweep max_actions must be >= 1");
    }
    if (seeds.empty()) {
        throw UsageError("sweep needs at least one seed");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie in (0,1)");
    }
    if (!(plateau_tolerance > 0.0)) {
        throw UsageError("plateau tolerance must be > 0");
    }
    if (pair_dimension == 0) {
        throw UsageError("pair dimension must be >= 1");
    }
}

std::vector<double> SweepResult::mean_curve() const
{
    std::vector<double> curve;
    curve.reserve(rows.size());
    for (const auto& r : rows) {
        curve.push_back(r.mean_f1);
    }
    return curve;
}

std::uint64_t analysis_seed(std::uint64_t seed, std::uint32_t sample_id)
{
    return mix64(mix64(seed) ^ (0x616e616cULL + sample_id));
}

SweepResult sweep_action_budget(const Corpus& corpus, const AgentSpec& agent, const AnalyzerConfig& analyzer,
                                const SweepConfig& config)
{
    config.validate();
    if (corpus.empty()) {
        throw UsageError("corpus is empty");
    }
    if (corpus.family_count < 2) {
        throw UsageError("sweep needs at least 2 families");
    }

    const std::uint32_t budgets = config.max_actions;
    const std::size_t n_samples = corpus.samples.size();
    SweepResult result;
    result.agent = agent.name;
    result.seeds = config.seeds;

    for (std::uint64_t seed : config.seeds) {
        // features[n-1][i]: graph of sample i after n actions.
        std::vector<std::vector<FeatureVector>> features(budgets, std::vector<FeatureVector>(n_samples));
        detail::parallel_for(n_samples, config.workers, [&](std::size_t i) {
            AnalyzerConfig cfg = analyzer;
            cfg.max_actions = budgets;
            cfg.controller = agent.controller;
            cfg.seed = analysis_seed(seed, corpus.samples[i].id);
            analyze_sample(corpus.samples[i], cfg, [&](const StepLog& log, const CallGraph& g) {
                features[log.step - 1][i] = graph_features(g, corpus.world.vocab_size, config.pair_dimension);
            });
        });

        const SplitSpec split{config.train_fraction, mix64(seed ^ 0x73706c6974ULL)};
        std::vector<double> curve(budgets, 0.0);
        detail::parallel_for(budgets, config.workers, [&](std::size_t n) {
            curve[n] = evaluate_f1(features[n], corpus.labels, corpus.family_count, split, config.classifier);
        });
        result.per_seed_f1.push_back(std::move(curve));
        result.null_f1.push_back(evaluate_f1(features.back(), shuffled_labels(corpus.labels, seed),
                                             corpus.family_count, split, config.classifier));
    }

    const auto n_seeds = static_cast<double>(config.seeds.size());
    for (std::uint32_t n = 0; n < budgets; ++n) {
        double mean = 0.0;
        for (const auto& curve : result.per_seed_f1) {
            mean += curve[n];
        }
        mean /= n_seeds;
        double var = 0.0;
        for (const auto& curve : result.per_seed_f1) {
            var += (curve[n] - mean) * (curve[n] - mean);
        }
        const double sd = config.seeds.size() > 1 ? std::sqrt(var / (n_seeds - 1.0)) : 0.0;
        result.rows.push_back(SweepRow{n + 1, mean, sd});
    }
    return result;
}

std::uint32_t optimal_actions(const std::vector<double>& curve, double tolerance)
{
    if (curve.empty()) {
        throw UsageError("empty F1 curve");
    }
    if (!(tolerance > 0.0)) {
        throw UsageError("plateau tolerance must be > 0");
    }
    const double best = *std::max_element(curve.begin(), curve.end());
    for (std::size_t n = 0; n < curve.size(); ++n) {
        if (curve[n] >= best - tolerance) {
            return static_cast<std::uint32_t>(n + 1);
        }
    }
    return static_cast<std::uint32_t>(curve.size());
}

std::uint32_t optimal_actions(const SweepResult& sweep, double tolerance)
{
    return optimal_actions(sweep.mean_curve(), tolerance);
}

std::vector<std::uint32_t> optimal_actions_per_seed(const SweepResult& sweep, double tolerance)
{
    std::vector<std::uint32_t> out;
    for (const auto& curve : sweep.per_seed_f1) {
        out.push_back(optimal_actions(curve, tolerance));
    }
    return out;
}

double median(std::vector<double> values)
{
    if (values.empty()) {
        throw UsageError("median of an empty list");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

ComparisonRow comparison_row(const SweepResult& sweep, double tolerance, double seconds_per_action)
{
    ComparisonRow row;
    row.agent = sweep.agent;
    row.optimal_actions = optimal_actions(sweep, tolerance);
    std::vector<double> per_seed;
    for (std::uint32_t n : optimal_actions_per_seed(sweep, tolerance)) {
        per_seed.push_back(static_cast<double>(n));
    }
    row.median_seed_optimal = per_seed.empty() ? static_cast<double>(row.optimal_actions) : median(per_seed);
    row.seconds = static_cast<double>(row.optimal_actions) * seconds_per_action;
    return row;
}

Comparison compare_agents(const Corpus& corpus, const std::vector<AgentSpec>& agents, const AnalyzerConfig& analyzer,
                          const SweepConfig& config)
{
    if (agents.empty()) {
        throw UsageError("agent list is empty");
    }
    Comparison out;
    for (const auto& agent : agents) {
        out.sweeps.push_back(sweep_action_budget(corpus, agent, analyzer, config));
        out.rows.push_back(comparison_row(out.sweeps.back(), config.plateau_tolerance, analyzer.seconds_per_action));
    }
    return out;
}

std::string sweep_csv(const SweepResult& sweep)
{
    std::ostringstream out;
    out << "budget,mean_f1,std_f1\n";
    for (const auto& r : sweep.rows) {
        out << r.budget << ',' << format_number(r.mean_f1) << ',' << format_number(r.std_f1) << '\n';
    }
    return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows)
{
    std::ostringstream out;
    out << "agent,optimal_actions,median_seed_optimal,seconds\n";
    for (const auto& r : rows) {
        out << csv_field(r.agent) << ',' << r.optimal_actions << ',' << format_number(r.median_seed_optimal) << ','
            << format_number(r.seconds) << '\n';
    }
    return out.str();
}

std::string comparison_text(const std::vector<ComparisonRow>& rows)
{
    std::size_t width = std::string("Analyzer Model").size();
    for (const auto& r : rows) {
        width = std::max(width, r.agent.size());
    }
    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(width)) << "Analyzer Model"
        << "  Analyzer Actions  Median/seed  Time [seconds]\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(static_cast<int>(width)) << r.agent << "  " << std::right << std::setw(16)
            << r.optimal_actions << "  " << std::setw(11) << format_number(r.median_seed_optimal) << "  "
            << std::setw(14) << format_number(r.seconds) << '\n';
    }
    return out.str();
}

} // namespace ama
