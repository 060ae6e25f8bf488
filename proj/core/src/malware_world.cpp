#include "ama/malware_world.hpp"

#include "ama/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace ama {

namespace {

constexpr double kRowTolerance = 1e-9;

void check_row(const std::vector<double>& row, const char* what)
{
    double sum = 0.0;
    for (double p : row) {
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw UsageError(std::string(what) + ": negative or non-finite probability");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
        throw UsageError(std::string(what) + ": row does not sum to 1");
    }
}

std::size_t draw_index(const std::vector<double>& row, Rng& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] <= 0.0) {
            continue;
        }
        acc += row[i];
        last_positive = i;
        if (u < acc) {
            return i;
        }
    }
    return last_positive;
}

/// k distinct values from [0, n), in draw order.
std::vector<std::uint32_t> draw_distinct(std::uint32_t n, std::uint32_t k, Rng& rng)
{
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::uint32_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::uint32_t> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

std::vector<double> dirichlet(std::size_t k, Rng& rng)
{
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) {
        x = gamma(rng);
        sum += x;
    }
    if (!(sum > 0.0)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(k));
        return w;
    }
    for (auto& x : w) {
        x /= sum;
    }
    return w;
}

/// A row over n slots with random support of size [1, fanout] drawn from
/// `candidates` and Dirichlet(1) weights.
std::vector<double> sparse_row(std::size_t n, const std::vector<std::uint32_t>& candidates,
                               std::uint32_t fanout, Rng& rng)
{
    const auto limit = std::min<std::uint32_t>(fanout, static_cast<std::uint32_t>(candidates.size()));
    std::uniform_int_distribution<std::uint32_t> size_dist(1, limit);
    const std::uint32_t k = size_dist(rng);
    const auto picks = draw_distinct(static_cast<std::uint32_t>(candidates.size()), k, rng);
    const auto weights = dirichlet(k, rng);
    std::vector<double> row(n, 0.0);
    for (std::uint32_t i = 0; i < k; ++i) {
        row[candidates[picks[i]]] = weights[i];
    }
    return row;
}

std::vector<double> jitter_row(const std::vector<double>& row, double jitter, Rng& rng)
{
    if (jitter == 0.0) {
        return row;
    }
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] > 0.0) {
            support.push_back(i);
        }
    }
    const auto noise = dirichlet(support.size(), rng);
    std::vector<double> out(row.size(), 0.0);
    double sum = 0.0;
    for (std::size_t s = 0; s < support.size(); ++s) {
        const std::size_t i = support[s];
        out[i] = (1.0 - jitter) * row[i] + jitter * noise[s];
        sum += out[i];
    }
    for (auto& p : out) {
        p /= sum;
    }
    return out;
}

using EmbeddedKernel = std::map<std::pair<std::uint32_t, std::uint32_t>, double>;

EmbeddedKernel embed(const BehaviorKernel& k)
{
    constexpr std::uint32_t kStop = std::numeric_limits<std::uint32_t>::max();
    EmbeddedKernel out;
    const double intents = static_cast<double>(k.entry.size());
    for (const auto& row : k.entry) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (row[i] > 0.0) {
                out[{kInit.value, k.nodes[i].value}] += row[i] / intents;
            }
        }
    }
    for (std::size_t i = 0; i < k.nodes.size(); ++i) {
        const std::uint32_t u = k.nodes[i].value;
        out[{u, kStop}] += k.terminal[i];
        for (std::size_t j = 0; j < k.nodes.size(); ++j) {
            if (k.transition[i][j] > 0.0) {
                out[{u, k.nodes[j].value}] += (1.0 - k.terminal[i]) * k.transition[i][j];
            }
        }
    }
    return out;
}

} // namespace

void WorldConfig::validate() const
{
    if (nodes_per_family < 2) {
        throw UsageError("nodes_per_family must be >= 2");
    }
    if (vocab_size < nodes_per_family) {
        throw UsageError("vocab_size must be >= nodes_per_family");
    }
    if (noise_pool >= vocab_size || vocab_size - noise_pool < nodes_per_family) {
        throw UsageError("noise pool leaves too few informative API ids for one family");
    }
    if (!(shared_fraction >= 0.0 && shared_fraction <= 1.0)) {
        throw UsageError("shared_fraction must lie in [0,1]");
    }
    const std::uint32_t informative = noise_begin() - 1;
    if (shared_pool > informative) {
        throw UsageError("shared pool exceeds the informative vocabulary");
    }
    if (shared_nodes() > shared_pool) {
        throw UsageError("shared pool is smaller than the shared part of a family");
    }
    if (nodes_per_family - 1 - shared_nodes() > informative - shared_pool) {
        throw UsageError("too few family-specific API ids for one family");
    }
    if (intents_min < 1 || intents_max < intents_min) {
        throw UsageError("intent range must satisfy 1 <= intents_min <= intents_max");
    }
    if (!(terminal_min > 0.0 && terminal_min <= terminal_max && terminal_max <= 1.0)) {
        throw UsageError("terminal range must satisfy 0 < min <= max <= 1");
    }
    if (max_trace_length < 2) {
        throw UsageError("max_trace_length must be >= 2");
    }
    if (max_fanout < 1) {
        throw UsageError("max_fanout must be >= 1");
    }
    if (!(jitter >= 0.0 && jitter < 1.0)) {
        throw UsageError("jitter must lie in [0,1)");
    }
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
        throw UsageError("noise_rate must lie in [0,1)");
    }
    if (noise_rate > 0.0 && noise_pool == 0) {
        throw UsageError("noise_rate > 0 requires a nonempty noise pool");
    }
}

std::uint32_t WorldConfig::shared_nodes() const
{
    const auto k = static_cast<double>(nodes_per_family - 1);
    return static_cast<std::uint32_t>(std::llround(shared_fraction * k));
}

void BehaviorKernel::validate() const
{
    const std::size_t n = nodes.size();
    if (n == 0) {
        throw UsageError("kernel has no nodes");
    }
    if (entry.empty()) {
        throw UsageError("kernel has no intents");
    }
    if (transition.size() != n || terminal.size() != n) {
        throw UsageError("kernel tables disagree on node count");
    }
    for (const auto& row : entry) {
        if (row.size() != n) {
            throw UsageError("entry row has wrong width");
        }
        check_row(row, "entry");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (transition[i].size() != n) {
            throw UsageError("transition row has wrong width");
        }
        check_row(transition[i], "transition");
        if (!(terminal[i] >= 0.0 && terminal[i] <= 1.0)) {
            throw UsageError("terminal probability outside [0,1]");
        }
        if (nodes[i] == kInit) {
            throw UsageError("Init cannot be a kernel node");
        }
    }
}

void MalwareSample::validate() const
{
    kernel.validate();
    if (manifest.empty()) {
        throw UsageError("manifest must be nonempty");
    }
    if (manifest.size() != kernel.entry.size()) {
        throw UsageError("manifest and entry rows disagree");
    }
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
        throw UsageError("noise_rate must lie in [0,1)");
    }
    if (noise_rate > 0.0 && noise_end <= noise_begin) {
        throw UsageError("noise_rate > 0 requires a nonempty noise pool");
    }
    if (max_trace_length < 2) {
        throw UsageError("max_trace_length must be >= 2");
    }
}

FamilySpec generate_family(Rng& rng, const WorldConfig& config, std::uint32_t family_id)
{
    config.validate();
    const std::uint32_t k = config.nodes_per_family - 1;
    const std::uint32_t shared = config.shared_nodes();
    const std::uint32_t specific_pool = config.noise_begin() - 1 - config.shared_pool;

    FamilySpec family;
    family.id = family_id;
    family.intents_min = config.intents_min;
    family.intents_max = config.intents_max;

    BehaviorKernel& kernel = family.kernel;
    for (std::uint32_t local : draw_distinct(config.shared_pool, shared, rng)) {
        kernel.nodes.push_back(ApiCallId{local + 1});
    }
    for (std::uint32_t local : draw_distinct(specific_pool, k - shared, rng)) {
        kernel.nodes.push_back(ApiCallId{local + 1 + config.shared_pool});
    }

    std::vector<std::uint32_t> all(k);
    std::iota(all.begin(), all.end(), 0u);
    for (std::uint32_t intent = 0; intent < config.intents_max; ++intent) {
        kernel.entry.push_back(sparse_row(k, all, config.max_fanout, rng));
    }

    std::uniform_real_distribution<double> terminal(config.terminal_min, config.terminal_max);
    for (std::uint32_t i = 0; i < k; ++i) {
        std::vector<std::uint32_t> others;
        for (std::uint32_t j = 0; j < k; ++j) {
            if (j != i || k == 1) {
                others.push_back(j);
            }
        }
        kernel.transition.push_back(sparse_row(k, others, config.max_fanout, rng));
        kernel.terminal.push_back(config.terminal_min == config.terminal_max ? config.terminal_min
                                                                             : terminal(rng));
    }
    kernel.validate();
    return family;
}

MalwareSample instantiate_sample(const FamilySpec& family, Rng& rng, const WorldConfig& config,
                                 std::uint32_t sample_id)
{
    return instantiate_sample(family, rng, config, config.jitter, config.noise_rate, sample_id);
}

MalwareSample instantiate_sample(const FamilySpec& family, Rng& rng, const WorldConfig& config,
                                 double jitter, double noise_rate, std::uint32_t sample_id)
{
    if (!(jitter >= 0.0 && jitter < 1.0)) {
        throw UsageError("jitter must lie in [0,1)");
    }
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) {
        throw UsageError("noise_rate must lie in [0,1)");
    }
    const auto pool = static_cast<std::uint32_t>(family.kernel.entry.size());
    const std::uint32_t lo = std::min(family.intents_min, pool);
    const std::uint32_t hi = std::min(family.intents_max, pool);
    std::uniform_int_distribution<std::uint32_t> count_dist(lo, hi);

    MalwareSample sample;
    sample.id = sample_id;
    sample.family = family.id;
    sample.manifest = draw_distinct(pool, count_dist(rng), rng);
    sample.noise_rate = noise_rate;
    sample.noise_begin = config.noise_begin();
    sample.noise_end = config.vocab_size;
    sample.max_trace_length = config.max_trace_length;

    const BehaviorKernel& base = family.kernel;
    sample.kernel.nodes = base.nodes;
    sample.kernel.terminal = base.terminal;
    for (std::uint32_t intent : sample.manifest) {
        sample.kernel.entry.push_back(jitter_row(base.entry[intent], jitter, rng));
    }
    for (const auto& row : base.transition) {
        sample.kernel.transition.push_back(jitter_row(row, jitter, rng));
    }
    sample.validate();
    return sample;
}

std::vector<ActionId> extract_action_space(const MalwareSample& sample)
{
    std::vector<ActionId> actions;
    actions.reserve(sample.manifest.size());
    for (std::uint32_t k = 0; k < sample.manifest.size(); ++k) {
        actions.push_back(ActionId{k});
    }
    return actions;
}

Trace execute_trigger(const MalwareSample& sample, ActionId action, Rng& rng)
{
    if (action.value >= sample.kernel.entry.size()) {
        throw UsageError("action is not in the sample's manifest");
    }
    const BehaviorKernel& k = sample.kernel;
    const std::size_t cap = sample.max_trace_length;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Trace trace{kInit};
    std::size_t node = draw_index(k.entry[action.value], rng);
    trace.push_back(k.nodes[node]);
    while (trace.size() < cap) {
        if (unit(rng) < k.terminal[node]) {
            break;
        }
        if (sample.noise_rate > 0.0 && trace.size() + 2 <= cap && unit(rng) < sample.noise_rate) {
            std::uniform_int_distribution<std::uint32_t> noise(sample.noise_begin, sample.noise_end - 1);
            trace.push_back(ApiCallId{noise(rng)});
        }
        node = draw_index(k.transition[node], rng);
        trace.push_back(k.nodes[node]);
    }
    return trace;
}

void reset_environment(const MalwareSample&) {}

double kernel_l1_distance(const BehaviorKernel& a, const BehaviorKernel& b)
{
    const EmbeddedKernel ea = embed(a);
    const EmbeddedKernel eb = embed(b);
    double dist = 0.0;
    for (const auto& [key, p] : ea) {
        auto it = eb.find(key);
        dist += std::abs(p - (it == eb.end() ? 0.0 : it->second));
    }
    for (const auto& [key, p] : eb) {
        if (!ea.contains(key)) {
            dist += p;
        }
    }
    return dist;
}

} // namespace ama
