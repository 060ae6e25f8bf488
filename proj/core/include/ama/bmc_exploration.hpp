#pragma once

// Exploration-rate controllers. All three variants share one interface:
// read epsilon(), feed observe() with the greedy, uniform and expected-SARSA
// targets of the transition just taken, reset() between samples.
//
// The epsilon-BMC controller treats epsilon as E[w] under a Beta(alpha, beta)
// posterior, where w is the weight of the uniform-return model in a two-model
// combination {greedy, uniform}. The evidence of each model is the
// Normal-Gamma posterior-predictive (Student-t) density of its target, with
// the Normal-Gamma fitted to the expected-SARSA return stream.

#include <cstdint>
#include <string>
#include <variant>

namespace ama {

struct NormalGammaParams {
    double mu0 = 0.0;
    double tau0 = 1.0;
    double a0 = 2.0;
    double b0 = 1.0;

    void validate() const;
};

/// Online mean and population variance (Welford).
struct ReturnStats {
    std::uint64_t count = 0;
    double mean_hat = 0.0;
    double var_hat = 0.0;
    double m2 = 0.0;

    void push(double x);
};

struct BetaWeight {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    void validate() const;
};

/// Normal-Gamma posterior (mu_t, tau_t, a_t, b_t).
struct NormalGammaPosterior {
    double mu = 0.0;
    double tau = 1.0;
    double a = 2.0;
    double b = 1.0;
};

NormalGammaPosterior normal_gamma_posterior(const NormalGammaParams& prior, const ReturnStats& stats);

/// Log density of the posterior predictive: a location-scale Student-t with
/// 2a degrees of freedom, location mu and squared scale b(tau+1)/(a tau).
double log_predictive_density(const NormalGammaPosterior& post, double x);

/// Result of projecting the two-component Beta mixture back onto one Beta.
struct MixtureProjection {
    double lambda_u = 0.5;
    double m1 = 0.5;
    double m2 = 0.0;
    BetaWeight projected;
    bool applied = false;
};

/// Posterior over w after one observation whose evidences under the uniform
/// and greedy models are exp(log_eu) and exp(log_eq). `applied` is false when
/// both evidences underflow or the mixture variance is degenerate, in which
/// case `projected` equals `prior`.
MixtureProjection beta_mixture_update(const BetaWeight& prior, double log_eu, double log_eq);

class ConstantEpsilon {
public:
    explicit ConstantEpsilon(double epsilon);

    double epsilon() const { return epsilon_; }
    void observe(double, double, double) {}
    void reset() {}

private:
    double epsilon_;
};

/// epsilon_n = max(epsilon_min, epsilon0 * decay^n), n = observed steps.
class AnnealedEpsilon {
public:
    AnnealedEpsilon(double epsilon0, double decay, double epsilon_min);

    double epsilon() const;
    void observe(double, double, double) { ++steps_; }
    void reset() { steps_ = 0; }

    std::uint64_t steps() const { return steps_; }

private:
    double epsilon0_;
    double decay_;
    double epsilon_min_;
    std::uint64_t steps_ = 0;
};

class EpsilonBmc {
public:
    EpsilonBmc(NormalGammaParams prior, BetaWeight weight_prior);

    double epsilon() const { return weight_.mean(); }

    /// Folds one transition's targets into the return statistics and the
    /// Beta posterior. All three targets must be finite.
    void observe(double g_q, double g_u, double g_exp);
    void reset();

    const ReturnStats& stats() const { return stats_; }
    const BetaWeight& weight() const { return weight_; }
    const NormalGammaParams& prior() const { return prior_; }
    NormalGammaPosterior posterior() const { return normal_gamma_posterior(prior_, stats_); }

    /// Steps whose Beta update was skipped (underflow or degenerate variance).
    std::uint64_t skipped_updates() const { return skipped_; }

private:
    NormalGammaParams prior_;
    BetaWeight weight_prior_;
    ReturnStats stats_;
    BetaWeight weight_;
    std::uint64_t skipped_ = 0;
};

struct ConstantSpec {
    double epsilon = 0.1;
};

struct AnnealedSpec {
    double epsilon0 = 1.0;
    double decay = 0.9;
    double epsilon_min = 0.05;
};

struct BmcSpec {
    NormalGammaParams prior;
    BetaWeight weight_prior;
};

using ControllerSpec = std::variant<ConstantSpec, AnnealedSpec, BmcSpec>;

class EpsilonController {
public:
    explicit EpsilonController(const ControllerSpec& spec);

    double epsilon() const;
    void observe(double g_q, double g_u, double g_exp);
    void reset();

    const std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc>& variant() const { return impl_; }

private:
    std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc> impl_;
};

/// "constant", "annealed" or "epsilon_bmc".
std::string controller_kind(const ControllerSpec& spec);

} // namespace ama
