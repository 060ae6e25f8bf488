#include "ama/bmc_exploration.hpp"

#include "ama/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ama {

void NormalGammaParams::validate() const
{
    if (!std::isfinite(mu0)) {
        throw UsageError("mu0 must be finite");
    }
    if (!(tau0 > 0.0) || !std::isfinite(tau0)) {
        throw UsageError("tau0 must be > 0");
    }
    // a0 > 1 keeps the predictive variance finite.
    if (!(a0 > 1.0) || !std::isfinite(a0)) {
        throw UsageError("a0 must be > 1");
    }
    if (!(b0 > 0.0) || !std::isfinite(b0)) {
        throw UsageError("b0 must be > 0");
    }
}

void ReturnStats::push(double x)
{
    ++count;
    const double delta = x - mean_hat;
    mean_hat += delta / static_cast<double>(count);
    m2 += delta * (x - mean_hat);
    var_hat = count > 1 ? m2 / static_cast<double>(count) : 0.0;
}

void BetaWeight::validate() const
{
    if (!(alpha > 0.0 && std::isfinite(alpha) && beta > 0.0 && std::isfinite(beta))) {
        throw UsageError("Beta parameters must be positive and finite");
    }
}

NormalGammaPosterior normal_gamma_posterior(const NormalGammaParams& prior, const ReturnStats& stats)
{
    const double t = static_cast<double>(stats.count);
    const double tau = prior.tau0 + t;
    const double dev = stats.mean_hat - prior.mu0;
    NormalGammaPosterior post;
    post.tau = tau;
    post.mu = (prior.tau0 * prior.mu0 + t * stats.mean_hat) / tau;
    post.a = prior.a0 + 0.5 * t;
    post.b = prior.b0 + 0.5 * (t * stats.var_hat + prior.tau0 * t * dev * dev / tau);
    return post;
}

double log_predictive_density(const NormalGammaPosterior& post, double x)
{
    const double nu = 2.0 * post.a;
    const double scale2 = post.b * (post.tau + 1.0) / (post.a * post.tau);
    const double z = x - post.mu;
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu)
           - 0.5 * std::log(nu * std::numbers::pi * scale2)
           - 0.5 * (nu + 1.0) * std::log1p(z * z / (nu * scale2));
}

MixtureProjection beta_mixture_update(const BetaWeight& prior, double log_eu, double log_eq)
{
    MixtureProjection out;
    out.projected = prior;
    out.m1 = prior.mean();

    const double log_wu = std::log(prior.alpha) + log_eu;
    const double log_wq = std::log(prior.beta) + log_eq;
    const double top = std::max(log_wu, log_wq);
    if (!std::isfinite(top)) {
        return out;
    }
    const double wu = std::exp(log_wu - top);
    const double wq = std::exp(log_wq - top);
    const double lambda_u = wu / (wu + wq);
    const double lambda_q = 1.0 - lambda_u;

    const double a = prior.alpha;
    const double n = prior.alpha + prior.beta;
    // Beta(a+1, b) and Beta(a, b+1) first and second raw moments.
    const double mean_u = (a + 1.0) / (n + 1.0);
    const double mean_q = a / (n + 1.0);
    const double sq_u = (a + 1.0) * (a + 2.0) / ((n + 1.0) * (n + 2.0));
    const double sq_q = a * (a + 1.0) / ((n + 1.0) * (n + 2.0));

    const double m1 = lambda_u * mean_u + lambda_q * mean_q;
    const double m2 = lambda_u * sq_u + lambda_q * sq_q;
    out.lambda_u = lambda_u;
    out.m1 = m1;
    out.m2 = m2;

    const double var = m2 - m1 * m1;
    if (!(var > 1e-15)) {
        out.m1 = prior.mean();
        return out;
    }
    const double common = (m1 - m2) / var;
    const BetaWeight next{m1 * common, (1.0 - m1) * common};
    if (!(next.alpha > 0.0 && std::isfinite(next.alpha) && next.beta > 0.0 && std::isfinite(next.beta))) {
        out.m1 = prior.mean();
        return out;
    }
    out.projected = next;
    out.applied = true;
    return out;
}

ConstantEpsilon::ConstantEpsilon(double epsilon) : epsilon_(epsilon)
{
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw UsageError("constant epsilon must lie in [0,1]");
    }
}

AnnealedEpsilon::AnnealedEpsilon(double epsilon0, double decay, double epsilon_min)
    : epsilon0_(epsilon0), decay_(decay), epsilon_min_(epsilon_min)
{
    if (!(epsilon0 >= 0.0 && epsilon0 <= 1.0)) {
        throw UsageError("epsilon0 must lie in [0,1]");
    }
    if (!(decay > 0.0 && decay <= 1.0)) {
        throw UsageError("decay must lie in (0,1]");
    }
    if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon0)) {
        throw UsageError("epsilon_min must lie in [0, epsilon0]");
    }
}

double AnnealedEpsilon::epsilon() const
{
    return std::max(epsilon_min_, epsilon0_ * std::pow(decay_, static_cast<double>(steps_)));
}

EpsilonBmc::EpsilonBmc(NormalGammaParams prior, BetaWeight weight_prior)
    : prior_(prior), weight_prior_(weight_prior), weight_(weight_prior)
{
    prior_.validate();
    weight_prior_.validate();
}

void EpsilonBmc::observe(double g_q, double g_u, double g_exp)
{
    if (!std::isfinite(g_q) || !std::isfinite(g_u) || !std::isfinite(g_exp)) {
        throw NumericError("epsilon-BMC targets must be finite");
    }
    stats_.push(g_exp);
    const NormalGammaPosterior post = posterior();
    const double log_eq = log_predictive_density(post, g_q);
    const double log_eu = log_predictive_density(post, g_u);
    const MixtureProjection proj = beta_mixture_update(weight_, log_eu, log_eq);
    if (proj.applied) {
        weight_ = proj.projected;
    } else {
        ++skipped_;
    }
}

void EpsilonBmc::reset()
{
    stats_ = ReturnStats{};
    weight_ = weight_prior_;
    skipped_ = 0;
}

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc> make_impl(const ControllerSpec& spec)
{
    return std::visit(
        Overloaded{
            [](const ConstantSpec& s) -> std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc> {
                return ConstantEpsilon(s.epsilon);
            },
            [](const AnnealedSpec& s) -> std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc> {
                return AnnealedEpsilon(s.epsilon0, s.decay, s.epsilon_min);
            },
            [](const BmcSpec& s) -> std::variant<ConstantEpsilon, AnnealedEpsilon, EpsilonBmc> {
                return EpsilonBmc(s.prior, s.weight_prior);
            },
        },
        spec);
}

} // namespace

EpsilonController::EpsilonController(const ControllerSpec& spec) : impl_(make_impl(spec)) {}

double EpsilonController::epsilon() const
{
    return std::visit([](const auto& c) { return c.epsilon(); }, impl_);
}

void EpsilonController::observe(double g_q, double g_u, double g_exp)
{
    std::visit([&](auto& c) { c.observe(g_q, g_u, g_exp); }, impl_);
}

void EpsilonController::reset()
{
    std::visit([](auto& c) { c.reset(); }, impl_);
}

std::string controller_kind(const ControllerSpec& spec)
{
    return std::visit(Overloaded{
                          [](const ConstantSpec&) { return std::string("constant"); },
                          [](const AnnealedSpec&) { return std::string("annealed"); },
                          [](const BmcSpec&) { return std::string("epsilon_bmc"); },
                      },
                      spec);
}

} // namespace ama
