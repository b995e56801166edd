#include "steinprune/priors.hpp"

#include <algorithm>
#include <cmath>

namespace steinprune {

namespace {
constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;  // ln sqrt(2 pi)

struct MixtureTerm {
    double log_density;  // ln[g N_slab + (1-g) N_spike]
    double w_slab;       // posterior responsibility of the slab branch
    double w_spike;
    double branch_slab;  // ln(g) + ln N_slab (may be -inf)
    double branch_spike;
};

MixtureTerm mixture_term(double w, double g, double lambda, double eps) {
    MixtureTerm t;
    const double a = (g > 0.0 ? std::log(g) : -INFINITY) + std::log(lambda) - 0.5 * lambda * lambda * w * w;
    const double b = (g < 1.0 ? std::log1p(-g) : -INFINITY) + std::log(eps) - 0.5 * eps * eps * w * w;
    t.branch_slab = a;
    t.branch_spike = b;
    if (a == -INFINITY && b == -INFINITY)
        throw NumericError("spike-and-slab mixture underflow on both branches");
    const double mx = std::max(a, b);
    const double ea = std::exp(a - mx);
    const double eb = std::exp(b - mx);
    t.log_density = mx + std::log(ea + eb) - kLogSqrt2Pi;
    t.w_slab = ea / (ea + eb);
    t.w_spike = eb / (ea + eb);
    return t;
}
}  // namespace

void NoiseScalars::validate() const {
    if (d <= 0.0) throw DomainError("d must be > 0");
    if (lambda <= 0.0) throw DomainError("lambda must be > 0");
    if (epsilon_spike < 100.0 * lambda)
        throw DomainError("epsilon_spike must stay >= 100 * lambda");
}

double log_likelihood(const NetworkParams& params, const std::vector<double>* gates,
                      const NoiseScalars& noise, const DatasetBatch& batch) {
    if (noise.d <= 0.0) throw DomainError("d must be > 0");
    const std::size_t n = batch.size();
    if (n == 0) return 0.0;
    const ForwardTrace trace = forward_trace(params, gates, batch);
    const double ssr = squared_residual_sum(trace, batch);
    return static_cast<double>(n) * (std::log(noise.d) - kLogSqrt2Pi) -
           0.5 * noise.d * noise.d * ssr;
}

double log_spike_slab_term(double w, double g, const NoiseScalars& noise) {
    noise.validate();
    if (g < 0.0 || g > 1.0) throw DomainError("relaxed gate outside [0,1]");
    return mixture_term(w, g, noise.lambda, noise.epsilon_spike).log_density;
}

double log_spike_slab_prior(const NetworkParams& params, const std::vector<double>& relaxed_gates,
                            const NoiseScalars& noise) {
    noise.validate();
    const std::vector<double> flat = params.flatten();
    if (relaxed_gates.size() != flat.size())
        throw ShapeError("relaxed gate count does not match parameter count");
    double total = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double g = relaxed_gates[i];
        if (g < 0.0 || g > 1.0) throw DomainError("relaxed gate outside [0,1]");
        total += mixture_term(flat[i], g, noise.lambda, noise.epsilon_spike).log_density;
    }
    return total;
}

double log_posterior_unnorm(const NetworkParams& params, const GateSet& gates,
                            const NoiseScalars& noise, const DatasetBatch& batch) {
    const std::vector<double>& g = gates.relaxed();
    return log_likelihood(params, &g, noise, batch) + log_spike_slab_prior(params, g, noise);
}

PosteriorScore posterior_score(const NetworkParams& params, const GateSet& gates,
                               const NoiseScalars& noise, const DatasetBatch& batch,
                               double likelihood_scale, const ForwardTrace* trace) {
    noise.validate();
    const std::vector<double>& g = gates.relaxed();
    const std::vector<double> flat = params.flatten();
    if (g.size() != flat.size()) throw ShapeError("relaxed gate count does not match parameter count");

    PosteriorScore score;
    const std::size_t n = batch.size();

    // Likelihood part through the gated forward pass.
    double ssr = 0.0;
    if (n > 0) {
        ForwardTrace local;
        if (!trace) {
            local = forward_trace(params, &g, batch);
            trace = &local;
        }
        ssr = squared_residual_sum(*trace, batch);
        Gradients ssr_grad = backward_from(*trace, params, &g, batch, LossKind::SquaredResidual);
        const double coef = -0.5 * noise.d * noise.d * likelihood_scale;
        for (std::size_t l = 0; l < ssr_grad.weight.size(); ++l) {
            for (double& v : ssr_grad.weight[l].values) v *= coef;
            for (double& v : ssr_grad.bias[l].values) v *= coef;
        }
        for (double& v : ssr_grad.gates) v *= coef;
        score.theta = std::move(ssr_grad);
        score.gates = score.theta.gates;
        score.ssr = ssr;
        score.d = likelihood_scale * (static_cast<double>(n) / noise.d - noise.d * ssr);
        score.log_likelihood_value =
            likelihood_scale * (static_cast<double>(n) * (std::log(noise.d) - kLogSqrt2Pi) -
                                0.5 * noise.d * noise.d * ssr);
    } else {
        score.theta = Gradients::zeros_like(params, true);
        score.gates.assign(flat.size(), 0.0);
        score.d = 0.0;
    }

    // Prior part, term by term.
    score.theta_prior.assign(flat.size(), 0.0);
    double lambda_score = 0.0;
    double log_prior = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double w = flat[i];
        const MixtureTerm t = mixture_term(w, g[i], noise.lambda, noise.epsilon_spike);
        log_prior += t.log_density;
        const double dw = -(t.w_slab * noise.lambda * noise.lambda +
                            t.w_spike * noise.epsilon_spike * noise.epsilon_spike) * w;
        score.theta_prior[i] = dw;
        // d/dg ln(g D_slab + (1-g) D_spike) = w_slab/g - w_spike/(1-g)
        double dg = 0.0;
        if (g[i] > 0.0) dg += t.w_slab / g[i];
        if (g[i] < 1.0) dg -= t.w_spike / (1.0 - g[i]);
        score.gates[i] += dg;
        lambda_score += t.w_slab * (1.0 / noise.lambda - noise.lambda * w * w);
    }
    score.lambda = lambda_score;
    score.log_prior_value = log_prior;

    // Fold the prior into the full theta score (canonical flattening order).
    std::size_t k = 0;
    for (std::size_t l = 0; l < score.theta.weight.size(); ++l) {
        for (double& v : score.theta.weight[l].values) v += score.theta_prior[k++];
        for (double& v : score.theta.bias[l].values) v += score.theta_prior[k++];
    }
    return score;
}

ScalingFactors ScalingFactors::from(std::vector<double> gamma) {
    ScalingFactors f;
    f.gamma = std::move(gamma);
    double s = 0.0;
    for (double g : f.gamma) s += g;
    f.gamma_bar = f.gamma.empty() ? 0.0 : s / static_cast<double>(f.gamma.size());
    return f;
}

double log_baseline_prior(const NetworkParams& params, const BaselinePriorConfig& config) {
    const std::vector<double> flat = params.flatten();
    switch (config.kind) {
        case BaselinePriorKind::LaplaceL1: {
            if (config.b <= 0.0) throw ConfigError("laplace_l1 requires b > 0");
            double s = 0.0;
            for (double w : flat) s += std::abs(w);
            return -s / config.b;
        }
        case BaselinePriorKind::GaussianL2: {
            if (config.alpha <= 0.0) throw ConfigError("gaussian_l2 requires alpha > 0");
            double s = 0.0;
            for (double w : flat) s += w * w;
            return -s / (2.0 * config.alpha);
        }
        case BaselinePriorKind::Polarization:
            throw ConfigError("polarization prior takes scaling factors, not network parameters");
    }
    throw ConfigError("unknown baseline prior kind");
}

double log_baseline_prior(const ScalingFactors& factors, const BaselinePriorConfig& config) {
    if (config.kind != BaselinePriorKind::Polarization)
        throw ConfigError("scaling factors are only valid for the polarization prior");
    if (config.a <= 0.0) throw ConfigError("polarization requires a > 0");
    if (config.t < 1.0) throw ConfigError("polarization requires t >= 1");
    double l1 = 0.0, dev = 0.0;
    for (double gc : factors.gamma) {
        l1 += std::abs(gc);
        dev += std::abs(gc - factors.gamma_bar);
    }
    return -(config.t * l1 - dev) / config.a;
}

}  // namespace steinprune
