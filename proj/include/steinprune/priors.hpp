#pragma once

#include <vector>

#include "steinprune/gates.hpp"
#include "steinprune/network.hpp"
#include "steinprune/tensor.hpp"

namespace steinprune {

// Learnable noise scalars of the likelihood and the spike-and-slab prior.
// epsilon_spike is a derived constant (epsilon_ratio * lambda), refreshed
// after lambda moves; gradients never flow through it.
struct NoiseScalars {
    double d = 1.0;       // inverse std of the prediction likelihood
    double lambda = 1.0;  // slab inverse scale
    double epsilon_ratio = 1e4;
    double epsilon_spike = 1e4;

    void refresh_epsilon() { epsilon_spike = epsilon_ratio * lambda; }
    void validate() const;
};

// Gaussian prediction likelihood, one ln(d) term per sample:
//   sum_i [ ln d - ln sqrt(2 pi) - d^2 ||y_i - f(x_i)||^2 / 2 ]
// where f is the gated forward pass: softmax outputs against one-hot labels
// for classification batches, raw outputs for regression batches.
double log_likelihood(const NetworkParams& params, const std::vector<double>* gates,
                      const NoiseScalars& noise, const DatasetBatch& batch);

// Fully normalized per-weight mixture, computed in log space:
//   sum_i ln[ g_i N(w_i; 0, 1/lambda^2) + (1-g_i) N(w_i; 0, 1/eps^2) ].
// Relaxed gates may sit on the closed endpoints {0,1}; the degenerate branch
// then drops out exactly.
double log_spike_slab_prior(const NetworkParams& params, const std::vector<double>& relaxed_gates,
                            const NoiseScalars& noise);

// Single mixture term ln[ g N(w; 0, 1/lambda^2) + (1-g) N(w; 0, 1/eps^2) ].
double log_spike_slab_term(double w, double g, const NoiseScalars& noise);

double log_posterior_unnorm(const NetworkParams& params, const GateSet& gates,
                            const NoiseScalars& noise, const DatasetBatch& batch);

// Gradients of log_posterior_unnorm. The likelihood contribution is scaled
// by `likelihood_scale` (the trainer passes dataset_size/batch_size so that
// minibatch scores estimate the full-data posterior); the prior is never
// scaled. `theta_prior` holds just the prior part of the theta score so the
// trainer can apply its trust region to the stiff spike component.
struct PosteriorScore {
    Gradients theta;                  // d log p / d omega (full)
    std::vector<double> theta_prior;  // prior part only, flattened
    std::vector<double> gates;        // d log p / d g_i
    double d = 0.0;                   // d log p / d d
    double lambda = 0.0;              // d log p / d lambda
    double ssr = 0.0;                 // unscaled squared residual sum of the batch
    double log_likelihood_value = 0.0;
    double log_prior_value = 0.0;
};

PosteriorScore posterior_score(const NetworkParams& params, const GateSet& gates,
                               const NoiseScalars& noise, const DatasetBatch& batch,
                               double likelihood_scale = 1.0,
                               const ForwardTrace* trace = nullptr);

enum class BaselinePriorKind { LaplaceL1, GaussianL2, Polarization };

struct BaselinePriorConfig {
    BaselinePriorKind kind = BaselinePriorKind::LaplaceL1;
    double b = 1.0;      // Laplace scale
    double alpha = 1.0;  // Gaussian variance
    double delta = 1.0;  // data variance (kept separate from d by design)
    double a = 1.0;      // polarization Laplace variance
    double t = 1.0;      // polarization trade-off, >= 1
};

// Per-neuron scaling factors for the polarization prior.
struct ScalingFactors {
    std::vector<double> gamma;
    double gamma_bar = 0.0;
    static ScalingFactors from(std::vector<double> gamma);
};

// Log prior up to additive constants. Dropped constants: LaplaceL1 drops
// -M ln(2b); GaussianL2 drops -M/2 ln(2 pi alpha); Polarization has no
// normalizer (it is a regularizer in log form, not a density).
double log_baseline_prior(const NetworkParams& params, const BaselinePriorConfig& config);
double log_baseline_prior(const ScalingFactors& factors, const BaselinePriorConfig& config);

}  // namespace steinprune
