#pragma once

#include <string>
#include <vector>

#include "steinprune/train.hpp"

namespace steinprune {

// Linear-Gaussian observation model inputs: Y_k = Theta^T X + n_k with
// n_k ~ N(0, eps2), prior Theta ~ N(mu_theta, alpha2), optional data noise
// beta2 (beta2_noise; unrelated to the KL weight beta_kl).
struct EfficiencyInputs {
    double eps2 = 1.0;
    double alpha2 = 0.0;
    double beta2 = 0.0;
    std::uint64_t k_obs = 1;
    double mu_theta = 0.0;
    double y_bar = 0.0;

    void validate() const;
};

enum class NoiseCase { Clean, ModelNoise, DataNoise, Both };

NoiseCase noise_case_from_string(const std::string& name);
std::string to_string(NoiseCase c);

struct EfficiencyReport {
    double crlb = 0.0;
    double estimator_variance = 0.0;
    double efficiency = 0.0;  // crlb / estimator_variance, in (0,1]
    NoiseCase case_label = NoiseCase::Clean;
};

// Theta_map = (y_bar alpha2 + mu_theta eps2) / (eps2 + alpha2).
double map_estimator(const EfficiencyInputs& inputs);

// CRLB of the unbiased estimator: eps2.
double crlb(const EfficiencyInputs& inputs);

// Estimator variance per case: eps2 | eps2+alpha2 | eps2+beta2 | eps2+alpha2+beta2.
// Noise fields inconsistent with the case (e.g. clean with alpha2 > 0) are
// config errors.
EfficiencyReport efficiency(NoiseCase noise_case, const EfficiencyInputs& inputs);

struct SweepCell {
    std::string label;
    double level = 0.0;
    bool failed = false;
    double aleatoric_inv_d = 0.0;             // learned 1/d (last-epoch mean)
    double epistemic_param_dispersion = 0.0;  // inter-particle variance of theta, mean over coords
    double epistemic_prediction_variance = 0.0;  // inter-particle softmax variance on the probe set
    double accuracy = 0.0;
};

struct UncertaintySweepResult {
    std::vector<SweepCell> cells;
    std::size_t failed_count() const;
};

// Per level: corrupt inputs with additive N(0, level^2), run full training
// with seed mix(base_seed, cell_index), record the learned prediction std.
// Needs >= 3 levels including a clean (0) one. A diverging cell is marked
// failed and the sweep continues.
UncertaintySweepResult aleatoric_sweep(const DatasetBatch& base,
                                       const std::vector<double>& noise_levels,
                                       const std::vector<LayerSpec>& topology,
                                       const TrainConfig& config, std::uint64_t base_seed);

// Per fraction in (0,1]: train on a deterministic subsample, record the
// ensemble dispersion (both measures). Needs >= 3 fractions.
UncertaintySweepResult epistemic_sweep(const DatasetBatch& base,
                                       const std::vector<double>& fractions,
                                       const std::vector<LayerSpec>& topology,
                                       const TrainConfig& config, std::uint64_t base_seed);

// Mean over coordinates of the unbiased inter-particle variance of theta.
double ensemble_param_dispersion(const ParticleEnsemble& ensemble);

// Mean over probe samples and classes of the inter-particle variance of the
// softmax outputs (hardened gates).
double ensemble_prediction_variance(const ParticleEnsemble& ensemble, const DatasetBatch& probe);

}  // namespace steinprune
