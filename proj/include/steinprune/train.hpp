#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "steinprune/gates.hpp"
#include "steinprune/network.hpp"
#include "steinprune/priors.hpp"
#include "steinprune/svgd.hpp"

namespace steinprune {

struct LearningRateSchedule {
    enum class Mode { Cosine, Constant };
    double start = 0.1;
    double end = 0.001;
    Mode mode = Mode::Cosine;

    double at(std::size_t step, std::size_t total_steps) const;
};

struct TrainConfig {
    double beta = 0.1;  // KL-term weight (beta_kl; unrelated to the beta2 noise variance)
    std::size_t epochs = 60;
    std::size_t batch_size = 512;
    LearningRateSchedule lr;
    std::uint64_t seed = 0;
    TemperatureSchedule temperature;  // total_steps 0 means "span the whole run"
    std::size_t particles = 2;
    KernelConfig kernel;

    double gate_learning_rate = 0.05;
    double noise_learning_rate = 0.05;
    std::size_t gate_samples_per_step = 1;

    double gate_init = 0.9;
    double lambda_init = 1.0;
    double d_init = 1.0;
    double epsilon_ratio = 1e4;

    // Scale minibatch likelihood scores by dataset_size/batch_size so the
    // ensemble targets the full-data posterior.
    bool scale_likelihood = true;
    // When false, gates/d/lambda stay frozen and no posterior work is done;
    // together with beta = 0 this reduces the loop to gated SGD on
    // cross-entropy, step for step.
    bool bayes_updates = true;

    // Stability rails for the stiff spike component (see train.cpp).
    double prior_trust_region = 0.9;  // max relative prior step per coordinate
    double max_update_step = 0.5;     // absolute per-coordinate step clip
    double noise_step_clamp = 0.25;   // per-step clamp on log d / log lambda moves
    double d_min = 1e-3, d_max = 1e2;
    double lambda_min = 1e-3, lambda_max = 1e3;

    double plateau_tolerance = 1e-5;
    std::size_t plateau_epochs = 10;

    // Write an intermediate checkpoint every N epochs (0 = final only).
    std::size_t checkpoint_every = 0;
    // Schedules (lr, temperature) span this many epochs when nonzero, so a
    // run split into legs anneals exactly like the unbroken run.
    std::size_t schedule_total_epochs = 0;

    void validate() const;
};

struct Particle {
    NetworkParams params;
    GateSet gates;
    NoiseScalars noise;
};

struct ParticleEnsemble {
    std::vector<Particle> particles;
    std::vector<LayerSpec> topology;

    static ParticleEnsemble init(const std::vector<LayerSpec>& topology, const TrainConfig& config);
    std::size_t size() const { return particles.size(); }
    void validate() const;
};

// RNG stream ids (base seed is the run seed).
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamShuffle = 2;
inline constexpr std::uint64_t kStreamData = 3;
inline constexpr std::uint64_t kStreamCorrupt = 4;
inline constexpr std::uint64_t kStreamGatesBase = 100;

// Everything the loop needs to resume mid-run bit-exactly.
struct TrainState {
    std::uint64_t global_step = 0;
    std::uint64_t epoch = 0;
    RngState shuffle_rng;
    std::vector<RngState> gate_rngs;
    double plateau_best = std::numeric_limits<double>::infinity();
    std::uint32_t plateau_count = 0;

    static TrainState fresh(std::uint64_t seed, std::size_t particles);
};

struct EpochRecord {
    std::uint64_t epoch = 0;
    double loss = 0.0;            // epoch-mean cross-entropy, particle 0
    double kl_term = 0.0;         // epoch-mean ||phi|| averaged over particles
    double mean_gate_prob = 0.0;  // over all particles, end of epoch
    double d = 0.0;               // particle 0, epoch mean
    double lambda = 0.0;          // particle 0, epoch mean
    double accuracy = 0.0;        // particle 0, hardened gates, training data
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
    bool diverged = false;
    std::uint64_t total_steps = 0;
};

struct TrainResult {
    TrainingTrace trace;
    bool diverged = false;
};

// Per-particle additive update for one step, all computed from the pre-step
// state (Jacobi style) so results are independent of particle order.
struct ParticleUpdate {
    std::vector<double> theta_delta;       // canonical flattening order
    std::vector<double> gate_logit_delta;  // empty when bayes updates are off
    double log_d_delta = 0.0;
    double log_lambda_delta = 0.0;
    double phi_norm = 0.0;  // magnitude of the KSD direction (0 when beta = 0)
    double ce_loss = 0.0;
};

// Hybrid objective update (task gradient descent plus beta-weighted KSD
// ascent on theta; gates/d/lambda descend CE - log posterior). Gates must
// have been resampled for this step before calling.
std::vector<ParticleUpdate> hybrid_updates(const ParticleEnsemble& ensemble,
                                           const DatasetBatch& batch, const TrainConfig& config,
                                           double learning_rate, std::size_t dataset_size);

void apply_update(Particle& particle, const ParticleUpdate& update, const TrainConfig& config);

// Full training loop; mutates the ensemble and state in place so callers can
// checkpoint and resume. Divergence aborts the loop with the trace retained.
TrainResult train(ParticleEnsemble& ensemble, const DatasetBatch& data, const TrainConfig& config,
                  TrainState& state);

// Fisher-Yates permutation of 0..n-1 driven by the given stream.
std::vector<std::size_t> shuffled_indices(std::size_t n, RngState& rng);

// {0,1} gate multipliers from hardened probabilities.
std::vector<double> hardened_gates(const GateSet& gates);

}  // namespace steinprune
