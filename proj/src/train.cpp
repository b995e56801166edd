#include "steinprune/train.hpp"

#include <algorithm>
#include <cmath>

namespace steinprune {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kGateStepClamp = 2.0;

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
}  // namespace

double LearningRateSchedule::at(std::size_t step, std::size_t total_steps) const {
    if (start <= 0.0 || end <= 0.0) throw DomainError("learning rates must be > 0");
    if (mode == Mode::Constant || total_steps <= 1) return start;
    const std::size_t s = std::min(step, total_steps - 1);
    const double frac = static_cast<double>(s) / static_cast<double>(total_steps - 1);
    return end + (start - end) * 0.5 * (1.0 + std::cos(kPi * frac));
}

void TrainConfig::validate() const {
    if (beta < 0.0) throw ConfigError("beta must be >= 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (particles < 2) throw ConfigError("ensemble needs n >= 2 particles");
    if (lr.start <= 0.0 || lr.end <= 0.0) throw ConfigError("learning rates must be > 0");
    if (!(gate_init > 0.0 && gate_init < 1.0)) throw ConfigError("gate_init must lie in (0,1)");
    if (gate_samples_per_step < 1) throw ConfigError("gate_samples_per_step must be >= 1");
    if (epsilon_ratio < 100.0) throw ConfigError("epsilon_ratio must be >= 100");
    if (lambda_init <= 0.0 || d_init <= 0.0) throw ConfigError("lambda/d inits must be > 0");
}

ParticleEnsemble ParticleEnsemble::init(const std::vector<LayerSpec>& topology,
                                        const TrainConfig& config) {
    config.validate();
    validate_topology(topology);
    ParticleEnsemble ensemble;
    ensemble.topology = topology;
    for (std::size_t p = 0; p < config.particles; ++p) {
        Particle particle;
        RngState init_rng(config.seed, kStreamInit + p);
        particle.params = init_network(topology, init_rng);
        particle.gates = GateSet::init(particle.params.scalar_count(), config.gate_init);
        particle.noise.d = config.d_init;
        particle.noise.lambda = config.lambda_init;
        particle.noise.epsilon_ratio = config.epsilon_ratio;
        particle.noise.refresh_epsilon();
        ensemble.particles.push_back(std::move(particle));
    }
    return ensemble;
}

void ParticleEnsemble::validate() const {
    if (particles.size() < 2) throw ShapeError("ensemble needs n >= 2 particles");
    const std::size_t m = particles.front().params.scalar_count();
    for (const auto& p : particles)
        if (p.params.scalar_count() != m || p.gates.size() != m)
            throw ShapeError("particles must be dimension-identical");
}

TrainState TrainState::fresh(std::uint64_t seed, std::size_t particles) {
    TrainState state;
    state.shuffle_rng = RngState(seed, kStreamShuffle);
    for (std::size_t p = 0; p < particles; ++p)
        state.gate_rngs.emplace_back(seed, kStreamGatesBase + p);
    return state;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RngState& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

std::vector<double> hardened_gates(const GateSet& gates) {
    std::vector<double> g(gates.size());
    for (std::size_t i = 0; i < gates.size(); ++i)
        g[i] = harden(gates.prob(i)) ? 1.0 : 0.0;
    return g;
}

std::vector<ParticleUpdate> hybrid_updates(const ParticleEnsemble& ensemble,
                                           const DatasetBatch& batch, const TrainConfig& config,
                                           double learning_rate, std::size_t dataset_size) {
    ensemble.validate();
    const std::size_t n = ensemble.size();
    const std::size_t m = ensemble.particles.front().params.scalar_count();
    const bool bayes = config.bayes_updates;
    const double like_scale =
        (config.scale_likelihood && batch.size() > 0)
            ? static_cast<double>(dataset_size) / static_cast<double>(batch.size())
            : 1.0;

    std::vector<ParticleUpdate> updates(n);
    std::vector<Gradients> ce_grads(n);
    std::vector<PosteriorScore> scores(n);
    const LossKind task_loss = batch.regression ? LossKind::SquaredResidual : LossKind::CrossEntropy;

    for (std::size_t p = 0; p < n; ++p) {
        const Particle& particle = ensemble.particles[p];
        if (particle.gates.relaxed().size() != m)
            throw ShapeError("gates must be resampled before computing updates");
        const ForwardTrace trace = forward_trace(particle.params, &particle.gates.relaxed(), batch);
        updates[p].ce_loss = batch.regression ? squared_residual_sum(trace, batch)
                                              : cross_entropy(trace.logits(), batch.labels);
        ce_grads[p] = backward_from(trace, particle.params, &particle.gates.relaxed(), batch, task_loss);
        if (bayes)
            scores[p] = posterior_score(particle.params, particle.gates, particle.noise, batch,
                                        like_scale, &trace);
    }

    // Task-gradient descent direction for every particle.
    for (std::size_t p = 0; p < n; ++p) {
        const std::vector<double> flat = ce_grads[p].flatten();
        updates[p].theta_delta.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            updates[p].theta_delta[i] = -learning_rate * flat[i];
    }

    if (bayes && config.beta != 0.0) {
        // KSD direction over flattened theta. The prior component is applied
        // under a per-coordinate relative trust region: the spike branch of
        // the mixture makes the raw score stiff (curvature ~ epsilon^2), and
        // an explicit Euler step on it overshoots by orders of magnitude.
        // Bounding the prior move per step at a fraction of |omega| keeps the
        // contraction toward zero geometric and overshoot-free.
        std::vector<std::vector<double>> positions(n), full_scores(n);
        for (std::size_t p = 0; p < n; ++p) {
            positions[p] = ensemble.particles[p].params.flatten();
            full_scores[p] = scores[p].theta.flatten();
        }
        const double h = effective_bandwidth(positions, config.kernel);
        const auto phi = ksd_directions(positions, full_scores, h);

        std::vector<std::vector<double>> prior_scores(n);
        for (std::size_t p = 0; p < n; ++p) prior_scores[p] = scores[p].theta_prior;

        for (std::size_t p = 0; p < n; ++p) {
            updates[p].phi_norm = l2_norm(phi[p]);
            // phi_prior: kernel-weighted prior scores (no repulsion part).
            std::vector<double> phi_prior(m, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const double k = rbf_kernel_value(positions[j], positions[p], h);
                for (std::size_t i = 0; i < m; ++i) phi_prior[i] += k * prior_scores[j][i];
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t i = 0; i < m; ++i) {
                phi_prior[i] *= inv_n;
                const double other = phi[p][i] - phi_prior[i];
                double step = learning_rate * config.beta * other;
                double prior_step = learning_rate * config.beta * phi_prior[i];
                const double bound = config.prior_trust_region * std::abs(positions[p][i]);
                prior_step = std::clamp(prior_step, -bound, bound);
                step += prior_step;
                updates[p].theta_delta[i] += step;
            }
        }
    }

    // Absolute per-coordinate rail against transient blow-ups.
    for (std::size_t p = 0; p < n; ++p)
        for (double& v : updates[p].theta_delta)
            v = std::clamp(v, -config.max_update_step, config.max_update_step);

    if (bayes) {
        // Gates and noise scalars descend (CE - log posterior) directly.
        for (std::size_t p = 0; p < n; ++p) {
            const Particle& particle = ensemble.particles[p];
            updates[p].gate_logit_delta.assign(m, 0.0);
            const std::vector<double>& dg_dl = particle.gates.relaxed_dlogit();
            for (std::size_t i = 0; i < m; ++i) {
                const double d_obj_dg = scores[p].gates[i] - ce_grads[p].gates[i];
                const double step = config.gate_learning_rate * d_obj_dg * dg_dl[i];
                updates[p].gate_logit_delta[i] = std::clamp(step, -kGateStepClamp, kGateStepClamp);
            }
            const double nb = static_cast<double>(batch.size());
            if (nb > 0) {
                const double d = particle.noise.d;
                const double mean_d_grad = 1.0 - d * d * scores[p].ssr / nb;
                updates[p].log_d_delta = std::clamp(config.noise_learning_rate * mean_d_grad,
                                                    -config.noise_step_clamp, config.noise_step_clamp);
            }
            const double mean_lambda_grad =
                particle.noise.lambda * scores[p].lambda / static_cast<double>(m);
            updates[p].log_lambda_delta = std::clamp(config.noise_learning_rate * mean_lambda_grad,
                                                     -config.noise_step_clamp, config.noise_step_clamp);
        }
    }
    return updates;
}

void apply_update(Particle& particle, const ParticleUpdate& update, const TrainConfig& config) {
    std::vector<double> flat = particle.params.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += update.theta_delta[i];
    particle.params.unflatten(flat);
    if (!update.gate_logit_delta.empty()) {
        auto& logits = particle.gates.logits();
        for (std::size_t i = 0; i < logits.size(); ++i) logits[i] += update.gate_logit_delta[i];
        particle.gates.clamp_logits();
        particle.noise.d = std::clamp(particle.noise.d * std::exp(update.log_d_delta),
                                      config.d_min, config.d_max);
        particle.noise.lambda =
            std::clamp(particle.noise.lambda * std::exp(update.log_lambda_delta),
                       config.lambda_min, config.lambda_max);
        particle.noise.refresh_epsilon();
    }
}

TrainResult train(ParticleEnsemble& ensemble, const DatasetBatch& data, const TrainConfig& config,
                  TrainState& state) {
    config.validate();
    ensemble.validate();
    const std::size_t n_data = data.size();
    if (n_data == 0) throw DomainError("training data must be non-empty");

    const std::size_t batch = std::min(config.batch_size, n_data);
    const std::size_t steps_per_epoch = (n_data + batch - 1) / batch;
    const std::size_t schedule_epochs =
        config.schedule_total_epochs ? config.schedule_total_epochs : config.epochs;
    const std::size_t total_steps = std::max<std::size_t>(1, schedule_epochs * steps_per_epoch);

    TemperatureSchedule temp = config.temperature;
    if (temp.total_steps == 0) temp.total_steps = total_steps;

    TrainResult result;
    result.trace.total_steps = total_steps;

    for (std::uint64_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
        const auto order = shuffled_indices(n_data, state.shuffle_rng);
        double loss_sum = 0.0, kl_sum = 0.0, d_sum = 0.0, lambda_sum = 0.0;
        bool diverged = false;

        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const std::size_t lo = s * batch;
            const std::size_t hi = std::min(n_data, lo + batch);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                         order.begin() + static_cast<std::ptrdiff_t>(hi));
            const DatasetBatch minibatch = data.select(idx);

            const double tau = temperature_at(temp, std::min<std::size_t>(state.global_step,
                                                                          temp.total_steps));
            const double lr = config.lr.at(state.global_step, total_steps);
            for (std::size_t p = 0; p < ensemble.size(); ++p)
                ensemble.particles[p].gates.resample(tau, state.gate_rngs[p]);

            const auto updates = hybrid_updates(ensemble, minibatch, config, lr, n_data);
            for (std::size_t p = 0; p < ensemble.size(); ++p) {
                if (!std::isfinite(updates[p].ce_loss)) diverged = true;
                apply_update(ensemble.particles[p], updates[p], config);
            }

            loss_sum += updates[0].ce_loss;
            double kl = 0.0;
            for (const auto& u : updates) kl += u.phi_norm;
            kl_sum += kl / static_cast<double>(ensemble.size());
            d_sum += ensemble.particles[0].noise.d;
            lambda_sum += ensemble.particles[0].noise.lambda;
            ++state.global_step;
            if (diverged) break;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        const double inv_steps = 1.0 / static_cast<double>(steps_per_epoch);
        rec.loss = loss_sum * inv_steps;
        rec.kl_term = kl_sum * inv_steps;
        rec.d = d_sum * inv_steps;
        rec.lambda = lambda_sum * inv_steps;
        double gate_sum = 0.0;
        for (const auto& p : ensemble.particles) gate_sum += p.gates.mean_prob();
        rec.mean_gate_prob = gate_sum / static_cast<double>(ensemble.size());
        if (!data.regression) {
            const auto hard = hardened_gates(ensemble.particles[0].gates);
            rec.accuracy = accuracy(ensemble.particles[0].params, &hard, data);
        }
        result.trace.epochs.push_back(rec);
        state.epoch = epoch + 1;

        if (diverged || !std::isfinite(rec.loss)) {
            result.trace.diverged = true;
            result.diverged = true;
            return result;
        }

        // Loss-plateau early stop.
        if (state.plateau_best - rec.loss < config.plateau_tolerance)
            ++state.plateau_count;
        else
            state.plateau_count = 0;
        state.plateau_best = std::min(state.plateau_best, rec.loss);
        if (config.plateau_epochs > 0 && state.plateau_count >= config.plateau_epochs) break;
    }
    return result;
}

}  // namespace steinprune
