#include "steinprune/reliability.hpp"

#include <algorithm>
#include <cmath>

#include "steinprune/dataio.hpp"

namespace steinprune {

void EfficiencyInputs::validate() const {
    if (eps2 <= 0.0) throw DomainError("eps2 must be > 0");
    if (alpha2 < 0.0 || beta2 < 0.0) throw DomainError("alpha2/beta2 must be >= 0");
    if (k_obs < 1) throw DomainError("observation count must be >= 1");
}

NoiseCase noise_case_from_string(const std::string& name) {
    if (name == "clean") return NoiseCase::Clean;
    if (name == "model_noise") return NoiseCase::ModelNoise;
    if (name == "data_noise") return NoiseCase::DataNoise;
    if (name == "both") return NoiseCase::Both;
    throw ConfigError("unknown noise case '" + name +
                      "' (expected clean|model_noise|data_noise|both)");
}

std::string to_string(NoiseCase c) {
    switch (c) {
        case NoiseCase::Clean: return "clean";
        case NoiseCase::ModelNoise: return "model_noise";
        case NoiseCase::DataNoise: return "data_noise";
        case NoiseCase::Both: return "both";
    }
    return "?";
}

double map_estimator(const EfficiencyInputs& inputs) {
    inputs.validate();
    const double denom = inputs.eps2 + inputs.alpha2;
    if (denom == 0.0) throw DomainError("eps2 + alpha2 must be > 0");
    return (inputs.y_bar * inputs.alpha2 + inputs.mu_theta * inputs.eps2) / denom;
}

double crlb(const EfficiencyInputs& inputs) {
    inputs.validate();
    return inputs.eps2;
}

EfficiencyReport efficiency(NoiseCase noise_case, const EfficiencyInputs& inputs) {
    inputs.validate();
    EfficiencyReport report;
    report.case_label = noise_case;
    report.crlb = inputs.eps2;
    switch (noise_case) {
        case NoiseCase::Clean:
            if (inputs.alpha2 != 0.0 || inputs.beta2 != 0.0)
                throw ConfigError("case clean requires alpha2 = beta2 = 0");
            report.estimator_variance = inputs.eps2;
            break;
        case NoiseCase::ModelNoise:
            if (inputs.beta2 != 0.0) throw ConfigError("case model_noise requires beta2 = 0");
            report.estimator_variance = inputs.eps2 + inputs.alpha2;
            break;
        case NoiseCase::DataNoise:
            if (inputs.alpha2 != 0.0) throw ConfigError("case data_noise requires alpha2 = 0");
            report.estimator_variance = inputs.eps2 + inputs.beta2;
            break;
        case NoiseCase::Both:
            report.estimator_variance = inputs.eps2 + inputs.alpha2 + inputs.beta2;
            break;
    }
    report.efficiency = report.crlb / report.estimator_variance;
    return report;
}

std::size_t UncertaintySweepResult::failed_count() const {
    std::size_t c = 0;
    for (const auto& cell : cells) c += cell.failed ? 1 : 0;
    return c;
}

double ensemble_param_dispersion(const ParticleEnsemble& ensemble) {
    const std::size_t n = ensemble.size();
    if (n < 2) throw DomainError("dispersion needs n >= 2 particles");
    std::vector<std::vector<double>> flats(n);
    for (std::size_t p = 0; p < n; ++p) flats[p] = ensemble.particles[p].params.flatten();
    const std::size_t m = flats[0].size();
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t p = 0; p < n; ++p) mean += flats[p][i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t p = 0; p < n; ++p) var += (flats[p][i] - mean) * (flats[p][i] - mean);
        total += var / static_cast<double>(n - 1);
    }
    return total / static_cast<double>(m);
}

double ensemble_prediction_variance(const ParticleEnsemble& ensemble, const DatasetBatch& probe) {
    const std::size_t n = ensemble.size();
    if (n < 2) throw DomainError("prediction variance needs n >= 2 particles");
    if (probe.size() == 0) return 0.0;
    std::vector<Tensor> probs;
    probs.reserve(n);
    for (const auto& particle : ensemble.particles) {
        const auto hard = hardened_gates(particle.gates);
        probs.push_back(softmax(forward(particle.params, &hard, probe)));
    }
    const std::size_t rows = probs[0].rows(), cols = probs[0].cols();
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double mean = 0.0;
            for (std::size_t p = 0; p < n; ++p) mean += probs[p].at(i, j);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                var += (probs[p].at(i, j) - mean) * (probs[p].at(i, j) - mean);
            total += var / static_cast<double>(n - 1);
        }
    }
    return total / static_cast<double>(rows * cols);
}

namespace {
SweepCell run_training_cell(const DatasetBatch& data, const std::vector<LayerSpec>& topology,
                            TrainConfig config, std::uint64_t cell_seed, const std::string& label,
                            double level) {
    SweepCell cell;
    cell.label = label;
    cell.level = level;
    config.seed = cell_seed;
    try {
        ParticleEnsemble ensemble = ParticleEnsemble::init(topology, config);
        TrainState state = TrainState::fresh(config.seed, config.particles);
        const TrainResult result = train(ensemble, data, config, state);
        if (result.diverged) {
            cell.failed = true;
            return cell;
        }
        const EpochRecord& last = result.trace.epochs.back();
        cell.aleatoric_inv_d = 1.0 / last.d;
        cell.epistemic_param_dispersion = ensemble_param_dispersion(ensemble);
        cell.epistemic_prediction_variance = ensemble_prediction_variance(ensemble, data);
        cell.accuracy = last.accuracy;
    } catch (const std::exception&) {
        cell.failed = true;
    }
    return cell;
}
}  // namespace

UncertaintySweepResult aleatoric_sweep(const DatasetBatch& base,
                                       const std::vector<double>& noise_levels,
                                       const std::vector<LayerSpec>& topology,
                                       const TrainConfig& config, std::uint64_t base_seed) {
    if (noise_levels.size() < 3) throw ConfigError("aleatoric sweep needs >= 3 levels");
    if (std::find(noise_levels.begin(), noise_levels.end(), 0.0) == noise_levels.end())
        throw ConfigError("aleatoric sweep must include a clean (0) level");

    UncertaintySweepResult result;
    for (std::size_t i = 0; i < noise_levels.size(); ++i) {
        const double level = noise_levels[i];
        if (level < 0.0) throw ConfigError("noise levels must be >= 0");
        const std::uint64_t cell_seed = mix_seed(base_seed, i);
        const DatasetBatch corrupted = corrupt_gaussian(base, level, cell_seed);
        result.cells.push_back(run_training_cell(corrupted, topology, config, cell_seed,
                                                 "noise_std=" + std::to_string(level), level));
    }
    return result;
}

UncertaintySweepResult epistemic_sweep(const DatasetBatch& base,
                                       const std::vector<double>& fractions,
                                       const std::vector<LayerSpec>& topology,
                                       const TrainConfig& config, std::uint64_t base_seed) {
    if (fractions.size() < 3) throw ConfigError("epistemic sweep needs >= 3 fractions");
    UncertaintySweepResult result;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double f = fractions[i];
        if (f <= 0.0 || f > 1.0) throw ConfigError("fractions must lie in (0,1]");
        const std::uint64_t cell_seed = mix_seed(base_seed, i);
        RngState subsample_rng(cell_seed, kStreamData);
        auto order = shuffled_indices(base.size(), subsample_rng);
        const std::size_t keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(f * static_cast<double>(base.size()))));
        order.resize(keep);
        const DatasetBatch subset = base.select(order);
        result.cells.push_back(run_training_cell(subset, topology, config, cell_seed,
                                                 "fraction=" + std::to_string(f), f));
    }
    return result;
}

}  // namespace steinprune
