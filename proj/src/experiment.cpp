#include "steinprune/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "steinprune/analysis.hpp"

namespace steinprune {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string run_id_for(std::uint64_t hash, std::uint64_t seed) {
    return hex64(hash) + "-s" + std::to_string(seed);
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

double wall_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json record(const std::string& run_id, std::uint64_t hash, const std::string& metric, double value,
            double step, double wall) {
    return json{{"run_id", run_id},        {"config_hash", hex64(hash)}, {"metric", metric},
                {"value", value},          {"step", step},               {"wall_clock_ms", wall}};
}

void write_hist_csv(const DistributionReport& report, const std::string& prefix) {
    std::ostringstream edges, densities;
    for (double e : report.bin_edges) edges << std::scientific << e << "\n";
    for (double d : report.densities) densities << std::scientific << d << "\n";
    atomic_write_file(prefix + "_edges.csv", edges.str());
    atomic_write_file(prefix + "_densities.csv", densities.str());
}

json report_json(const DistributionReport& report) {
    return json{{"sample_count", report.sample_count},
                {"mean", report.mean},
                {"stddev", report.stddev},
                {"excess_kurtosis", report.excess_kurtosis},
                {"ks_statistic_vs_gaussian", report.ks_statistic_vs_gaussian},
                {"bimodality", report.bimodality_flag},
                {"near_zero_mass", report.near_zero_mass}};
}

// Per-layer weight-matrix values (biases excluded) of a particle.
std::vector<std::vector<double>> layer_weight_values(const NetworkParams& params) {
    std::vector<std::vector<double>> out;
    for (const auto& l : params.layers) out.push_back(l.weight.values);
    return out;
}

double gaussian_density(double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

}  // namespace

TrainOutcome run_train(ExperimentConfig config, const std::string& out_dir,
                       const std::string& resume_checkpoint,
                       std::optional<std::uint64_t> seed_override) {
    if (seed_override) config.train.seed = *seed_override;
    const std::uint64_t hash = config_hash(config);
    const std::string run_id = run_id_for(hash, config.train.seed);
    ensure_dir(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    PreparedData data = prepare_data(config);
    const auto topology = config.topology(data.train.feature_dim(), data.classes);

    Checkpoint ck;
    if (!resume_checkpoint.empty()) {
        ck = load_checkpoint(resume_checkpoint);
        if (ck.config_hash != hash)
            throw ConfigError("resume checkpoint was produced by a different config (hash " +
                              hex64(ck.config_hash) + " vs " + hex64(hash) + ")");
    } else {
        ck.ensemble = ParticleEnsemble::init(topology, config.train);
        ck.train_state = TrainState::fresh(config.train.seed, config.train.particles);
        ck.normalization = data.normalization;
        ck.config_hash = hash;
    }

    // Run in legs so intermediate checkpoints can be written; schedules span
    // the full epoch budget regardless of leg boundaries.
    TrainResult result;
    const std::size_t every = config.train.checkpoint_every;
    std::uint64_t milestone = ck.train_state.epoch;
    while (milestone < config.train.epochs) {
        milestone = every > 0 ? std::min<std::uint64_t>(milestone + every, config.train.epochs)
                              : config.train.epochs;
        TrainConfig leg = config.train;
        leg.epochs = milestone;
        leg.schedule_total_epochs = config.train.epochs;
        const TrainResult part = train(ck.ensemble, data.train, leg, ck.train_state);
        result.trace.total_steps = part.trace.total_steps;
        result.trace.epochs.insert(result.trace.epochs.end(), part.trace.epochs.begin(),
                                   part.trace.epochs.end());
        if (part.diverged) {
            result.diverged = true;
            result.trace.diverged = true;
            break;
        }
        if (every > 0 && milestone < config.train.epochs)
            save_checkpoint(ck, out_dir + "/checkpoint_epoch" + std::to_string(milestone) + ".dllp");
        if (ck.train_state.epoch < milestone) break;  // plateau stop
    }

    std::ostringstream lines;
    for (const auto& e : result.trace.epochs) {
        const double step = static_cast<double>(e.epoch);
        const double wall = wall_ms(t0);
        lines << record(run_id, hash, "loss", e.loss, step, wall).dump() << "\n"
              << record(run_id, hash, "kl_term", e.kl_term, step, wall).dump() << "\n"
              << record(run_id, hash, "mean_gate_prob", e.mean_gate_prob, step, wall).dump() << "\n"
              << record(run_id, hash, "d", e.d, step, wall).dump() << "\n"
              << record(run_id, hash, "lambda", e.lambda, step, wall).dump() << "\n"
              << record(run_id, hash, "accuracy", e.accuracy, step, wall).dump() << "\n";
    }

    TrainOutcome outcome;
    outcome.diverged = result.diverged;
    outcome.trace = result.trace;
    outcome.trace_path = out_dir + "/trace.jsonl";
    outcome.checkpoint_path = out_dir + "/checkpoint.dllp";
    atomic_write_file(outcome.trace_path, lines.str());
    save_checkpoint(ck, outcome.checkpoint_path);
    return outcome;
}

PruneOutcome run_prune(ExperimentConfig config, const std::string& checkpoint_path,
                       const std::string& method, const std::string& mode, double value,
                       const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    if (seed_override) config.train.seed = *seed_override;
    const std::uint64_t hash = config_hash(config);
    ensure_dir(out_dir);

    Checkpoint ck = load_checkpoint(checkpoint_path);
    if (ck.config_hash != hash)
        throw ConfigError("checkpoint was produced by a different config");
    PreparedData data = prepare_data(config);
    const DatasetBatch& eval = data.holdout.size() > 0 ? data.holdout : data.train;

    const Particle& particle = ck.ensemble.particles.front();
    PruneMask mask;
    if (method == "dllp_slab") {
        const double threshold = std::isnan(value) ? config.gate_threshold : value;
        if (threshold < 0.0 || threshold > 1.0) throw ConfigError("gate threshold must lie in [0,1]");
        mask = extract_slab(particle, threshold).first;
    } else if (method == "magnitude") {
        if (mode == "sparsity")
            mask = magnitude_prune_sparsity(particle.params, value);
        else if (mode == "threshold")
            mask = magnitude_prune_threshold(particle.params, value);
        else
            throw ConfigError("magnitude pruning needs mode sparsity|threshold, got '" + mode + "'");
    } else {
        throw ConfigError("unknown prune method '" + method + "' (expected dllp_slab|magnitude)");
    }

    const NetworkParams pruned = apply_mask(particle.params, mask);
    const double acc_unpruned = accuracy(particle.params, nullptr, eval);
    const double acc_pruned = accuracy(pruned, nullptr, eval);
    const FlopsEstimate flops = flops_estimate(ck.ensemble.topology, mask);

    const std::vector<double> kept = kept_weight_values(particle.params, mask);
    std::optional<DistributionReport> report;
    if (kept.size() >= 100) report = distribution_report(kept, config.bins);

    PruneOutcome outcome;
    outcome.mask_path = out_dir + "/mask.dllpmask";
    outcome.pruned_checkpoint_path = out_dir + "/pruned.dllp";
    outcome.summary_path = out_dir + "/prune_summary.json";
    outcome.sparsity = mask.sparsity;
    outcome.accuracy_pruned = acc_pruned;
    outcome.accuracy_unpruned = acc_unpruned;

    save_mask(mask, outcome.mask_path);

    // Pruned checkpoint: mask applied to every particle, gates hardened.
    Checkpoint pruned_ck = ck;
    for (auto& p : pruned_ck.ensemble.particles) {
        p.params = apply_mask(p.params, mask);
        auto& logits = p.gates.logits();
        for (std::size_t i = 0; i < logits.size(); ++i)
            logits[i] = mask.keep[i] ? GateSet::logit_clamp() : -GateSet::logit_clamp();
    }
    save_checkpoint(pruned_ck, outcome.pruned_checkpoint_path);

    json summary{{"method", method},
                 {"sparsity", mask.sparsity},
                 {"kept", mask.kept_count()},
                 {"total", mask.keep.size()},
                 {"weight_macs", flops.weight_macs},
                 {"bias_adds", flops.bias_adds},
                 {"accuracy_unpruned", acc_unpruned},
                 {"accuracy_pruned", acc_pruned},
                 {"accuracy_drop", acc_unpruned - acc_pruned}};
    if (report) {
        summary["kept_weights"] = report_json(*report);
        outcome.bimodality = report->bimodality_flag;
        outcome.excess_kurtosis = report->excess_kurtosis;
        write_hist_csv(*report, out_dir + "/kept_weights");
    }
    atomic_write_file(outcome.summary_path, summary.dump(2) + "\n");
    return outcome;
}

AnalyzeOutcome run_analyze(const std::string& checkpoint_path, std::size_t bins,
                           const std::string& out_dir) {
    ensure_dir(out_dir);
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const NetworkParams& params = ck.ensemble.particles.front().params;

    json layers = json::array();
    std::vector<double> pooled;
    const auto per_layer = layer_weight_values(params);
    for (std::size_t l = 0; l < per_layer.size(); ++l) {
        const auto& w = per_layer[l];
        pooled.insert(pooled.end(), w.begin(), w.end());
        json entry{{"layer", l}, {"count", w.size()}};
        if (w.size() >= 100) {
            const DistributionReport report = distribution_report(w, bins);
            entry.update(report_json(report));
            // Fig-5-style "circle": density of the near-zero bin, against the
            // moment-fitted Gaussian's prediction at the same bin center.
            std::size_t zb = 0;
            double best = INFINITY;
            for (std::size_t i = 0; i + 1 < report.bin_edges.size(); ++i) {
                const double c = 0.5 * (report.bin_edges[i] + report.bin_edges[i + 1]);
                if (std::abs(c) < best) {
                    best = std::abs(c);
                    zb = i;
                }
            }
            const double center = 0.5 * (report.bin_edges[zb] + report.bin_edges[zb + 1]);
            entry["gaussian_fit_density_at_zero_bin"] =
                gaussian_density(center, report.mean, report.stddev);
            write_hist_csv(report, out_dir + "/layer" + std::to_string(l));
        } else {
            entry["skipped"] = "fewer than 100 weights";
        }
        layers.push_back(entry);
    }

    json summary{{"layers", layers}, {"particles", ck.ensemble.size()}};
    if (pooled.size() >= 100) {
        const DistributionReport network_report = distribution_report(pooled, bins);
        summary["network"] = report_json(network_report);
        write_hist_csv(network_report, out_dir + "/network");
    }

    AnalyzeOutcome outcome;
    outcome.summary_path = out_dir + "/analysis.json";
    atomic_write_file(outcome.summary_path, summary.dump(2) + "\n");
    return outcome;
}

SweepOutcome run_sweep(ExperimentConfig config, const std::string& kind,
                       const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    if (seed_override) config.train.seed = *seed_override;
    const std::uint64_t hash = config_hash(config);
    const std::string run_id = run_id_for(hash, config.train.seed);
    ensure_dir(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    PreparedData data = prepare_data(config);
    const auto topology = config.topology(data.train.feature_dim(), data.classes);

    UncertaintySweepResult result;
    if (kind == "aleatoric")
        result = aleatoric_sweep(data.train, config.sweep.aleatoric_levels, topology, config.train,
                                 config.train.seed);
    else if (kind == "epistemic")
        result = epistemic_sweep(data.train, config.sweep.epistemic_fractions, topology,
                                 config.train, config.train.seed);
    else
        throw ConfigError("unknown sweep kind '" + kind + "' (expected aleatoric|epistemic)");

    std::ostringstream lines, csv;
    csv << "label,level,aleatoric_inv_d,epistemic_param_dispersion,"
           "epistemic_prediction_variance,accuracy,status\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        const SweepCell& cell = result.cells[i];
        json rec{{"run_id", run_id},
                 {"config_hash", hex64(hash)},
                 {"kind", kind},
                 {"cell", i},
                 {"label", cell.label},
                 {"level", cell.level},
                 {"status", cell.failed ? "failed" : "ok"},
                 {"wall_clock_ms", wall_ms(t0)}};
        if (!cell.failed) {
            rec["aleatoric_inv_d"] = cell.aleatoric_inv_d;
            rec["epistemic_param_dispersion"] = cell.epistemic_param_dispersion;
            rec["epistemic_prediction_variance"] = cell.epistemic_prediction_variance;
            rec["accuracy"] = cell.accuracy;
        }
        lines << rec.dump() << "\n";
        csv << cell.label << "," << cell.level << ",";
        if (cell.failed)
            csv << ",,,,failed\n";
        else
            csv << cell.aleatoric_inv_d << "," << cell.epistemic_param_dispersion << ","
                << cell.epistemic_prediction_variance << "," << cell.accuracy << ",ok\n";
    }

    SweepOutcome outcome;
    outcome.failed = result.failed_count();
    outcome.succeeded = result.cells.size() - outcome.failed;
    outcome.jsonl_path = out_dir + "/sweep_" + kind + ".jsonl";
    outcome.csv_path = out_dir + "/sweep_" + kind + ".csv";
    outcome.result = std::move(result);
    atomic_write_file(outcome.jsonl_path, lines.str());
    atomic_write_file(outcome.csv_path, csv.str());
    return outcome;
}

EfficiencyReport run_crlb(const std::string& noise_case, double eps2, double alpha2, double beta2) {
    EfficiencyInputs inputs;
    inputs.eps2 = eps2;
    inputs.alpha2 = alpha2;
    inputs.beta2 = beta2;
    return efficiency(noise_case_from_string(noise_case), inputs);
}

AnalyzeOutcome run_export_hist(const std::string& checkpoint_path, std::size_t bins, int layer,
                               const std::string& out_dir) {
    ensure_dir(out_dir);
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const NetworkParams& params = ck.ensemble.particles.front().params;
    const auto per_layer = layer_weight_values(params);

    json exported = json::array();
    auto export_one = [&](std::size_t l) {
        const auto& w = per_layer[l];
        if (w.size() < 100)
            throw DomainError("layer " + std::to_string(l) + " has fewer than 100 weights");
        const DistributionReport report = distribution_report(w, bins);
        write_hist_csv(report, out_dir + "/hist_layer" + std::to_string(l));
        json entry{{"layer", l}};
        entry.update(report_json(report));
        exported.push_back(entry);
    };
    if (layer >= 0) {
        if (static_cast<std::size_t>(layer) >= per_layer.size())
            throw ConfigError("layer index out of range");
        export_one(static_cast<std::size_t>(layer));
    } else {
        for (std::size_t l = 0; l < per_layer.size(); ++l)
            if (per_layer[l].size() >= 100) export_one(l);
    }

    AnalyzeOutcome outcome;
    outcome.summary_path = out_dir + "/hist_summary.json";
    atomic_write_file(outcome.summary_path, json{{"layers", exported}}.dump(2) + "\n");
    return outcome;
}

}  // namespace steinprune
