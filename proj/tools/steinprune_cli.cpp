// Command-line front end. Talks to the core exclusively through the C API in
// steinprune/steinprune.h.
//
// Exit codes: 0 success, 2 invalid config/arguments, 3 training divergence
// (trace retained), 4 all sweep cells failed.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "steinprune/steinprune.h"

namespace {

int exit_code_for(sp_status status) {
    switch (status) {
        case SP_OK: return 0;
        case SP_ERR_DIVERGED: return 3;
        case SP_ERR_SWEEP_ALL_FAILED: return 4;
        default: return 2;
    }
}

int finish(sp_status status) {
    if (status != SP_OK) std::fprintf(stderr, "error: %s\n", sp_last_error());
    return exit_code_for(status);
}

bool seed_override_from_env(uint64_t& seed) {
    const char* env = std::getenv("STEINPRUNE_SEED");
    if (!env || !*env) return false;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') {
        std::fprintf(stderr, "error: STEINPRUNE_SEED is not an integer: '%s'\n", env);
        std::exit(2);
    }
    seed = static_cast<uint64_t>(v);
    return true;
}

struct ConfigHandle {
    sp_config* ptr = nullptr;
    ~ConfigHandle() { sp_config_free(ptr); }
};

bool load_config_or_fail(const std::string& path, ConfigHandle& handle) {
    const sp_status status = sp_config_load(path.c_str(), &handle.ptr);
    if (status != SP_OK) {
        std::fprintf(stderr, "error: %s\n", sp_last_error());
        return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spike-and-slab network pruning via Stein variational inference"};
    app.require_subcommand(1);

    uint64_t seed_override = 0;
    const bool has_seed_override = seed_override_from_env(seed_override);

    // train
    std::string train_config, train_out = "out", train_resume;
    auto* cmd_train = app.add_subcommand("train", "Train a particle ensemble from a config file");
    cmd_train->add_option("config", train_config, "config file")->required();
    cmd_train->add_option("--out", train_out, "output directory");
    cmd_train->add_option("--resume", train_resume, "checkpoint to resume from");

    // prune
    std::string prune_config, prune_ckpt, prune_method = "dllp_slab", prune_mode = "sparsity",
                prune_out = "out";
    double prune_value = std::nan("");
    auto* cmd_prune = app.add_subcommand("prune", "Extract or prune a trained checkpoint");
    cmd_prune->add_option("config", prune_config, "config file")->required();
    cmd_prune->add_option("checkpoint", prune_ckpt, "trained checkpoint")->required();
    cmd_prune->add_option("--method", prune_method, "dllp_slab | magnitude");
    cmd_prune->add_option("--mode", prune_mode, "sparsity | threshold (magnitude only)");
    cmd_prune->add_option("--value", prune_value,
                          "gate threshold (dllp_slab) or sparsity/threshold (magnitude)");
    cmd_prune->add_option("--out", prune_out, "output directory");

    // analyze
    std::string analyze_ckpt, analyze_out = "out";
    uint32_t analyze_bins = 61;
    auto* cmd_analyze = app.add_subcommand("analyze", "Layer-wise weight distribution reports");
    cmd_analyze->add_option("checkpoint", analyze_ckpt, "checkpoint")->required();
    cmd_analyze->add_option("--bins", analyze_bins, "histogram bins");
    cmd_analyze->add_option("--out", analyze_out, "output directory");

    // sweep
    std::string sweep_config, sweep_kind, sweep_out = "out";
    auto* cmd_sweep = app.add_subcommand("sweep", "Uncertainty sweeps (aleatoric | epistemic)");
    cmd_sweep->add_option("config", sweep_config, "config file")->required();
    cmd_sweep->add_option("kind", sweep_kind, "aleatoric | epistemic")->required();
    cmd_sweep->add_option("--out", sweep_out, "output directory");

    // crlb
    std::string crlb_case = "clean";
    double eps2 = 1.0, alpha2 = 0.0, beta2 = 0.0;
    bool crlb_json = false;
    auto* cmd_crlb = app.add_subcommand("crlb", "Closed-form estimation efficiency");
    cmd_crlb->add_option("--case", crlb_case, "clean | model_noise | data_noise | both");
    cmd_crlb->add_option("--eps2", eps2, "observation noise variance");
    cmd_crlb->add_option("--alpha2", alpha2, "model parameter variance");
    cmd_crlb->add_option("--beta2", beta2, "data noise variance");
    cmd_crlb->add_flag("--json", crlb_json, "machine-readable output");

    // export-hist
    std::string hist_ckpt, hist_out = "out";
    uint32_t hist_bins = 61;
    int32_t hist_layer = -1;
    auto* cmd_hist = app.add_subcommand("export-hist", "Export histogram CSVs from a checkpoint");
    cmd_hist->add_option("checkpoint", hist_ckpt, "checkpoint")->required();
    cmd_hist->add_option("--bins", hist_bins, "histogram bins");
    cmd_hist->add_option("--layer", hist_layer, "layer index (-1 = all)");
    cmd_hist->add_option("--out", hist_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (cmd_train->parsed()) {
        ConfigHandle cfg;
        if (!load_config_or_fail(train_config, cfg)) return 2;
        return finish(sp_train(cfg.ptr, train_resume.empty() ? nullptr : train_resume.c_str(),
                               train_out.c_str(), has_seed_override ? 1 : 0, seed_override));
    }
    if (cmd_prune->parsed()) {
        ConfigHandle cfg;
        if (!load_config_or_fail(prune_config, cfg)) return 2;
        return finish(sp_prune(cfg.ptr, prune_ckpt.c_str(), prune_method.c_str(),
                               prune_mode.c_str(), prune_value, prune_out.c_str(),
                               has_seed_override ? 1 : 0, seed_override));
    }
    if (cmd_analyze->parsed())
        return finish(sp_analyze(analyze_ckpt.c_str(), analyze_bins, analyze_out.c_str()));
    if (cmd_sweep->parsed()) {
        ConfigHandle cfg;
        if (!load_config_or_fail(sweep_config, cfg)) return 2;
        return finish(sp_sweep(cfg.ptr, sweep_kind.c_str(), sweep_out.c_str(),
                               has_seed_override ? 1 : 0, seed_override));
    }
    if (cmd_crlb->parsed()) {
        sp_efficiency_report report;
        const sp_status status = sp_crlb_eval(crlb_case.c_str(), eps2, alpha2, beta2, &report);
        if (status != SP_OK) return finish(status);
        if (crlb_json)
            std::printf("{\"case\":\"%s\",\"crlb\":%.17g,\"estimator_variance\":%.17g,"
                        "\"efficiency\":%.17g}\n",
                        crlb_case.c_str(), report.crlb, report.estimator_variance,
                        report.efficiency);
        else
            std::printf("case: %s\ncrlb: %.17g\nestimator variance: %.17g\nefficiency: %.17g\n",
                        crlb_case.c_str(), report.crlb, report.estimator_variance,
                        report.efficiency);
        return 0;
    }
    if (cmd_hist->parsed())
        return finish(sp_export_hist(hist_ckpt.c_str(), hist_bins, hist_layer, hist_out.c_str()));
    return 2;
}
