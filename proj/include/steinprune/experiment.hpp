#pragma once

#include <optional>
#include <string>

#include "steinprune/checkpoint.hpp"
#include "steinprune/config.hpp"
#include "steinprune/reliability.hpp"

namespace steinprune {

// Orchestration behind the CLI commands. Every run writes append-only JSONL
// metric records {run_id, config_hash, metric, value, step, wall_clock_ms};
// all file writes are atomic. run_id is deterministic (config hash + seed) so
// identical runs produce identical records up to the wall-clock field.

struct TrainOutcome {
    bool diverged = false;
    std::string checkpoint_path;
    std::string trace_path;
    TrainingTrace trace;
};

TrainOutcome run_train(ExperimentConfig config, const std::string& out_dir,
                       const std::string& resume_checkpoint = "",
                       std::optional<std::uint64_t> seed_override = std::nullopt);

struct PruneOutcome {
    std::string mask_path;
    std::string pruned_checkpoint_path;
    std::string summary_path;
    double sparsity = 0.0;
    double accuracy_pruned = 0.0;
    double accuracy_unpruned = 0.0;
    bool bimodality = false;
    double excess_kurtosis = 0.0;
};

// method: "dllp_slab" (value = gate threshold; NaN uses the config default)
// or "magnitude" with mode "sparsity" | "threshold".
PruneOutcome run_prune(ExperimentConfig config, const std::string& checkpoint_path,
                       const std::string& method, const std::string& mode, double value,
                       const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

struct AnalyzeOutcome {
    std::string summary_path;
};

AnalyzeOutcome run_analyze(const std::string& checkpoint_path, std::size_t bins,
                           const std::string& out_dir);

struct SweepOutcome {
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    std::string jsonl_path;
    std::string csv_path;
    UncertaintySweepResult result;
};

SweepOutcome run_sweep(ExperimentConfig config, const std::string& kind,
                       const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

EfficiencyReport run_crlb(const std::string& noise_case, double eps2, double alpha2, double beta2);

AnalyzeOutcome run_export_hist(const std::string& checkpoint_path, std::size_t bins, int layer,
                               const std::string& out_dir);

}  // namespace steinprune
