#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "steinprune/dataio.hpp"
#include "steinprune/train.hpp"

namespace steinprune {

// Flat sectioned key/value config text:
//   [section]
//   key = value        # comment
// Unknown sections or keys are errors (field path "section.key"), values are
// type-checked up front, and the hash is taken over the canonical typed form
// so semantically equal configs hash equal.
enum class DatasetKind { Blobs, Linear, Csv, Idx };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Blobs;
    // blobs
    std::size_t classes = 2;
    std::size_t per_class = 320;
    std::size_t dim = 20;
    double separation = 6.0;
    // linear
    std::size_t samples = 256;
    double noise_std = 0.1;
    // csv / idx
    std::string path;
    bool has_header = false;
    std::string images;
    std::string labels;
    // common
    std::string normalization = "default";  // default | standardize | none
    double holdout_fraction = 0.25;
};

struct SweepConfig {
    std::vector<double> aleatoric_levels = {0.0, 0.1, 0.2, 0.4};
    std::vector<double> epistemic_fractions = {0.2, 0.4, 0.6, 0.8, 1.0};
};

struct ExperimentConfig {
    DatasetConfig dataset;
    std::vector<std::size_t> hidden = {128, 128};
    TrainConfig train;
    double gate_threshold = 0.5;
    std::size_t bins = 61;
    SweepConfig sweep;
    std::string output_dir = "out";

    std::vector<LayerSpec> topology(std::size_t input_dim, std::size_t classes) const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// FNV-1a over the canonical "section.key=value" lines of the parsed config.
std::uint64_t config_hash(const ExperimentConfig& config);

// Materialized dataset plus its recorded normalization and holdout split.
struct PreparedData {
    DatasetBatch train;
    DatasetBatch holdout;
    Normalization normalization;
    std::size_t classes = 0;
};
PreparedData prepare_data(const ExperimentConfig& config);

}  // namespace steinprune
