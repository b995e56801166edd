#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "steinprune/train.hpp"

namespace steinprune {

enum class MaskOrigin : std::uint8_t {
    DllpSlab = 0,
    Magnitude = 1,
    L1TrainedMagnitude = 2,
    L2TrainedMagnitude = 3,
};

struct PruneMask {
    std::vector<std::uint8_t> keep;  // length M, canonical flattening order
    double sparsity = 0.0;           // 1 - kept/M
    MaskOrigin origin = MaskOrigin::DllpSlab;

    void recompute_sparsity();
    std::size_t kept_count() const;
};

// Slab extraction: keep[i] = (theta_i >= gate_threshold); dropped weights are
// zeroed in the returned parameter copy. Ties at the threshold are kept,
// matching harden().
std::pair<PruneMask, NetworkParams> extract_slab(const Particle& particle,
                                                 double gate_threshold = 0.5);

// keep[i] = (|w_i| > delta).
PruneMask magnitude_prune_threshold(const NetworkParams& params, double delta);

// Drops exactly round(target_sparsity * M) scalars, smallest magnitudes
// first; ties at the cut are broken lowest-index-dropped-first.
PruneMask magnitude_prune_sparsity(const NetworkParams& params, double target_sparsity);

NetworkParams apply_mask(const NetworkParams& params, const PruneMask& mask);

// Values of the kept weight-matrix entries (bias positions excluded).
std::vector<double> kept_weight_values(const NetworkParams& params, const PruneMask& mask);

// Dense multiply-accumulate model: one MAC per surviving weight entry;
// surviving biases counted separately as adds.
struct FlopsEstimate {
    std::uint64_t weight_macs = 0;
    std::uint64_t bias_adds = 0;
};
FlopsEstimate flops_estimate(const std::vector<LayerSpec>& topology, const PruneMask& mask);

}  // namespace steinprune
