#include "steinprune/pruning.hpp"

#include <algorithm>
#include <cmath>

namespace steinprune {

void PruneMask::recompute_sparsity() {
    sparsity = keep.empty() ? 0.0
                            : 1.0 - static_cast<double>(kept_count()) / static_cast<double>(keep.size());
}

std::size_t PruneMask::kept_count() const {
    std::size_t c = 0;
    for (std::uint8_t k : keep) c += k ? 1 : 0;
    return c;
}

std::pair<PruneMask, NetworkParams> extract_slab(const Particle& particle, double gate_threshold) {
    PruneMask mask;
    mask.origin = MaskOrigin::DllpSlab;
    const std::size_t m = particle.gates.size();
    mask.keep.resize(m);
    for (std::size_t i = 0; i < m; ++i)
        mask.keep[i] = particle.gates.prob(i) >= gate_threshold ? 1 : 0;
    mask.recompute_sparsity();
    return {mask, apply_mask(particle.params, mask)};
}

PruneMask magnitude_prune_threshold(const NetworkParams& params, double delta) {
    if (delta < 0.0) throw DomainError("magnitude threshold must be >= 0");
    PruneMask mask;
    mask.origin = MaskOrigin::Magnitude;
    const std::vector<double> flat = params.flatten();
    mask.keep.resize(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i)
        mask.keep[i] = std::abs(flat[i]) > delta ? 1 : 0;
    mask.recompute_sparsity();
    return mask;
}

PruneMask magnitude_prune_sparsity(const NetworkParams& params, double target_sparsity) {
    if (target_sparsity < 0.0 || target_sparsity > 1.0)
        throw DomainError("target_sparsity must lie in [0,1]");
    const std::vector<double> flat = params.flatten();
    const std::size_t m = flat.size();
    const std::size_t drop =
        static_cast<std::size_t>(std::llround(target_sparsity * static_cast<double>(m)));

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(flat[a]), mb = std::abs(flat[b]);
        if (ma != mb) return ma < mb;
        return a < b;  // ties: lowest index dropped first
    });

    PruneMask mask;
    mask.origin = MaskOrigin::Magnitude;
    mask.keep.assign(m, 1);
    for (std::size_t k = 0; k < drop && k < m; ++k) mask.keep[order[k]] = 0;
    mask.recompute_sparsity();
    return mask;
}

NetworkParams apply_mask(const NetworkParams& params, const PruneMask& mask) {
    if (mask.keep.size() != params.scalar_count())
        throw ShapeError("mask length does not match parameter count");
    NetworkParams pruned = params;
    std::vector<double> flat = pruned.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i)
        if (!mask.keep[i]) flat[i] = 0.0;
    pruned.unflatten(flat);
    return pruned;
}

std::vector<double> kept_weight_values(const NetworkParams& params, const PruneMask& mask) {
    const std::vector<double> flat = params.flatten();
    const std::vector<bool> is_weight = NetworkParams::weight_positions(params.topology());
    if (mask.keep.size() != flat.size()) throw ShapeError("mask length does not match parameter count");
    std::vector<double> kept;
    for (std::size_t i = 0; i < flat.size(); ++i)
        if (mask.keep[i] && is_weight[i]) kept.push_back(flat[i]);
    return kept;
}

FlopsEstimate flops_estimate(const std::vector<LayerSpec>& topology, const PruneMask& mask) {
    std::size_t expected = 0;
    for (const auto& s : topology) expected += s.fan_in * s.fan_out + s.fan_out;
    if (mask.keep.size() != expected) throw ShapeError("mask does not align with topology");

    FlopsEstimate est;
    std::size_t k = 0;
    for (const auto& s : topology) {
        for (std::size_t i = 0; i < s.fan_in * s.fan_out; ++i)
            est.weight_macs += mask.keep[k++] ? 1 : 0;
        for (std::size_t i = 0; i < s.fan_out; ++i)
            est.bias_adds += mask.keep[k++] ? 1 : 0;
    }
    return est;
}

}  // namespace steinprune
