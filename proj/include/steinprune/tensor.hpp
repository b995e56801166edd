#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "steinprune/errors.hpp"
#include "steinprune/rng.hpp"

namespace steinprune {

// Dense row-major tensor of 64-bit floats.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> values_);

    static Tensor zeros(std::vector<std::size_t> shape);

    std::size_t size() const { return values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    bool all_finite() const;
    void require_finite(const std::string& what) const;
};

// A batch of inputs with either integer class labels (classification) or
// real-valued targets (regression). N may be zero for the degenerate
// empty-likelihood case; loaders and generators always produce N >= 1.
struct DatasetBatch {
    Tensor inputs;  // [N x D]
    std::vector<int> labels;
    std::vector<double> targets;
    bool regression = false;

    std::size_t size() const { return inputs.rows(); }
    std::size_t feature_dim() const { return inputs.cols(); }
    DatasetBatch select(const std::vector<std::size_t>& indices) const;
    void validate(std::size_t num_classes) const;
};

enum class Activation { Relu, Identity, SoftmaxOut };

struct LayerSpec {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    Activation activation = Activation::Identity;
};

void validate_topology(const std::vector<LayerSpec>& topology);

// Learnable parameters of a dense network. The canonical flattening order,
// used for gates, masks, scores and checkpoints alike, is: layer 0 weights
// row-major, layer 0 biases, layer 1 weights, layer 1 biases, ...
struct NetworkParams {
    struct Layer {
        Tensor weight;  // [fan_out x fan_in]
        Tensor bias;    // [fan_out]
        Activation activation = Activation::Identity;
    };

    std::vector<Layer> layers;

    std::size_t scalar_count() const;  // M
    std::vector<LayerSpec> topology() const;

    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);

    // Weight entries only (bias positions skipped), in flattening order.
    std::vector<double> flatten_weights_only() const;
    // keep[i] true when flat index i addresses a weight (not a bias).
    static std::vector<bool> weight_positions(const std::vector<LayerSpec>& topology);
};

NetworkParams init_network(const std::vector<LayerSpec>& topology, RngState& rng);

}  // namespace steinprune
