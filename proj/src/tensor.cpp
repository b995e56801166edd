#include "steinprune/tensor.hpp"

#include <cmath>
#include <numeric>

namespace steinprune {

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values_)
    : shape(std::move(shape_)), values(std::move(values_)) {
    std::size_t expect = 1;
    for (std::size_t d : shape) expect *= d;
    if (expect != values.size())
        throw ShapeError("tensor shape/value mismatch: product(shape)=" + std::to_string(expect) +
                         " but " + std::to_string(values.size()) + " values");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    Tensor t;
    t.shape = std::move(shape);
    t.values.assign(n, 0.0);
    return t;
}

std::size_t Tensor::rows() const { return shape.empty() ? 0 : shape[0]; }

std::size_t Tensor::cols() const {
    if (shape.size() < 2) return shape.size() == 1 ? 1 : 0;
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

bool Tensor::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::require_finite(const std::string& what) const {
    if (!all_finite()) throw NumericError("non-finite values in " + what);
}

DatasetBatch DatasetBatch::select(const std::vector<std::size_t>& indices) const {
    DatasetBatch out;
    const std::size_t d = feature_dim();
    out.inputs = Tensor::zeros({indices.size(), d});
    out.regression = regression;
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        for (std::size_t j = 0; j < d; ++j) out.inputs.at(k, j) = inputs.at(i, j);
        if (regression)
            out.targets.push_back(targets[i]);
        else
            out.labels.push_back(labels[i]);
    }
    return out;
}

void DatasetBatch::validate(std::size_t num_classes) const {
    if (!inputs.all_finite()) throw NumericError("non-finite dataset inputs");
    if (regression) {
        if (targets.size() != size()) throw ShapeError("targets/input count mismatch");
        return;
    }
    if (labels.size() != size()) throw ShapeError("labels/input count mismatch");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
            throw DomainError("class index " + std::to_string(y) + " out of range [0," +
                              std::to_string(num_classes) + ")");
}

void validate_topology(const std::vector<LayerSpec>& topology) {
    if (topology.empty()) throw ShapeError("network needs at least one layer");
    for (std::size_t l = 0; l < topology.size(); ++l) {
        const auto& s = topology[l];
        if (s.fan_in < 1 || s.fan_out < 1) throw ShapeError("layer fan_in/fan_out must be >= 1");
        if (s.activation == Activation::SoftmaxOut && l + 1 != topology.size())
            throw ShapeError("softmax-out allowed only on the final layer");
        if (l > 0 && topology[l - 1].fan_out != s.fan_in)
            throw ShapeError("layer " + std::to_string(l) + " fan_in does not match previous fan_out");
    }
}

std::size_t NetworkParams::scalar_count() const {
    std::size_t m = 0;
    for (const auto& l : layers) m += l.weight.size() + l.bias.size();
    return m;
}

std::vector<LayerSpec> NetworkParams::topology() const {
    std::vector<LayerSpec> t;
    t.reserve(layers.size());
    for (const auto& l : layers)
        t.push_back({l.weight.cols(), l.weight.rows(), l.activation});
    return t;
}

std::vector<double> NetworkParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(scalar_count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.weight.values.begin(), l.weight.values.end());
        flat.insert(flat.end(), l.bias.values.begin(), l.bias.values.end());
    }
    return flat;
}

void NetworkParams::unflatten(const std::vector<double>& flat) {
    if (flat.size() != scalar_count()) throw ShapeError("flat vector length does not match parameter count");
    std::size_t k = 0;
    for (auto& l : layers) {
        for (double& v : l.weight.values) v = flat[k++];
        for (double& v : l.bias.values) v = flat[k++];
    }
}

std::vector<double> NetworkParams::flatten_weights_only() const {
    std::vector<double> flat;
    for (const auto& l : layers)
        flat.insert(flat.end(), l.weight.values.begin(), l.weight.values.end());
    return flat;
}

std::vector<bool> NetworkParams::weight_positions(const std::vector<LayerSpec>& topology) {
    std::vector<bool> pos;
    for (const auto& s : topology) {
        pos.insert(pos.end(), s.fan_in * s.fan_out, true);
        pos.insert(pos.end(), s.fan_out, false);
    }
    return pos;
}

NetworkParams init_network(const std::vector<LayerSpec>& topology, RngState& rng) {
    validate_topology(topology);
    NetworkParams params;
    for (const auto& s : topology) {
        NetworkParams::Layer layer;
        layer.weight = Tensor::zeros({s.fan_out, s.fan_in});
        layer.bias = Tensor::zeros({s.fan_out});
        layer.activation = s.activation;
        const double std_dev = std::sqrt(2.0 / static_cast<double>(s.fan_in));
        for (double& w : layer.weight.values) w = std_dev * rng.next_gaussian();
        params.layers.push_back(std::move(layer));
    }
    return params;
}

}  // namespace steinprune
