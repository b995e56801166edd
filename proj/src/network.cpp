#include "steinprune/network.hpp"

#include <algorithm>
#include <cmath>

namespace steinprune {

namespace {

// Gate slices per layer within the canonical flattening order.
struct GateView {
    const double* weight = nullptr;  // fan_out*fan_in entries, or null
    const double* bias = nullptr;    // fan_out entries, or null
};

std::vector<GateView> gate_views(const NetworkParams& params, const std::vector<double>* gates) {
    std::vector<GateView> views(params.layers.size());
    if (!gates) return views;
    if (gates->size() != params.scalar_count())
        throw ShapeError("gate vector length " + std::to_string(gates->size()) +
                         " does not match parameter count " + std::to_string(params.scalar_count()));
    std::size_t k = 0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        views[l].weight = gates->data() + k;
        k += params.layers[l].weight.size();
        views[l].bias = gates->data() + k;
        k += params.layers[l].bias.size();
    }
    return views;
}

void apply_activation(Tensor& t, Activation act) {
    switch (act) {
        case Activation::Relu:
            for (double& v : t.values) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::Identity:
        case Activation::SoftmaxOut:
            break;  // logits are returned pre-softmax
    }
}

double logsumexp_row(const Tensor& logits, std::size_t row) {
    const std::size_t c = logits.cols();
    double mx = logits.at(row, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, logits.at(row, j));
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(logits.at(row, j) - mx);
    return mx + std::log(s);
}

}  // namespace

Gradients Gradients::zeros_like(const NetworkParams& params, bool with_gates) {
    Gradients g;
    for (const auto& l : params.layers) {
        g.weight.push_back(Tensor::zeros(l.weight.shape));
        g.bias.push_back(Tensor::zeros(l.bias.shape));
    }
    if (with_gates) g.gates.assign(params.scalar_count(), 0.0);
    return g;
}

std::vector<double> Gradients::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weight.size(); ++l) {
        flat.insert(flat.end(), weight[l].values.begin(), weight[l].values.end());
        flat.insert(flat.end(), bias[l].values.begin(), bias[l].values.end());
    }
    return flat;
}

ForwardTrace forward_trace(const NetworkParams& params, const std::vector<double>* gates,
                           const DatasetBatch& batch) {
    if (params.layers.empty()) throw ShapeError("empty network");
    if (batch.feature_dim() != params.layers.front().weight.cols())
        throw ShapeError("input dim " + std::to_string(batch.feature_dim()) +
                         " does not match first layer fan_in " +
                         std::to_string(params.layers.front().weight.cols()));
    batch.inputs.require_finite("forward inputs");

    const auto views = gate_views(params, gates);
    const std::size_t n = batch.size();

    ForwardTrace trace;
    trace.input = batch.inputs;
    const Tensor* cur = &trace.input;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        const std::size_t fo = layer.weight.rows();
        const std::size_t fi = layer.weight.cols();
        Tensor z = Tensor::zeros({n, fo});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < fo; ++r) {
                double acc = 0.0;
                const double* wrow = layer.weight.values.data() + r * fi;
                const double* grow = views[l].weight ? views[l].weight + r * fi : nullptr;
                const double* xrow = cur->values.data() + i * fi;
                if (grow) {
                    for (std::size_t c = 0; c < fi; ++c) acc += (wrow[c] * grow[c]) * xrow[c];
                    acc += layer.bias.values[r] * views[l].bias[r];
                } else {
                    for (std::size_t c = 0; c < fi; ++c) acc += wrow[c] * xrow[c];
                    acc += layer.bias.values[r];
                }
                z.at(i, r) = acc;
            }
        }
        trace.pre.push_back(z);
        apply_activation(z, layer.activation);
        trace.post.push_back(std::move(z));
        cur = &trace.post.back();
    }
    trace.post.back().require_finite("forward logits");
    return trace;
}

Tensor forward(const NetworkParams& params, const std::vector<double>* gates,
               const DatasetBatch& batch) {
    return forward_trace(params, gates, batch).post.back();
}

Tensor softmax(const Tensor& logits) {
    Tensor p = logits;
    const std::size_t n = logits.rows(), c = logits.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double lse = logsumexp_row(logits, i);
        for (std::size_t j = 0; j < c; ++j) p.at(i, j) = std::exp(logits.at(i, j) - lse);
    }
    return p;
}

double cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const std::size_t n = logits.rows(), c = logits.cols();
    if (labels.size() != n) throw ShapeError("one logit row per label required");
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw DomainError("label " + std::to_string(y) + " out of range for " +
                              std::to_string(c) + " classes");
        loss += logsumexp_row(logits, i) - logits.at(i, static_cast<std::size_t>(y));
    }
    return loss / static_cast<double>(n);
}

double squared_residual_sum(const ForwardTrace& trace, const DatasetBatch& batch) {
    const Tensor& logits = trace.logits();
    const std::size_t n = logits.rows(), c = logits.cols();
    double ssr = 0.0;
    if (batch.regression) {
        if (c != 1) throw ShapeError("regression batches require a single output unit");
        for (std::size_t i = 0; i < n; ++i) {
            const double r = batch.targets[i] - logits.at(i, 0);
            ssr += r * r;
        }
        return ssr;
    }
    const Tensor p = softmax(logits);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double t = (static_cast<std::size_t>(batch.labels[i]) == j) ? 1.0 : 0.0;
            const double r = t - p.at(i, j);
            ssr += r * r;
        }
    }
    return ssr;
}

Gradients backward_from(const ForwardTrace& trace, const NetworkParams& params,
                        const std::vector<double>* gates, const DatasetBatch& batch,
                        LossKind kind) {
    const auto views = gate_views(params, gates);
    const std::size_t n = batch.size();
    const std::size_t num_layers = params.layers.size();
    const Tensor& logits = trace.logits();
    const std::size_t c = logits.cols();

    // Seed delta = d loss / d logits.
    Tensor delta = Tensor::zeros({n, c});
    if (kind == LossKind::CrossEntropy) {
        if (batch.regression) throw DomainError("cross-entropy requires class labels");
        const Tensor p = softmax(logits);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                const double t = (static_cast<std::size_t>(batch.labels[i]) == j) ? 1.0 : 0.0;
                delta.at(i, j) = (p.at(i, j) - t) / static_cast<double>(n);
            }
    } else if (batch.regression) {
        if (c != 1) throw ShapeError("regression batches require a single output unit");
        for (std::size_t i = 0; i < n; ++i)
            delta.at(i, 0) = 2.0 * (logits.at(i, 0) - batch.targets[i]);
    } else {
        // SSR through the softmax map: dJ/dz_k = 2 f_k [(f_k - t_k) - sum_c (f_c - t_c) f_c].
        const Tensor p = softmax(logits);
        for (std::size_t i = 0; i < n; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                const double t = (static_cast<std::size_t>(batch.labels[i]) == j) ? 1.0 : 0.0;
                dot += (p.at(i, j) - t) * p.at(i, j);
            }
            for (std::size_t j = 0; j < c; ++j) {
                const double t = (static_cast<std::size_t>(batch.labels[i]) == j) ? 1.0 : 0.0;
                delta.at(i, j) = 2.0 * p.at(i, j) * ((p.at(i, j) - t) - dot);
            }
        }
    }

    Gradients grads = Gradients::zeros_like(params, gates != nullptr);
    std::size_t gate_offset = gates ? params.scalar_count() : 0;

    for (std::size_t li = num_layers; li-- > 0;) {
        const auto& layer = params.layers[li];
        const std::size_t fo = layer.weight.rows();
        const std::size_t fi = layer.weight.cols();
        const Tensor& below = (li == 0) ? trace.input : trace.post[li - 1];

        if (gates) gate_offset -= fo + fo * fi;

        // grad of the effective (gated) parameters, then split into
        // parameter and gate gradients via the product rule.
        for (std::size_t r = 0; r < fo; ++r) {
            double gb_eff = 0.0;
            for (std::size_t i = 0; i < n; ++i) gb_eff += delta.at(i, r);
            const double gb = views[li].bias ? views[li].bias[r] : 1.0;
            grads.bias[li].values[r] = gb_eff * gb;
            if (gates) grads.gates[gate_offset + fo * fi + r] = gb_eff * layer.bias.values[r];
            for (std::size_t col = 0; col < fi; ++col) {
                double gw_eff = 0.0;
                for (std::size_t i = 0; i < n; ++i) gw_eff += delta.at(i, r) * below.at(i, col);
                const double gw = views[li].weight ? views[li].weight[r * fi + col] : 1.0;
                grads.weight[li].at(r, col) = gw_eff * gw;
                if (gates) grads.gates[gate_offset + r * fi + col] = gw_eff * layer.weight.at(r, col);
            }
        }

        if (li == 0) break;

        // Propagate delta to the previous layer's pre-activation.
        Tensor next_delta = Tensor::zeros({n, fi});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t col = 0; col < fi; ++col) {
                double acc = 0.0;
                for (std::size_t r = 0; r < fo; ++r) {
                    const double gw = views[li].weight ? views[li].weight[r * fi + col] : 1.0;
                    acc += delta.at(i, r) * layer.weight.at(r, col) * gw;
                }
                if (params.layers[li - 1].activation == Activation::Relu &&
                    trace.pre[li - 1].at(i, col) <= 0.0)
                    acc = 0.0;
                next_delta.at(i, col) = acc;
            }
        }
        delta = std::move(next_delta);
    }
    return grads;
}

Gradients backward(const NetworkParams& params, const std::vector<double>* gates,
                   const DatasetBatch& batch, LossKind kind) {
    const ForwardTrace trace = forward_trace(params, gates, batch);
    return backward_from(trace, params, gates, batch, kind);
}

void sgd_step(NetworkParams& params, const Gradients& grads, double learning_rate) {
    if (learning_rate <= 0.0) throw DomainError("learning_rate must be > 0");
    if (grads.weight.size() != params.layers.size())
        throw ShapeError("gradient/parameter layer count mismatch");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        if (!grads.weight[l].all_finite() || !grads.bias[l].all_finite())
            throw NumericError("non-finite gradient in layer " + std::to_string(l));
        auto& layer = params.layers[l];
        for (std::size_t k = 0; k < layer.weight.size(); ++k)
            layer.weight.values[k] -= learning_rate * grads.weight[l].values[k];
        for (std::size_t k = 0; k < layer.bias.size(); ++k)
            layer.bias.values[k] -= learning_rate * grads.bias[l].values[k];
    }
}

double accuracy(const NetworkParams& params, const std::vector<double>* gates,
                const DatasetBatch& batch) {
    if (batch.regression) throw DomainError("accuracy requires class labels");
    if (batch.size() == 0) return 0.0;
    const Tensor logits = forward(params, gates, batch);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t arg = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits.at(i, j) > logits.at(i, arg)) arg = j;
        if (arg == static_cast<std::size_t>(batch.labels[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

}  // namespace steinprune
