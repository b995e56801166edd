#pragma once

#include <optional>
#include <vector>

#include "steinprune/tensor.hpp"

namespace steinprune {

// Per-layer activations retained by a forward pass so that both loss kinds
// can be backpropagated from the same evaluation.
struct ForwardTrace {
    Tensor input;               // [N x D]
    std::vector<Tensor> pre;    // pre-activation per layer
    std::vector<Tensor> post;   // post-activation per layer (logits for the last)
    const Tensor& logits() const { return post.back(); }
};

// Scalar quantity the backward pass differentiates.
//   CrossEntropy    : mean over the batch of -log softmax(logits)[label]
//   SquaredResidual : sum over samples and outputs of (target - f)^2, where
//                     f is the softmax output for classification batches and
//                     the raw output for regression batches. This is the
//                     residual term of the Gaussian likelihood.
enum class LossKind { CrossEntropy, SquaredResidual };

struct Gradients {
    std::vector<Tensor> weight;  // aligned with params.layers
    std::vector<Tensor> bias;
    std::vector<double> gates;   // d loss / d gate, length M; empty when no gates given

    static Gradients zeros_like(const NetworkParams& params, bool with_gates);
    std::vector<double> flatten() const;  // canonical flattening order
};

// Gated forward pass: every weight and bias scalar is multiplied by its gate
// before use. `gates`, when present, must have exactly M entries in the
// canonical flattening order.
Tensor forward(const NetworkParams& params, const std::vector<double>* gates,
               const DatasetBatch& batch);
ForwardTrace forward_trace(const NetworkParams& params, const std::vector<double>* gates,
                           const DatasetBatch& batch);

double cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Row-wise softmax of logits (log-sum-exp stabilized).
Tensor softmax(const Tensor& logits);

// Sum over samples and output dims of squared residuals (see LossKind).
double squared_residual_sum(const ForwardTrace& trace, const DatasetBatch& batch);

Gradients backward(const NetworkParams& params, const std::vector<double>* gates,
                   const DatasetBatch& batch, LossKind kind);
Gradients backward_from(const ForwardTrace& trace, const NetworkParams& params,
                        const std::vector<double>* gates, const DatasetBatch& batch,
                        LossKind kind);

void sgd_step(NetworkParams& params, const Gradients& grads, double learning_rate);

// Fraction of batch samples whose argmax logit equals the label.
double accuracy(const NetworkParams& params, const std::vector<double>* gates,
                const DatasetBatch& batch);

}  // namespace steinprune
