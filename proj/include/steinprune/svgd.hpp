#pragma once

#include <functional>
#include <vector>

#include "steinprune/errors.hpp"

namespace steinprune {

struct KernelConfig {
    enum class Bandwidth { Fixed, MedianHeuristic };
    Bandwidth mode = Bandwidth::MedianHeuristic;
    double fixed_bandwidth = 1.4426950408889634;  // 1/ln 2
    double heuristic_floor = 1e-8;
};

// RBF kernel k(a,b) = exp(-||a-b||^2 / h) and its gradient with respect to a.
struct KernelValue {
    double k = 0.0;
    std::vector<double> grad_a;
};
KernelValue rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double h);
double rbf_kernel_value(const std::vector<double>& a, const std::vector<double>& b, double h);

// h = med^2 / ln(n), med the median pairwise Euclidean distance, floored.
// Degenerate ensembles (all particles identical) return the floor.
double median_bandwidth(const std::vector<std::vector<double>>& particles, double floor = 1e-8);

double effective_bandwidth(const std::vector<std::vector<double>>& particles,
                           const KernelConfig& config);

// KSD update direction for particle i:
//   phi_i = (1/n) sum_j [ k(x_j, x_i) score_j + grad_{x_j} k(x_j, x_i) ].
// Ascending phi decreases KL(q || p). Works for n = 1 (reduces to score).
std::vector<double> ksd_direction(std::size_t i, const std::vector<std::vector<double>>& particles,
                                  const std::vector<std::vector<double>>& scores, double h);

std::vector<std::vector<double>> ksd_directions(const std::vector<std::vector<double>>& particles,
                                                const std::vector<std::vector<double>>& scores,
                                                double h);

// One plain SVGD step on a generic target score; used by the distribution
// sanity checks and available for callers outside the training engine.
using ScoreFunction = std::function<std::vector<double>(const std::vector<double>&)>;
void svgd_step(std::vector<std::vector<double>>& particles, const ScoreFunction& score,
               double step_size, const KernelConfig& config);

}  // namespace steinprune
