#pragma once

#include <vector>

#include "steinprune/errors.hpp"

namespace steinprune {

// Parameters of the truncation analysis: the pre-pruning weight std sigma,
// sample count n, regularizer power p in {1,2}, magnitude threshold, and the
// GPD shape numerator h (shape k = h / sigma).
struct TruncationAnalysisConfig {
    double sigma = 1.0;
    double n_samples = 1.0;
    int p_norm = 2;
    double threshold = 0.0;
    double h_shape = 1.0;

    double shape_k() const { return h_shape / sigma; }
    void validate() const;
};

// Log density of Amoroso(0, sqrt(2) sigma, n(p-1)/2, 2) at w >= 0:
//   [1/Gamma(s)] (sqrt(2)/sigma) (w/(sqrt(2) sigma))^(2s-1) exp(-(w/(sqrt(2) sigma))^2),
// s = n(p-1)/2. The p = 1 case makes s = 0 (Gamma(0) undefined); that branch
// returns the half-normal with variance 2 sigma^2 instead.
double amoroso_log_density(double w, const TruncationAnalysisConfig& config);

// One-sided tail density of the surviving weights after a magnitude cut at
// delta, as a function of the magnitude w:
//   0 for w <= delta,  k delta^k / w^(k+1) for w > delta.  Integrates to 1.
double gpd_density(double w, double delta, double k);

// Two-sided symmetric version over signed weights; each tail carries half
// the mass, so the density is half the one-sided value at |w|.
double gpd_density_signed(double w, double delta, double k);

// Hill-style MLE of the tail index: k_hat = m / sum ln(|w_i|/delta).
// Requires at least 30 survivors, all strictly beyond delta.
double fit_gpd_shape(const std::vector<double>& pruned_weights, double delta);

}  // namespace steinprune
