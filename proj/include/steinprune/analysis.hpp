#pragma once

#include <cstddef>
#include <vector>

#include "steinprune/errors.hpp"

namespace steinprune {

// Normalized histogram plus Gaussianity diagnostics of a weight sample.
struct DistributionReport {
    std::vector<double> bin_edges;  // bins + 1 ascending edges
    std::vector<double> densities;  // count / (total * bin_width)
    double excess_kurtosis = 0.0;
    double ks_statistic_vs_gaussian = 0.0;  // against the moment-fitted Gaussian
    bool bimodality_flag = false;
    double near_zero_mass = 0.0;  // density of the bin whose center is nearest zero
    std::size_t sample_count = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

// Preconditions: at least 100 weights (kurtosis/KS stability) and nonzero
// variance. Bimodality: two local maxima, each at least 5% of the peak
// density, separated by a trough below 60% of the smaller of the two.
DistributionReport distribution_report(const std::vector<double>& weights, std::size_t bins);

double excess_kurtosis(const std::vector<double>& values);
double ks_statistic_vs_gaussian(std::vector<double> values);  // moment-fitted

}  // namespace steinprune
