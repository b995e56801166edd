#include "steinprune/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace steinprune {

namespace {
constexpr double kPeakSignificance = 0.05;  // fraction of the max density
constexpr double kTroughFraction = 0.60;

void moments(const std::vector<double>& v, double& mean, double& var) {
    double s = 0.0;
    for (double x : v) s += x;
    mean = s / static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - mean) * (x - mean);
    var = s2 / static_cast<double>(v.size());
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

bool detect_bimodality(const std::vector<double>& densities) {
    const std::size_t b = densities.size();
    if (b < 3) return false;
    double dmax = 0.0;
    for (double d : densities) dmax = std::max(dmax, d);
    if (dmax <= 0.0) return false;

    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < b; ++i) {
        const double left = i == 0 ? -1.0 : densities[i - 1];
        const double right = i + 1 == b ? -1.0 : densities[i + 1];
        if (densities[i] > left && densities[i] >= right &&
            densities[i] >= kPeakSignificance * dmax)
            peaks.push_back(i);
    }
    for (std::size_t a = 0; a < peaks.size(); ++a) {
        for (std::size_t c = a + 1; c < peaks.size(); ++c) {
            double trough = densities[peaks[a]];
            for (std::size_t i = peaks[a] + 1; i < peaks[c]; ++i)
                trough = std::min(trough, densities[i]);
            const double smaller = std::min(densities[peaks[a]], densities[peaks[c]]);
            if (trough < kTroughFraction * smaller) return true;
        }
    }
    return false;
}
}  // namespace

double excess_kurtosis(const std::vector<double>& values) {
    double mean, var;
    moments(values, mean, var);
    if (var <= 0.0) throw DomainError("kurtosis undefined for zero-variance sample");
    double m4 = 0.0;
    for (double x : values) {
        const double d = x - mean;
        m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(values.size());
    return m4 / (var * var) - 3.0;
}

double ks_statistic_vs_gaussian(std::vector<double> values) {
    double mean, var;
    moments(values, mean, var);
    if (var <= 0.0) throw DomainError("KS undefined for zero-variance sample");
    const double sd = std::sqrt(var);
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = normal_cdf((values[i] - mean) / sd);
        const double hi = (static_cast<double>(i) + 1.0) / n - f;
        const double lo = f - static_cast<double>(i) / n;
        ks = std::max({ks, hi, lo});
    }
    return ks;
}

DistributionReport distribution_report(const std::vector<double>& weights, std::size_t bins) {
    if (weights.size() < 100)
        throw DomainError("distribution report needs at least 100 weights, got " +
                          std::to_string(weights.size()));
    if (bins < 2) throw DomainError("need at least 2 bins");

    double mean, var;
    moments(weights, mean, var);
    if (var <= 0.0) throw DomainError("degenerate histogram: zero-variance weights");

    const auto [mn_it, mx_it] = std::minmax_element(weights.begin(), weights.end());
    const double mn = *mn_it, mx = *mx_it;
    const double width = (mx - mn) / static_cast<double>(bins);

    DistributionReport report;
    report.sample_count = weights.size();
    report.mean = mean;
    report.stddev = std::sqrt(var);
    report.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        report.bin_edges[i] = mn + width * static_cast<double>(i);
    report.bin_edges.back() = mx;  // guard against rounding drift

    std::vector<std::size_t> counts(bins, 0);
    for (double w : weights) {
        std::size_t idx = static_cast<std::size_t>((w - mn) / width);
        if (idx >= bins) idx = bins - 1;  // right edge inclusive
        ++counts[idx];
    }
    report.densities.resize(bins);
    const double total = static_cast<double>(weights.size());
    for (std::size_t i = 0; i < bins; ++i)
        report.densities[i] = static_cast<double>(counts[i]) / (total * width);

    report.excess_kurtosis = excess_kurtosis(weights);
    report.ks_statistic_vs_gaussian = ks_statistic_vs_gaussian(weights);
    report.bimodality_flag = detect_bimodality(report.densities);

    std::size_t zero_bin = 0;
    double best = INFINITY;
    for (std::size_t i = 0; i < bins; ++i) {
        const double center = 0.5 * (report.bin_edges[i] + report.bin_edges[i + 1]);
        if (std::abs(center) < best) {
            best = std::abs(center);
            zero_bin = i;
        }
    }
    report.near_zero_mass = report.densities[zero_bin];
    return report;
}

}  // namespace steinprune
