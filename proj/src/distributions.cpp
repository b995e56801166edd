#include "steinprune/distributions.hpp"

#include <cmath>
#include <string>

namespace steinprune {

void TruncationAnalysisConfig::validate() const {
    if (sigma <= 0.0) throw DomainError("sigma must be > 0");
    if (p_norm != 1 && p_norm != 2) throw DomainError("p must be 1 or 2");
    if (threshold < 0.0) throw DomainError("threshold must be >= 0");
    if (h_shape <= 0.0) throw DomainError("h must be > 0");
}

double amoroso_log_density(double w, const TruncationAnalysisConfig& config) {
    config.validate();
    if (w < 0.0) throw DomainError("amoroso density defined for w >= 0");
    const double sigma = config.sigma;
    if (config.p_norm == 1) {
        // Half-normal N+(0, 2 sigma^2): (1/(sigma sqrt(pi))) exp(-w^2/(4 sigma^2)).
        return -std::log(sigma) - 0.5 * std::log(M_PI) - w * w / (4.0 * sigma * sigma);
    }
    const double s = config.n_samples * (config.p_norm - 1) / 2.0;
    if (s <= 0.0) throw DomainError("shape n(p-1)/2 must be > 0");
    const double scale = std::sqrt(2.0) * sigma;
    const double z = w / scale;
    const double power = 2.0 * s - 1.0;  // n(p-1) - 1
    double log_pow;
    if (power == 0.0)
        log_pow = 0.0;
    else if (w == 0.0)
        log_pow = power > 0.0 ? -INFINITY : INFINITY;
    else
        log_pow = power * std::log(z);
    return -std::lgamma(s) + 0.5 * std::log(2.0) - std::log(sigma) + log_pow - z * z;
}

double gpd_density(double w, double delta, double k) {
    if (delta <= 0.0 || k <= 0.0) throw DomainError("gpd requires delta > 0 and k > 0");
    const double mag = std::abs(w);
    if (mag <= delta) return 0.0;
    return k * std::pow(delta, k) / std::pow(mag, k + 1.0);
}

double gpd_density_signed(double w, double delta, double k) {
    return 0.5 * gpd_density(w, delta, k);
}

double fit_gpd_shape(const std::vector<double>& pruned_weights, double delta) {
    if (delta <= 0.0) throw DomainError("gpd fit requires delta > 0");
    const std::size_t m = pruned_weights.size();
    if (m < 30)
        throw DomainError("gpd fit needs at least 30 surviving weights, got " + std::to_string(m));
    double log_sum = 0.0;
    for (double w : pruned_weights) {
        const double mag = std::abs(w);
        if (mag <= delta)
            throw DomainError("gpd fit precondition violated: |w| <= delta");
        log_sum += std::log(mag / delta);
    }
    return static_cast<double>(m) / log_sum;
}

}  // namespace steinprune
