#include "steinprune/svgd.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace steinprune {

namespace {
double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}
}  // namespace

double rbf_kernel_value(const std::vector<double>& a, const std::vector<double>& b, double h) {
    if (a.size() != b.size()) throw ShapeError("kernel arguments must have equal length");
    if (h <= 0.0) throw DomainError("bandwidth must be > 0");
    return std::exp(-squared_distance(a, b) / h);
}

KernelValue rbf_kernel(const std::vector<double>& a, const std::vector<double>& b, double h) {
    KernelValue kv;
    kv.k = rbf_kernel_value(a, b, h);
    kv.grad_a.resize(a.size());
    const double c = -2.0 / h * kv.k;
    for (std::size_t i = 0; i < a.size(); ++i) kv.grad_a[i] = c * (a[i] - b[i]);
    return kv;
}

double median_bandwidth(const std::vector<std::vector<double>>& particles, double floor) {
    const std::size_t n = particles.size();
    if (n < 2) throw DomainError("median bandwidth needs at least two particles");
    std::vector<double> dists;
    dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dists.push_back(std::sqrt(squared_distance(particles[i], particles[j])));
    std::sort(dists.begin(), dists.end());
    double med;
    if (dists.size() % 2 == 1)
        med = dists[dists.size() / 2];
    else
        med = 0.5 * (dists[dists.size() / 2 - 1] + dists[dists.size() / 2]);
    const double h = med * med / std::log(static_cast<double>(n));
    if (h < floor) {
        if (med == 0.0)
            std::cerr << "steinprune: all particles identical, bandwidth floored at " << floor
                      << "\n";
        return floor;
    }
    return h;
}

double effective_bandwidth(const std::vector<std::vector<double>>& particles,
                           const KernelConfig& config) {
    if (config.mode == KernelConfig::Bandwidth::Fixed)
        return std::max(config.fixed_bandwidth, config.heuristic_floor);
    return median_bandwidth(particles, config.heuristic_floor);
}

std::vector<double> ksd_direction(std::size_t i, const std::vector<std::vector<double>>& particles,
                                  const std::vector<std::vector<double>>& scores, double h) {
    const std::size_t n = particles.size();
    if (n == 0 || i >= n) throw ShapeError("particle index out of range");
    if (scores.size() != n) throw ShapeError("one score per particle required");
    const std::size_t dim = particles[i].size();
    std::vector<double> phi(dim, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (double v : scores[j])
            if (!std::isfinite(v))
                throw NumericError("NaN score for particle " + std::to_string(j));
        const double k = rbf_kernel_value(particles[j], particles[i], h);
        const double c = -2.0 / h * k;  // grad_{x_j} k(x_j, x_i) = c (x_j - x_i)
        for (std::size_t dcoord = 0; dcoord < dim; ++dcoord)
            phi[dcoord] += k * scores[j][dcoord] + c * (particles[j][dcoord] - particles[i][dcoord]);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (double& v : phi) v *= inv_n;
    return phi;
}

std::vector<std::vector<double>> ksd_directions(const std::vector<std::vector<double>>& particles,
                                                const std::vector<std::vector<double>>& scores,
                                                double h) {
    std::vector<std::vector<double>> phis(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i)
        phis[i] = ksd_direction(i, particles, scores, h);
    return phis;
}

void svgd_step(std::vector<std::vector<double>>& particles, const ScoreFunction& score,
               double step_size, const KernelConfig& config) {
    if (particles.size() < 2) throw DomainError("svgd_step needs an ensemble of n >= 2");
    const double h = effective_bandwidth(particles, config);
    std::vector<std::vector<double>> scores(particles.size());
    for (std::size_t i = 0; i < particles.size(); ++i) scores[i] = score(particles[i]);
    const auto phis = ksd_directions(particles, scores, h);
    for (std::size_t i = 0; i < particles.size(); ++i)
        for (std::size_t dcoord = 0; dcoord < particles[i].size(); ++dcoord)
            particles[i][dcoord] += step_size * phis[i][dcoord];
}

}  // namespace steinprune
