#include "steinprune/gates.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

namespace steinprune {

namespace {
constexpr double kGateEps = 1e-12;  // relaxed samples kept inside (0,1)

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace

double temperature_at(const TemperatureSchedule& schedule, std::size_t step) {
    if (schedule.tau_start <= 0.0 || schedule.tau_end <= 0.0)
        throw DomainError("temperatures must be > 0");
    if (schedule.tau_end >= schedule.tau_start)
        throw DomainError("tau_end must be < tau_start");
    std::size_t s = step;
    if (s > schedule.total_steps) {
        std::cerr << "steinprune: temperature step " << step << " beyond schedule end "
                  << schedule.total_steps << ", clamping\n";
        s = schedule.total_steps;
    }
    const double frac = schedule.total_steps == 0
                            ? 1.0
                            : static_cast<double>(s) / static_cast<double>(schedule.total_steps);
    return schedule.tau_start * std::pow(schedule.tau_end / schedule.tau_start, frac);
}

GateSample relaxed_gate_from_uniform(double theta, double tau, double u) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0,1)");
    if (tau <= 0.0) throw DomainError("tau must be > 0");
    if (!(u > 0.0 && u < 1.0)) throw DomainError("u must lie in (0,1)");
    const double logistic_noise = std::log(u) - std::log1p(-u);
    const double logit_theta = std::log(theta) - std::log1p(-theta);
    double g = sigmoid((logit_theta + logistic_noise) / tau);
    g = std::clamp(g, kGateEps, 1.0 - kGateEps);
    GateSample s;
    s.g = g;
    s.u = u;
    s.dg_dlogit = g * (1.0 - g) / tau;
    s.dg_dtheta = s.dg_dlogit / (theta * (1.0 - theta));
    return s;
}

GateSample sample_relaxed_gate(double theta, double tau, RngState& rng) {
    if (!(theta > 0.0 && theta < 1.0)) throw DomainError("theta must lie in (0,1)");
    if (tau <= 0.0) throw DomainError("tau must be > 0");
    return relaxed_gate_from_uniform(theta, tau, rng.next_uniform());
}

int harden(double g) { return g >= 0.5 ? 1 : 0; }

double GateSet::logit_clamp() {
    static const double c = std::log((1.0 - 1e-4) / 1e-4);
    return c;
}

GateSet GateSet::init(std::size_t count, double theta0) {
    if (!(theta0 > 0.0 && theta0 < 1.0)) throw DomainError("initial gate probability must lie in (0,1)");
    GateSet gs;
    const double l = std::clamp(std::log(theta0) - std::log1p(-theta0), -logit_clamp(), logit_clamp());
    gs.logits_.assign(count, l);
    return gs;
}

double GateSet::prob(std::size_t i) const { return sigmoid(logits_[i]); }

std::vector<double> GateSet::probs() const {
    std::vector<double> p(logits_.size());
    for (std::size_t i = 0; i < logits_.size(); ++i) p[i] = sigmoid(logits_[i]);
    return p;
}

double GateSet::mean_prob() const {
    if (logits_.empty()) return 0.0;
    double s = 0.0;
    for (double l : logits_) s += sigmoid(l);
    return s / static_cast<double>(logits_.size());
}

void GateSet::resample(double tau, RngState& rng) {
    relaxed_.resize(logits_.size());
    dg_dlogit_.resize(logits_.size());
    for (std::size_t i = 0; i < logits_.size(); ++i) {
        const GateSample s = sample_relaxed_gate(sigmoid(logits_[i]), tau, rng);
        relaxed_[i] = s.g;
        dg_dlogit_[i] = s.dg_dlogit;
    }
}

void GateSet::set_relaxed(std::vector<double> g) {
    relaxed_ = std::move(g);
    dg_dlogit_.assign(relaxed_.size(), 0.0);
}

void GateSet::clamp_logits() {
    const double c = logit_clamp();
    for (double& l : logits_) l = std::clamp(l, -c, c);
}

}  // namespace steinprune
