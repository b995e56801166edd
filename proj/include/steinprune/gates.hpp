#pragma once

#include <cstddef>
#include <vector>

#include "steinprune/errors.hpp"
#include "steinprune/rng.hpp"

namespace steinprune {

// Exponential temperature decay: tau(step) = tau_start * (tau_end/tau_start)^(step/total).
struct TemperatureSchedule {
    double tau_start = 5.0;
    double tau_end = 0.1;
    std::size_t total_steps = 1;
};

// Out-of-range steps are clamped (a warning goes to stderr once per schedule use).
double temperature_at(const TemperatureSchedule& schedule, std::size_t step);

struct GateSample {
    double g;          // relaxed gate in (0,1)
    double u;          // underlying uniform draw, retained for reproducibility
    double dg_dtheta;  // d g / d theta at fixed u
    double dg_dlogit;  // d g / d logit(theta) at fixed u
};

// Binary concrete relaxation of a Bernoulli(theta) gate:
//   g = sigmoid((logit(theta) + L) / tau),  L = ln u - ln(1-u),  u ~ U(0,1).
GateSample sample_relaxed_gate(double theta, double tau, RngState& rng);

// Deterministic core of the sampler for a given uniform draw.
GateSample relaxed_gate_from_uniform(double theta, double tau, double u);

// Deterministic rounding of a relaxed gate; ties at 0.5 round up.
int harden(double g);

// Bernoulli gate probabilities for every learnable scalar, stored as
// unconstrained logits (clamped so theta stays within [1e-4, 1-1e-4]),
// together with the most recent relaxed draws.
class GateSet {
  public:
    GateSet() = default;
    static GateSet init(std::size_t count, double theta0);

    std::size_t size() const { return logits_.size(); }

    double prob(std::size_t i) const;
    std::vector<double> probs() const;
    double mean_prob() const;

    // Draw one relaxed sample per gate; retains samples and their
    // d g / d logit companions for the backward pass.
    void resample(double tau, RngState& rng);

    const std::vector<double>& relaxed() const { return relaxed_; }
    const std::vector<double>& relaxed_dlogit() const { return dg_dlogit_; }
    std::vector<double>& logits() { return logits_; }
    const std::vector<double>& logits() const { return logits_; }

    void set_relaxed(std::vector<double> g);  // test hook; clears derivatives
    void clamp_logits();

    static double logit_clamp();  // = logit(1 - 1e-4)

  private:
    std::vector<double> logits_;
    std::vector<double> relaxed_;
    std::vector<double> dg_dlogit_;
};

}  // namespace steinprune
