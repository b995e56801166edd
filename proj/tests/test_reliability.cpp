#include <doctest.h>

#include <cmath>

#include "steinprune/dataio.hpp"
#include "steinprune/reliability.hpp"

using namespace steinprune;

namespace {

EfficiencyInputs inputs_with(double eps2, double alpha2 = 0.0, double beta2 = 0.0) {
    EfficiencyInputs in;
    in.eps2 = eps2;
    in.alpha2 = alpha2;
    in.beta2 = beta2;
    return in;
}

TrainConfig sweep_profile() {
    TrainConfig cfg;
    cfg.beta = 0.1;
    cfg.epochs = 30;
    cfg.batch_size = 32;
    cfg.lr = {0.05, 0.005, LearningRateSchedule::Mode::Cosine};
    cfg.temperature = {5.0, 0.1, 0};
    cfg.particles = 2;
    cfg.plateau_epochs = 0;
    return cfg;
}

}  // namespace

TEST_CASE("map estimator closed form") {
    SUBCASE("alpha2 = 0 returns the prior mean") {
        EfficiencyInputs in = inputs_with(0.7);
        in.mu_theta = 1.9;
        in.y_bar = -4.0;
        CHECK(map_estimator(in) == 1.9);
    }
    SUBCASE("equal variances average the two sources") {
        EfficiencyInputs in = inputs_with(0.5, 0.5);
        in.mu_theta = 1.0;
        in.y_bar = 3.0;
        CHECK(map_estimator(in) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("vanishing observation noise trusts the data") {
        EfficiencyInputs in = inputs_with(1e-12, 1.0);
        in.mu_theta = 5.0;
        in.y_bar = 2.0;
        CHECK(map_estimator(in) == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("crlb is the observation noise variance") {
    CHECK(crlb(inputs_with(1.0)) == 1.0);
    CHECK(crlb(inputs_with(0.25)) == 0.25);
    for (double c : {2.0, 5.0, 10.0})
        CHECK(crlb(inputs_with(c * 0.3)) == doctest::Approx(c * crlb(inputs_with(0.3))));
    CHECK_THROWS_AS(crlb(inputs_with(0.0)), DomainError);
}

TEST_CASE("efficiency cases") {
    SUBCASE("clean case is fully efficient for every eps2") {
        for (double eps2 : {0.1, 1.0, 7.3}) {
            const EfficiencyReport r = efficiency(NoiseCase::Clean, inputs_with(eps2));
            CHECK(r.efficiency == 1.0);
            CHECK(r.crlb == eps2);
            CHECK(r.estimator_variance == eps2);
        }
    }
    SUBCASE("model noise halves efficiency at alpha2 = eps2") {
        const EfficiencyReport r = efficiency(NoiseCase::ModelNoise, inputs_with(1.0, 1.0));
        CHECK(r.efficiency == doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("combined noise") {
        const EfficiencyReport r = efficiency(NoiseCase::Both, inputs_with(1.0, 1.0, 2.0));
        CHECK(r.efficiency == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("inconsistent noise fields are config errors") {
        CHECK_THROWS_AS(efficiency(NoiseCase::Clean, inputs_with(1.0, 0.5)), ConfigError);
        CHECK_THROWS_AS(efficiency(NoiseCase::ModelNoise, inputs_with(1.0, 0.5, 0.5)), ConfigError);
        CHECK_THROWS_AS(efficiency(NoiseCase::DataNoise, inputs_with(1.0, 0.5)), ConfigError);
    }
    SUBCASE("closed forms match to machine precision on random inputs") {
        RngState rng(17, 2);
        for (int rep = 0; rep < 1000; ++rep) {
            const double eps2 = 0.01 + rng.next_uniform();
            const double alpha2 = rng.next_uniform();
            const double beta2 = rng.next_uniform();
            const EfficiencyReport r = efficiency(NoiseCase::Both, inputs_with(eps2, alpha2, beta2));
            CHECK(r.efficiency == eps2 / (eps2 + alpha2 + beta2));
            CHECK(r.efficiency <= 1.0);
            CHECK(r.efficiency > 0.0);
        }
    }
    SUBCASE("monotonicity in the noise variances") {
        double prev = 1.0;
        for (double alpha2 : {0.1, 0.5, 1.0, 4.0}) {
            const double e = efficiency(NoiseCase::ModelNoise, inputs_with(1.0, alpha2)).efficiency;
            CHECK(e < prev);
            prev = e;
        }
        // increasing eps2 at fixed alpha2+beta2 raises efficiency
        double prev_e = 0.0;
        for (double eps2 : {0.5, 1.0, 2.0, 8.0}) {
            const double e = efficiency(NoiseCase::Both, inputs_with(eps2, 1.0, 1.0)).efficiency;
            CHECK(e > prev_e);
            prev_e = e;
        }
    }
}

TEST_CASE("noise case names") {
    CHECK(noise_case_from_string("clean") == NoiseCase::Clean);
    CHECK(noise_case_from_string("both") == NoiseCase::Both);
    CHECK_THROWS_AS(noise_case_from_string("banana"), ConfigError);
    CHECK(to_string(NoiseCase::DataNoise) == "data_noise");
}

TEST_CASE("sweep validation") {
    const DatasetBatch data = generate_blobs(2, 20, 4, 6.0, 3);
    const auto topo = std::vector<LayerSpec>{{4, 8, Activation::Relu}, {8, 2, Activation::SoftmaxOut}};
    const TrainConfig cfg = sweep_profile();
    CHECK_THROWS_AS(aleatoric_sweep(data, {0.0, 0.1}, topo, cfg, 1), ConfigError);
    CHECK_THROWS_AS(aleatoric_sweep(data, {0.1, 0.2, 0.3}, topo, cfg, 1), ConfigError);
    CHECK_THROWS_AS(epistemic_sweep(data, {0.2, 0.4}, topo, cfg, 1), ConfigError);
    CHECK_THROWS_AS(epistemic_sweep(data, {0.0, 0.4, 0.8}, topo, cfg, 1), ConfigError);
}

TEST_CASE("sweeps are deterministic given the base seed") {
    const DatasetBatch data = generate_blobs(2, 40, 4, 6.0, 19);
    const auto topo = std::vector<LayerSpec>{{4, 8, Activation::Relu}, {8, 2, Activation::SoftmaxOut}};
    TrainConfig cfg = sweep_profile();
    cfg.epochs = 10;

    const auto a = epistemic_sweep(data, {0.4, 0.7, 1.0}, topo, cfg, 77);
    const auto b = epistemic_sweep(data, {0.4, 0.7, 1.0}, topo, cfg, 77);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].epistemic_param_dispersion == b.cells[i].epistemic_param_dispersion);
        CHECK(a.cells[i].aleatoric_inv_d == b.cells[i].aleatoric_inv_d);
    }

    const auto c = aleatoric_sweep(data, {0.0, 0.2, 0.4}, topo, cfg, 77);
    const auto d = aleatoric_sweep(data, {0.0, 0.2, 0.4}, topo, cfg, 77);
    for (std::size_t i = 0; i < c.cells.size(); ++i)
        CHECK(c.cells[i].aleatoric_inv_d == d.cells[i].aleatoric_inv_d);
}

TEST_CASE("shuffled labels raise the learned prediction noise above structured noise") {
    // degenerate-signal control: targets carry no signal, so the residual
    // scale (1/d) must exceed every structured-noise level's.
    const auto topo = std::vector<LayerSpec>{{4, 16, Activation::Relu}, {16, 2, Activation::SoftmaxOut}};
    TrainConfig cfg = sweep_profile();
    cfg.epochs = 25;
    DatasetBatch data = generate_blobs(2, 48, 4, 6.0, 41);

    const auto structured = aleatoric_sweep(data, {0.0, 0.1, 0.2}, topo, cfg, 5);
    REQUIRE(structured.failed_count() == 0);

    DatasetBatch shuffled = data;
    RngState rng(123, 9);
    const auto order = shuffled_indices(shuffled.labels.size(), rng);
    std::vector<int> relabeled(shuffled.labels.size());
    for (std::size_t i = 0; i < order.size(); ++i) relabeled[i] = (order[i] % 2 == 0) ? 0 : 1;
    shuffled.labels = relabeled;

    cfg.seed = mix_seed(5, 0);  // same cell seed as the clean level
    ParticleEnsemble ensemble = ParticleEnsemble::init(topo, cfg);
    TrainState state = TrainState::fresh(cfg.seed, cfg.particles);
    const TrainResult result = train(ensemble, shuffled, cfg, state);
    REQUIRE(!result.diverged);
    const double shuffled_inv_d = 1.0 / result.trace.epochs.back().d;
    for (const auto& cell : structured.cells) CHECK(shuffled_inv_d > cell.aleatoric_inv_d);
}
