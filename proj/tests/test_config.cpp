#include <doctest.h>

#include <string>

#include "steinprune/config.hpp"

using namespace steinprune;

namespace {

const char* kBaseConfig = R"(
[dataset]
kind = blobs
classes = 2
per_class = 40
dim = 6
separation = 6.0
holdout_fraction = 0.25

[network]
hidden = 16,8

[train]
epochs = 12
batch_size = 16
beta = 0.1
seed = 42

[output]
dir = scratch
)";

}  // namespace

TEST_CASE("parsing fills defaults and reads values") {
    const ExperimentConfig cfg = parse_config_text(kBaseConfig);
    CHECK(cfg.dataset.kind == DatasetKind::Blobs);
    CHECK(cfg.dataset.per_class == 40);
    CHECK(cfg.hidden == std::vector<std::size_t>{16, 8});
    CHECK(cfg.train.epochs == 12);
    CHECK(cfg.train.beta == 0.1);
    CHECK(cfg.train.particles == 2);           // default
    CHECK(cfg.train.epsilon_ratio == 1e4);     // default
    CHECK(cfg.gate_threshold == 0.5);          // default
    CHECK(cfg.output_dir == "scratch");
    CHECK(cfg.train.lr.mode == LearningRateSchedule::Mode::Cosine);
}

TEST_CASE("unknown keys are rejected with a field path") {
    const std::string text = std::string(kBaseConfig) + "\n[train]\n";
    try {
        parse_config_text(std::string(kBaseConfig) + "typo_key = 1\n", "cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("output.typo_key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("[nosuchsection]\nx = 1\n"), ConfigError);
}

TEST_CASE("type errors carry the offending path") {
    try {
        parse_config_text("[train]\nepochs = banana\n", "cfg");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.epochs") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("[train]\nlr_mode = sawtooth\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[dataset]\nkind = parquet\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[prune]\ngate_threshold = 1.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("key_without_section = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[train]\nepochs = 1\nepochs = 2\n"), ConfigError);
}

TEST_CASE("hash is stable under reordering and number spelling") {
    const ExperimentConfig a = parse_config_text(kBaseConfig);
    const char* reordered = R"(
[output]
dir = scratch

[train]
seed = 42
beta = 0.10000
batch_size = 16
epochs = 12

[network]
hidden = 16,8

[dataset]
holdout_fraction = 2.5e-1
separation = 6
dim = 6
per_class = 40
classes = 2
kind = blobs
)";
    const ExperimentConfig b = parse_config_text(reordered);
    CHECK(config_hash(a) == config_hash(b));

    ExperimentConfig c = a;
    c.train.seed = 43;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("prepared blobs data respects the holdout split and normalization") {
    const ExperimentConfig cfg = parse_config_text(kBaseConfig);
    const PreparedData data = prepare_data(cfg);
    CHECK(data.classes == 2);
    CHECK(data.train.size() == 60);
    CHECK(data.holdout.size() == 20);
    CHECK(!data.normalization.empty());

    const auto topo = cfg.topology(data.train.feature_dim(), data.classes);
    REQUIRE(topo.size() == 3);
    CHECK(topo[0].fan_in == 6);
    CHECK(topo[0].fan_out == 16);
    CHECK(topo[2].fan_out == 2);
    CHECK(topo[2].activation == Activation::SoftmaxOut);
}

TEST_CASE("csv dataset requires a path") {
    ExperimentConfig cfg = parse_config_text("[dataset]\nkind = csv\n");
    CHECK_THROWS_AS(prepare_data(cfg), ConfigError);
}

TEST_CASE("linear dataset prepares a regression batch") {
    ExperimentConfig cfg = parse_config_text(
        "[dataset]\nkind = linear\nsamples = 50\ndim = 3\nnoise_std = 0.1\nholdout_fraction = 0\n");
    const PreparedData data = prepare_data(cfg);
    CHECK(data.classes == 1);
    CHECK(data.train.regression);
    CHECK(data.train.size() == 50);
    CHECK(data.holdout.size() == 0);
}
