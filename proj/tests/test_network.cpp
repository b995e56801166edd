#include <doctest.h>

#include <cmath>

#include "steinprune/network.hpp"
#include "support/finite_diff.hpp"

using namespace steinprune;

namespace {

DatasetBatch single_input(std::vector<double> x) {
    DatasetBatch batch;
    batch.inputs = Tensor({1, x.size()}, std::move(x));
    batch.labels = {0};
    return batch;
}

NetworkParams identity_2x2() {
    NetworkParams params;
    params.layers.push_back({Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0}), Activation::Identity});
    return params;
}

NetworkParams random_net(const std::vector<LayerSpec>& topo, std::uint64_t seed) {
    RngState rng(seed, 1);
    return init_network(topo, rng);
}

}  // namespace

TEST_CASE("identity network reproduces its input") {
    const NetworkParams params = identity_2x2();
    const Tensor logits = forward(params, nullptr, single_input({3.5, -1.25}));
    CHECK(logits.at(0, 0) == 3.5);
    CHECK(logits.at(0, 1) == -1.25);
}

TEST_CASE("all-zero gates make logits independent of the input") {
    const auto topo = std::vector<LayerSpec>{{3, 4, Activation::Relu}, {4, 2, Activation::SoftmaxOut}};
    const NetworkParams params = random_net(topo, 42);
    const std::vector<double> gates(params.scalar_count(), 0.0);

    DatasetBatch a = single_input({1.0, 2.0, 3.0});
    DatasetBatch b = single_input({-9.0, 0.5, 7.0});
    const Tensor la = forward(params, &gates, a);
    const Tensor lb = forward(params, &gates, b);
    for (std::size_t j = 0; j < la.cols(); ++j) CHECK(la.at(0, j) == lb.at(0, j));
    // biases are gated too, so a single gated-out layer yields exactly zero
    NetworkParams one_layer;
    one_layer.layers.push_back(
        {Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {5, 6}), Activation::SoftmaxOut});
    const std::vector<double> z(one_layer.scalar_count(), 0.0);
    const Tensor lz = forward(one_layer, &z, single_input({1.0, 1.0}));
    CHECK(lz.at(0, 0) == 0.0);
    CHECK(lz.at(0, 1) == 0.0);
}

TEST_CASE("2-2-2 fixture matches a scalar-by-scalar walkthrough") {
    NetworkParams params;
    params.layers.push_back(
        {Tensor({2, 2}, {0.5, -0.25, 0.75, 1.0}), Tensor({2}, {0.1, -0.2}), Activation::Relu});
    params.layers.push_back(
        {Tensor({2, 2}, {1.5, -0.5, 0.25, 0.75}), Tensor({2}, {0.05, 0.3}), Activation::SoftmaxOut});
    const double x0 = 1.0, x1 = 2.0;

    // pencil-and-paper pass, scalar by scalar
    const double h0_pre = 0.5 * x0 + (-0.25) * x1 + 0.1;
    const double h1_pre = 0.75 * x0 + 1.0 * x1 + (-0.2);
    const double h0 = h0_pre > 0 ? h0_pre : 0.0;
    const double h1 = h1_pre > 0 ? h1_pre : 0.0;
    const double z0 = 1.5 * h0 + (-0.5) * h1 + 0.05;
    const double z1 = 0.25 * h0 + 0.75 * h1 + 0.3;

    const Tensor logits = forward(params, nullptr, single_input({x0, x1}));
    CHECK(logits.at(0, 0) == doctest::Approx(z0).epsilon(1e-15));
    CHECK(logits.at(0, 1) == doctest::Approx(z1).epsilon(1e-15));
    CHECK(logits.at(0, 0) == doctest::Approx(-1.075).epsilon(1e-12));
    CHECK(logits.at(0, 1) == doctest::Approx(2.2375).epsilon(1e-12));
}

TEST_CASE("forward rejects bad shapes and non-finite input") {
    const NetworkParams params = identity_2x2();
    CHECK_THROWS_AS(forward(params, nullptr, single_input({1.0, 2.0, 3.0})), ShapeError);
    CHECK_THROWS_AS(forward(params, nullptr, single_input({1.0, NAN})), NumericError);
    std::vector<double> bad_gates(3, 1.0);
    CHECK_THROWS_AS(forward(params, &bad_gates, single_input({1.0, 2.0})), ShapeError);
}

TEST_CASE("cross entropy basics") {
    SUBCASE("uniform logits give ln k") {
        const Tensor logits({1, 4}, {0.7, 0.7, 0.7, 0.7});
        CHECK(cross_entropy(logits, {2}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
    }
    SUBCASE("extreme logits do not overflow") {
        const Tensor logits({1, 2}, {1000.0, -1000.0});
        CHECK(cross_entropy(logits, {0}) == doctest::Approx(0.0));
    }
    SUBCASE("hand-computed three-class case") {
        const Tensor logits({1, 3}, {1.0, 2.0, 3.0});
        CHECK(cross_entropy(logits, {2}) ==
              doctest::Approx(0.40760596444438030).epsilon(1e-14));
    }
    SUBCASE("label out of range") {
        const Tensor logits({1, 2}, {0.0, 0.0});
        CHECK_THROWS_AS(cross_entropy(logits, {2}), DomainError);
    }
    SUBCASE("loss is non-negative") {
        RngState rng(5, 9);
        for (int rep = 0; rep < 50; ++rep) {
            Tensor logits({1, 3}, {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()});
            CHECK(cross_entropy(logits, {rep % 3}) >= 0.0);
        }
    }
}

TEST_CASE("zero-weight network: bias gradient is softmax-uniform minus one-hot") {
    NetworkParams params;
    params.layers.push_back({Tensor::zeros({3, 2}), Tensor::zeros({3}), Activation::SoftmaxOut});
    DatasetBatch batch = single_input({0.4, -0.6});
    batch.labels = {1};
    const Gradients grads = backward(params, nullptr, batch, LossKind::CrossEntropy);
    const double u = 1.0 / 3.0;
    CHECK(grads.bias[0].values[0] == doctest::Approx(u).epsilon(1e-15));
    CHECK(grads.bias[0].values[1] == doctest::Approx(u - 1.0).epsilon(1e-15));
    CHECK(grads.bias[0].values[2] == doctest::Approx(u).epsilon(1e-15));
    // weight gradients are outer products of the bias gradient with the input
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(grads.weight[0].at(r, c) ==
                  doctest::Approx(grads.bias[0].values[r] * batch.inputs.at(0, c)).epsilon(1e-13));
}

TEST_CASE("analytic gradients match central finite differences") {
    // Mandatory pre-build oracle: random networks up to ~2000 parameters,
    // both theta and gate gradients, relative error < 1e-5 at h = 1e-5.
    const std::vector<std::vector<LayerSpec>> topologies = {
        {{4, 8, Activation::Relu}, {8, 3, Activation::SoftmaxOut}},
        {{10, 32, Activation::Relu}, {32, 32, Activation::Relu}, {32, 4, Activation::SoftmaxOut}},
        {{6, 6, Activation::Identity}, {6, 2, Activation::SoftmaxOut}},
    };
    std::uint64_t seed = 1234;
    for (const auto& topo : topologies) {
        NetworkParams params = random_net(topo, seed++);
        REQUIRE(params.scalar_count() <= 2000);

        RngState data_rng(seed, 3);
        const std::size_t n = 5, d = topo.front().fan_in;
        DatasetBatch batch;
        batch.inputs = Tensor::zeros({n, d});
        for (double& v : batch.inputs.values) v = data_rng.next_gaussian();
        for (std::size_t i = 0; i < n; ++i)
            batch.labels.push_back(static_cast<int>(data_rng.next_u64() % topo.back().fan_out));

        std::vector<double> gates(params.scalar_count());
        for (double& g : gates) g = 0.2 + 0.6 * data_rng.next_uniform();

        for (LossKind kind : {LossKind::CrossEntropy, LossKind::SquaredResidual}) {
            const Gradients grads = backward(params, &gates, batch, kind);
            auto loss_at = [&](const NetworkParams& p, const std::vector<double>& g) {
                if (kind == LossKind::CrossEntropy)
                    return cross_entropy(forward(p, &g, batch), batch.labels);
                const ForwardTrace t = forward_trace(p, &g, batch);
                return squared_residual_sum(t, batch);
            };

            const auto theta_report = testsupport::check_gradient(
                [&](const std::vector<double>& flat) {
                    NetworkParams p = params;
                    p.unflatten(flat);
                    return loss_at(p, gates);
                },
                params.flatten(), grads.flatten());
            CHECK_MESSAGE(theta_report.max_rel_err < 1e-5,
                          "theta fd mismatch at ", theta_report.worst_index, ": analytic ",
                          theta_report.analytic_at_worst, " vs fd ", theta_report.fd_at_worst);

            const auto gate_report = testsupport::check_gradient(
                [&](const std::vector<double>& g) { return loss_at(params, g); }, gates,
                grads.gates);
            CHECK_MESSAGE(gate_report.max_rel_err < 1e-5,
                          "gate fd mismatch at ", gate_report.worst_index);
        }
    }
}

TEST_CASE("a zero gate blocks the weight gradient but not the gate gradient") {
    const auto topo = std::vector<LayerSpec>{{2, 2, Activation::Identity},
                                             {2, 2, Activation::SoftmaxOut}};
    NetworkParams params = random_net(topo, 99);
    std::vector<double> gates(params.scalar_count(), 1.0);
    gates[0] = 0.0;  // first weight of layer 0
    DatasetBatch batch = single_input({1.0, 2.0});
    const Gradients grads = backward(params, &gates, batch, LossKind::CrossEntropy);
    CHECK(grads.weight[0].values[0] == 0.0);
    CHECK(grads.gates[0] != 0.0);
}

TEST_CASE("gated forward equals plain forward on gate-scaled weights") {
    const auto topo = std::vector<LayerSpec>{{3, 5, Activation::Relu}, {5, 2, Activation::SoftmaxOut}};
    const NetworkParams params = random_net(topo, 7);
    RngState rng(11, 2);
    std::vector<double> gates(params.scalar_count());
    for (double& g : gates) g = rng.next_uniform();

    NetworkParams scaled = params;
    std::vector<double> flat = scaled.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] *= gates[i];
    scaled.unflatten(flat);
    const std::vector<double> ones(params.scalar_count(), 1.0);

    DatasetBatch batch = single_input({0.3, -1.2, 2.2});
    const Tensor a = forward(params, &gates, batch);
    const Tensor b = forward(scaled, &ones, batch);
    for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a.at(0, j) == b.at(0, j));
}

TEST_CASE("sgd step") {
    NetworkParams params;
    params.layers.push_back({Tensor({1, 2}, {1.0, 2.0}), Tensor({1}, {0.0}), Activation::Identity});
    Gradients grads = Gradients::zeros_like(params, false);

    SUBCASE("zero gradient leaves parameters unchanged") {
        sgd_step(params, grads, 0.1);
        CHECK(params.layers[0].weight.values[0] == 1.0);
        CHECK(params.layers[0].weight.values[1] == 2.0);
    }
    SUBCASE("lr 1 with grads equal to params zeroes them") {
        grads.weight[0].values = {1.0, 2.0};
        sgd_step(params, grads, 1.0);
        CHECK(params.layers[0].weight.values[0] == 0.0);
        CHECK(params.layers[0].weight.values[1] == 0.0);
    }
    SUBCASE("plain arithmetic") {
        grads.weight[0].values = {0.5, -0.5};
        sgd_step(params, grads, 0.1);
        CHECK(params.layers[0].weight.values[0] == doctest::Approx(0.95).epsilon(1e-15));
        CHECK(params.layers[0].weight.values[1] == doctest::Approx(2.05).epsilon(1e-15));
    }
    SUBCASE("non-finite gradient names the layer") {
        grads.weight[0].values = {NAN, 0.0};
        try {
            sgd_step(params, grads, 0.1);
            FAIL("expected NumericError");
        } catch (const NumericError& e) {
            CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
        }
    }
    SUBCASE("non-positive learning rate rejected") {
        CHECK_THROWS_AS(sgd_step(params, grads, 0.0), DomainError);
    }
}

TEST_CASE("forward is deterministic across repeated evaluation") {
    const auto topo = std::vector<LayerSpec>{{8, 16, Activation::Relu}, {16, 3, Activation::SoftmaxOut}};
    const NetworkParams params = random_net(topo, 2024);
    RngState rng(1, 5);
    DatasetBatch batch;
    batch.inputs = Tensor::zeros({4, 8});
    for (double& v : batch.inputs.values) v = rng.next_gaussian();
    batch.labels = {0, 1, 2, 0};
    const Tensor a = forward(params, nullptr, batch);
    const Tensor b = forward(params, nullptr, batch);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(a.values[i] == b.values[i]);

    const NetworkParams again = random_net(topo, 2024);
    CHECK(params.flatten() == again.flatten());
}
