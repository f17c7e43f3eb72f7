#include <doctest.h>

#include <cmath>
#include <cstring>

#include "mgif/model.hpp"
#include "mgif/train.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace mgif;

TEST_SUITE_BEGIN("tensor_core");

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0f}), ShapeError);
    CHECK_THROWS_AS(Tensor({0}, {}), ShapeError);
    Tensor t = Tensor::zeros({2, 3});
    CHECK(t.size() == 6);
    t.alloc_grad();
    CHECK(t.grad.size() == t.data.size());
}

TEST_CASE("evaluate_scalar: linear model w.x") {
    const Model m = testutil::linear_model({2.0f, -1.0f});
    const Tensor x({2}, {1.0f, 1.0f});
    CHECK(evaluate_scalar(m, x) == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("evaluate_scalar: l2 scalarization of a (3,4) head") {
    // dense head producing exactly (3, 4) on input (1)
    Model m = build_model("input:1,dense:2", 1, "head2");
    m.layers[0].w.data = {3.0f, 4.0f};
    m.layers[0].b.data = {0.0f, 0.0f};
    const Tensor x({1}, {1.0f});
    CHECK(evaluate_scalar(m, x) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("evaluate_scalar matches the interpreted evaluator on a relu net") {
    const Model m = build_model("input:6,dense:5,relu,dense:3", 99, "relu2");
    CounterRng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor x = testutil::random_input(6, rng, -1.0f, 1.0f);
        const std::vector<double> xd(x.data.begin(), x.data.end());
        const double got = evaluate_scalar(m, x);
        const double want = oracle::scalar_value(m, xd);
        CHECK(got == doctest::Approx(want).epsilon(1e-5));
    }
}

TEST_CASE("input_gradient: linear model returns w everywhere") {
    const Model m = testutil::linear_model({2.0f, -1.0f, 0.5f});
    CounterRng rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const Tensor x = testutil::random_input(3, rng);
        const Tensor g = input_gradient(m, x);
        CHECK(g.data[0] == 2.0f);
        CHECK(g.data[1] == -1.0f);
        CHECK(g.data[2] == 0.5f);
    }
}

TEST_CASE("input_gradient matches finite differences on an MLP") {
    CounterRng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Model m = testutil::tanh_mlp(8, 6, 4, 1000 + trial);
        const Tensor x = testutil::random_input(8, rng);
        const Tensor g = input_gradient(m, x);
        const auto fd = oracle::fd_input_gradient(m, x.data);
        for (int i = 0; i < 8; ++i) {
            if (std::abs(fd[i]) <= 1e-4) continue;
            CHECK(std::abs(g.data[i] - fd[i]) / std::abs(fd[i]) < 0.01);
        }
    }
}

TEST_CASE("input_gradient matches finite differences on a conv/pool net") {
    const Model m =
        build_model("input:1x8x8,conv:4x3,relu,pool2,flatten,dense:3", 31, "cnn");
    CounterRng rng(19);
    const Tensor x = testutil::random_input(64, rng);
    const Tensor g = input_gradient(m, x);
    const auto fd = oracle::fd_input_gradient(m, x.data);
    int checked = 0;
    for (int i = 0; i < 64; ++i) {
        if (std::abs(fd[i]) <= 1e-4) continue;
        CHECK(std::abs(g.data[i] - fd[i]) / std::abs(fd[i]) < 0.01);
        ++checked;
    }
    CHECK(checked > 10);
}

TEST_CASE("input_gradient is deterministic bit-for-bit") {
    const Model m = testutil::tanh_mlp(10, 8, 3, 7);
    CounterRng rng(23);
    const Tensor x = testutil::random_input(10, rng);
    const Tensor g1 = input_gradient(m, x);
    const Tensor g2 = input_gradient(m, x);
    CHECK(std::memcmp(g1.ptr(), g2.ptr(), sizeof(float) * 10) == 0);
}

TEST_CASE("constant head shift leaves the gradient bit-identical") {
    // scalar head: gradient of M and of M + c agree exactly
    const Model m = testutil::tanh_mlp(6, 5, 1, 13);
    CounterRng rng(29);
    const Tensor x = testutil::random_input(6, rng);
    const Tensor g1 = input_gradient(m, x, {1.0, 0.0});
    const Tensor g2 = input_gradient(m, x, {1.0, 7.25});
    CHECK(std::memcmp(g1.ptr(), g2.ptr(), sizeof(float) * 6) == 0);
}

TEST_CASE("shape mismatch is rejected") {
    const Model m = testutil::linear_model({1.0f, 2.0f});
    CHECK_THROWS_AS(evaluate_scalar(m, Tensor({3}, {1, 2, 3})), ShapeError);
    CHECK_THROWS_AS(input_gradient(m, Tensor({3}, {1, 2, 3})), ShapeError);
}

TEST_CASE("parameter_gradient: single neuron squared error") {
    // L = (w x - y)^2, dL/dw = 2 (w x - y) x
    Model m = testutil::linear_model({0.5f});
    DatasetSplit d;
    d.input_shape = {1};
    d.inputs = {0.8f};
    d.labels = {2};  // target value 2.0
    d.ids = {0};
    ParamGrads g = zero_grads(m);
    const int rows[] = {0};
    batch_gradient(m, d, rows, LossKind::mse, nullptr, g);
    const double expect = 2.0 * (0.5 * 0.8 - 2.0) * 0.8;
    CHECK(g.w[0].data[0] == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("parameter_gradient: zero model, zero target, zero input") {
    Model m = testutil::linear_model({0.0f, 0.0f});
    DatasetSplit d;
    d.input_shape = {2};
    d.inputs = {0.0f, 0.0f};
    d.labels = {0};
    d.ids = {0};
    ParamGrads g = zero_grads(m);
    const int rows[] = {0};
    batch_gradient(m, d, rows, LossKind::mse, nullptr, g);
    CHECK(g.w[0].data[0] == 0.0f);
    CHECK(g.w[0].data[1] == 0.0f);
    CHECK(g.b[0].data[0] == 0.0f);
}

TEST_CASE("parameter_gradient matches finite differences on a 2-layer net") {
    Model m = testutil::tanh_mlp(5, 4, 3, 111);
    DatasetSplit d;
    d.input_shape = {5};
    CounterRng rng(37);
    for (int i = 0; i < 3; ++i) {
        const Tensor x = testutil::random_input(5, rng);
        d.inputs.insert(d.inputs.end(), x.data.begin(), x.data.end());
        d.labels.push_back(i % 3);
        d.ids.push_back(i);
    }
    ParamGrads g = zero_grads(m);
    const int rows[] = {0, 1, 2};
    batch_gradient(m, d, rows, LossKind::softmax_ce, nullptr, g);

    // FD on the interpreted double loss, parameter by parameter
    const double h = 1e-4;
    auto mean_ce = [&](const Model& mm) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) {
            std::vector<double> xd(mm.dim());
            for (int j = 0; j < 5; ++j) xd[static_cast<std::size_t>(j)] = d.sample(i)[j];
            acc += oracle::ce_loss(mm, xd, d.labels[static_cast<std::size_t>(i)]);
        }
        return acc / 3.0;
    };
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        if (!m.layers[li].has_params()) continue;
        for (std::size_t wi = 0; wi < m.layers[li].w.data.size(); wi += 3) {
            Model up = m, dn = m;
            up.layers[li].w.data[wi] += static_cast<float>(h);
            dn.layers[li].w.data[wi] -= static_cast<float>(h);
            const double fd = (mean_ce(up) - mean_ce(dn)) / (2.0 * h);
            if (std::abs(fd) <= 1e-4) continue;
            CHECK(std::abs(g.w[li].data[wi] - fd) / std::abs(fd) < 0.01);
        }
    }
}

TEST_CASE("sgd_step: lr = 0 leaves parameters bit-identical") {
    const Model m = testutil::tanh_mlp(4, 3, 2, 55);
    ParamGrads g = zero_grads(m);
    for (auto& t : g.w)
        for (auto& v : t.data) v = 1.0f;
    const Model m2 = sgd_step(m, g, 0.0);
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        CHECK(m.layers[i].w.data == m2.layers[i].w.data);
        CHECK(m.layers[i].b.data == m2.layers[i].b.data);
    }
}

TEST_CASE("sgd_step: 1-D quadratic closed form") {
    // loss (theta - 3)^2 at theta = 0, lr = 0.1 -> theta' = 0.6
    Model m = testutil::linear_model({0.0f});
    DatasetSplit d;
    d.input_shape = {1};
    d.inputs = {1.0f};
    d.labels = {3};
    d.ids = {0};
    ParamGrads g = zero_grads(m);
    const int rows[] = {0};
    batch_gradient(m, d, rows, LossKind::mse, nullptr, g);
    const Model m2 = sgd_step(m, g, 0.1);
    CHECK(m2.layers[0].w.data[0] == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(m.layers[0].w.data[0] == 0.0f);  // original untouched
}

TEST_CASE("sgd_step: negative lr rejected; monotone convergence on a quadratic") {
    Model m = testutil::linear_model({0.0f});
    ParamGrads g = zero_grads(m);
    CHECK_THROWS_AS(sgd_step(m, g, -0.1), ConfigError);

    DatasetSplit d;
    d.input_shape = {1};
    d.inputs = {1.0f};
    d.labels = {3};
    d.ids = {0};
    const int rows[] = {0};
    double prev_loss = 1e300;
    for (int step = 0; step < 20; ++step) {
        ParamGrads gg = zero_grads(m);
        const double loss = batch_gradient(m, d, rows, LossKind::mse, nullptr, gg);
        CHECK(loss <= prev_loss + 1e-12);
        prev_loss = loss;
        m = sgd_step(m, gg, 0.1);
    }
    // w and b share the gradient; the model output is what converges to 3
    CHECK(evaluate_scalar(m, Tensor({1}, {1.0f})) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("relu subgradient at zero is zero; pool ties go to the first element") {
    Model m = build_model("input:1x2x2,relu,pool2,flatten,dense:1", 3, "tiny");
    m.layers[3].w.data = {1.0f};
    m.layers[3].b.data = {0.0f};
    // all inputs equal: pooling tie -> gradient routed to the first cell only
    const Tensor x({1, 2, 2}, {0.5f, 0.5f, 0.5f, 0.5f});
    const Tensor g = input_gradient(m, x);
    CHECK(g.data[0] == 1.0f);
    CHECK(g.data[1] == 0.0f);
    CHECK(g.data[2] == 0.0f);
    CHECK(g.data[3] == 0.0f);

    // exact zero input: relu' (0) = 0 kills the gradient
    const Tensor x0({1, 2, 2}, {0.0f, 0.0f, 0.0f, 0.0f});
    const Tensor g0 = input_gradient(m, x0);
    for (float v : g0.data) CHECK(v == 0.0f);
}

TEST_SUITE_END();
