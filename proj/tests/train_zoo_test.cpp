#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mgif/experiments.hpp"
#include "mgif/model_io.hpp"
#include "mgif/zoo.hpp"
#include "test_util.hpp"

using namespace mgif;

namespace {

bool params_equal(const Model& a, const Model& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        if (a.layers[i].w.data != b.layers[i].w.data) return false;
        if (a.layers[i].b.data != b.layers[i].b.data) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("model_zoo");

TEST_CASE("train: lr = 0 leaves the initialization untouched") {
    const auto data = make_blobs(64, 2, 3, 0.05f, "blobs", "train");
    const Model init = build_model("input:2,dense:4,tanh,dense:2", 7, "m");
    Model m = init;
    FitOptions opt;
    opt.sgd = {5, 0.0, 16, 7};
    fit(m, data, opt);
    CHECK(params_equal(m, init));
}

TEST_CASE("train: separable blobs reach 99% train accuracy within 200 epochs") {
    const auto data = make_blobs(200, 2, 11, 0.04f, "blobs", "train");
    const Model m = train("input:2,dense:2", data, {200, 0.5, 16, 3}, "sep");
    CHECK(accuracy(m, data) >= 0.99);
}

TEST_CASE("train: identical seeds give bit-identical checkpoints") {
    const auto data = make_blobs(128, 3, 5, 0.1f, "blobs", "train");
    const Model a = train("input:2,dense:8,tanh,dense:3", data, {6, 0.1, 16, 42}, "a");
    const Model b = train("input:2,dense:8,tanh,dense:3", data, {6, 0.1, 16, 42}, "b");
    CHECK(params_equal(a, b));
    CHECK(model_content_hash(a) == model_content_hash(b));
}

TEST_CASE("train: divergence raises a training failure with the epoch index") {
    // squared error has an unbounded gradient: lr far above 2/lambda_max
    // oscillates to overflow within a few steps
    const auto data = make_blobs(64, 2, 9, 0.1f, "blobs", "train");
    Model m = testutil::linear_model({0.1f, 0.1f});
    FitOptions opt;
    opt.sgd = {50, 1e12, 8, 1};
    opt.loss = LossKind::mse;
    try {
        fit(m, data, opt);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch >= 0);
    }
}

TEST_CASE("finetune: zero epochs in last mode returns the parent") {
    const auto data = make_blobs(64, 2, 3, 0.1f, "blobs", "train");
    const Model parent = train("input:2,dense:6,tanh,dense:2", data, {4, 0.2, 16, 8}, "p");
    const Model ft = finetune(parent, data, FinetuneMode::last, {0, 0.1, 16, 9}, "ft");
    CHECK(params_equal(ft, parent));
}

TEST_CASE("finetune last: frozen layers stay bit-identical after training") {
    const auto data = make_blobs(128, 2, 4, 0.1f, "blobs", "train");
    const Model parent = train("input:2,dense:6,tanh,dense:2", data, {4, 0.2, 16, 8}, "p");
    const Model ft = finetune(parent, data, FinetuneMode::last, {5, 0.3, 16, 9}, "ft");
    CHECK(ft.layers[0].w.data == parent.layers[0].w.data);  // frozen
    CHECK(ft.layers[0].b.data == parent.layers[0].b.data);
    CHECK(ft.layers[2].w.data != parent.layers[2].w.data);  // trained head
}

TEST_CASE("prune: trivial fractions and the frozen sort example") {
    const auto data = make_blobs(32, 2, 4, 0.1f, "blobs", "train");
    Model m = testutil::linear_model({1.0f, -4.0f, 0.2f, 3.0f});

    const Model p0 = prune(m, 0.0, 0, data, {0, 0.1, 8, 1}, "p0");
    CHECK(params_equal(p0, m));

    const Model phalf = prune(m, 0.5, 0, data, {0, 0.1, 8, 1}, "p50");
    CHECK(phalf.layers[0].w.data == std::vector<float>{0.0f, -4.0f, 0.0f, 3.0f});

    const Model pall = prune(m, 1.0, 0, data, {0, 0.1, 8, 1}, "p100");
    CHECK(pall.layers[0].w.data == std::vector<float>{0.0f, 0.0f, 0.0f, 0.0f});
    CHECK(pall.layers[0].b.data == m.layers[0].b.data);  // biases exempt

    // idempotence at the same fraction with no fine-tuning
    const Model once = prune(m, 0.5, 0, data, {0, 0.1, 8, 1}, "a");
    const Model twice = prune(once, 0.5, 0, data, {0, 0.1, 8, 1}, "b");
    CHECK(once.layers[0].w.data == twice.layers[0].w.data);

    CHECK_THROWS_AS(prune(m, 1.5, 0, data, {0, 0.1, 8, 1}, "bad"), ConfigError);
}

TEST_CASE("extract: label targets are the victim argmax; 0 epochs = random init") {
    GridSpec g;
    g.n = 120;
    g.classes = 3;
    g.hw = 8;
    g.seed = 5;
    const auto data = make_grid_images(g);
    const std::string arch = "input:1x8x8,flatten,dense:8,tanh,dense:3";
    const Model victim = train(arch, data, {6, 0.1, 16, 21}, "victim");

    const Model zero_ep = extract(victim, data, ExtractMode::label, arch, {0, 0.1, 16, 77}, "s0");
    CHECK(params_equal(zero_ep, build_model(arch, 77, "s0")));

    const auto labels = predict_labels(victim, data);
    const auto probs = predict_probs(victim, data);
    for (int i = 0; i < data.n(); ++i) {
        int arg = 0;
        for (int c = 1; c < 3; ++c)
            if (probs[static_cast<std::size_t>(i) * 3 + c] >
                probs[static_cast<std::size_t>(i) * 3 + arg])
                arg = c;
        CHECK(labels[static_cast<std::size_t>(i)] == arg);
    }
}

TEST_CASE("extract: probability-mode surrogate agrees with the victim on holdout") {
    GridSpec g;
    g.n = 600;
    g.classes = 3;
    g.hw = 8;
    g.noise = 0.15f;
    g.seed = 6;
    const auto train_data = make_grid_images(g);
    g.seed = 7;
    g.tag = "transfer";
    const auto transfer = make_grid_images(g);
    g.seed = 8;
    g.n = 200;
    g.tag = "holdout";
    const auto holdout = make_grid_images(g);

    const std::string arch = "input:1x8x8,flatten,dense:12,tanh,dense:3";
    const Model victim = train(arch, train_data, {12, 0.15, 16, 31}, "victim");
    const Model surrogate =
        extract(victim, transfer, ExtractMode::prob, arch, {12, 0.15, 16, 32}, "s");

    const auto pv = predict_labels(victim, holdout);
    const auto ps = predict_labels(surrogate, holdout);
    int agree = 0;
    for (int i = 0; i < holdout.n(); ++i) agree += pv[i] == ps[i];
    CHECK(static_cast<double>(agree) / holdout.n() >= 0.90);
}

TEST_CASE("extract: regression victims reject label mode") {
    GridSpec g;
    g.n = 16;
    g.classes = 2;
    g.hw = 8;
    g.seed = 5;
    const auto data = make_grid_images(g);
    const Model reg = build_model("input:1x8x8,flatten,dense:1", 3, "reg");
    CHECK_THROWS_AS(
        extract(reg, data, ExtractMode::label, "input:1x8x8,flatten,dense:1",
                {1, 0.1, 8, 1}, "s"),
        ConfigError);
}

TEST_CASE("adversarial_harden: eps = 0 reproduces plain training bit-for-bit") {
    const auto data = make_blobs(96, 2, 8, 0.1f, "blobs", "train");
    const Model parent = train("input:2,dense:6,tanh,dense:2", data, {3, 0.1, 16, 4}, "p");

    Model plain = parent;
    FitOptions opt;
    opt.sgd = {3, 0.1, 16, 99};
    fit(plain, data, opt);

    const Model hardened =
        adversarial_harden(parent, data, {4, 0.05f, 0.0f}, {3, 0.1, 16, 99}, "h");
    CHECK(params_equal(plain, hardened));
}

TEST_CASE("adversarial_harden: robustness under the same attack improves") {
    const auto data = make_blobs(400, 2, 13, 0.12f, "blobs", "train");
    const std::string arch = "input:2,dense:12,tanh,dense:2";
    const Model plain = train(arch, data, {25, 0.2, 16, 5}, "plain");
    const PgdConfig atk{8, 0.05f, 0.15f};
    const Model robust = adversarial_harden(plain, data, atk, {25, 0.2, 16, 6}, "rob");

    auto robust_accuracy = [&](const Model& m) {
        int hit = 0;
        std::vector<float> adv(2);
        for (int i = 0; i < data.n(); ++i) {
            adv.assign(data.sample(i), data.sample(i) + 2);
            pgd_ascend(adv.data(), data.sample(i), 2, atk,
                       [&](const float* xp, float* gout) {
                           Trace t;
                           forward(m, xp, t);
                           std::vector<float> dh(t.act.back().data.size());
                           softmax_ce_grad(t.act.back().data, data.labels[i], dh);
                           Tensor gx;
                           backward(m, t, dh, &gx, nullptr);
                           std::copy(gx.data.begin(), gx.data.end(), gout);
                       });
            Trace t;
            forward(m, adv.data(), t);
            const auto& h = t.act.back().data;
            const int pred = static_cast<int>(
                std::max_element(h.begin(), h.end()) - h.begin());
            hit += pred == data.labels[i];
        }
        return static_cast<double>(hit) / data.n();
    };
    CHECK(robust_accuracy(robust) > robust_accuracy(plain));
}

TEST_CASE("unlearn_exact: empty forget set with the same seed is bit-identical") {
    const auto data = make_blobs(128, 2, 3, 0.1f, "blobs", "train");
    const std::string arch = "input:2,dense:6,tanh,dense:2";
    const Model ref = train(arch, data, {5, 0.2, 16, 17}, "ref");
    const Model ex = unlearn_exact(data, {}, arch, {5, 0.2, 16, 17}, "ex");
    CHECK(params_equal(ref, ex));
}

TEST_CASE("unlearn_exact: audit log never contains a forget id") {
    const auto data = make_blobs(100, 2, 3, 0.1f, "blobs", "train");
    const std::vector<int> forget = {3, 17, 42, 99};
    std::vector<int> audit;
    unlearn_exact(data, forget, "input:2,dense:4,tanh,dense:2", {3, 0.2, 16, 1}, "ex",
                  &audit);
    CHECK(audit.size() == 96);
    for (int fid : forget)
        CHECK(std::find(audit.begin(), audit.end(), fid) == audit.end());

    std::vector<int> all_ids(100);
    std::iota(all_ids.begin(), all_ids.end(), 0);
    CHECK_THROWS_AS(
        unlearn_exact(data, all_ids, "input:2,dense:4,tanh,dense:2", {1, 0.2, 16, 1}, "x"),
        ConfigError);
}

TEST_CASE("unlearn_approx: zero ascent passes emit checkpoints equal to the reference") {
    const auto data = make_blobs(64, 2, 4, 0.1f, "blobs", "train");
    const Model ref = train("input:2,dense:4,tanh,dense:2", data, {3, 0.2, 16, 6}, "ref");
    UnlearnApproxConfig cfg;
    cfg.epochs = 3;
    cfg.ascent_passes = 0;
    const auto ckpts = unlearn_approx(ref, data, data, cfg, "a");
    REQUIRE(ckpts.size() == 3);
    for (const auto& c : ckpts) CHECK(params_equal(c, ref));
}

TEST_CASE("unlearn_approx: forget accuracy decays in at least 8 of 10 seeds") {
    // overlapping blobs keep the softmax off its saturation plateau so the
    // ascent direction carries signal
    int ok = 0;
    for (int seed = 0; seed < 10; ++seed) {
        const auto data =
            make_blobs(300, 2, 100 + static_cast<std::uint64_t>(seed), 0.35f, "blobs", "train");
        std::vector<int> forget_rows, retain_rows;
        for (int i = 0; i < data.n(); ++i)
            (i < 40 ? forget_rows : retain_rows).push_back(i);
        const auto forget = data.subset(forget_rows, "forget");
        const auto retained = data.subset(retain_rows, "retain");
        const Model ref = train("input:2,dense:16,tanh,dense:2", data,
                                {15, 0.2, 16, 7000 + static_cast<std::uint64_t>(seed)}, "ref");
        UnlearnApproxConfig cfg;
        cfg.epochs = 6;
        cfg.ascent_passes = 3;
        cfg.ascent_lr = 0.2;
        cfg.maintain_lr = 0.02;
        cfg.seed = 9000 + static_cast<std::uint64_t>(seed);
        const auto ckpts = unlearn_approx(ref, forget, retained, cfg, "a");
        const double before = accuracy(ref, forget);
        const double after = accuracy(ckpts.back(), forget);
        ok += after < before;
    }
    CHECK(ok >= 8);
}

TEST_CASE("zoo manifest round-trips and checkpoints rebuild bit-identically") {
    IpZooSpec spec;
    spec.per_family = 1;
    spec.independents = 1;
    spec.n_train = 120;
    spec.n_transfer = 120;
    spec.n_aux = 60;
    spec.classes = 3;
    spec.base_epochs = 2;
    spec.extract_epochs = 2;
    spec.finetune_epochs = 1;
    spec.harden_epochs = 1;
    spec.arch = "input:1x16x16,flatten,dense:8,tanh,dense:3";
    spec.jobs = 2;

    const IpZooBundle a = build_ip_zoo(spec);
    const IpZooBundle b = build_ip_zoo(spec);
    REQUIRE(a.zoo.records.size() == b.zoo.records.size());
    CHECK(a.zoo.records.size() == 1 + 6 * spec.per_family + spec.independents);
    for (const auto& rec : a.zoo.records) {
        CAPTURE(rec.id);
        CHECK(params_equal(a.zoo.get(rec.id), b.zoo.get(rec.id)));
        if (rec.kind != "victim" && rec.kind != "independent")
            CHECK(rec.parent == "victim");
    }

    const auto dir = testutil::temp_dir("zoo");
    save_zoo(a.zoo, dir);
    const Zoo loaded = load_zoo(dir);
    REQUIRE(loaded.records.size() == a.zoo.records.size());
    for (const auto& rec : loaded.records) {
        CHECK(params_equal(loaded.get(rec.id), a.zoo.get(rec.id)));
        CHECK(rec.config_hash == spec.config_hash());
    }
    std::filesystem::remove_all(dir);
}

TEST_SUITE_END();
