#include "mgif/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "mgif/kernels.hpp"
#include "mgif/rng.hpp"

namespace mgif {

double softmax_ce_grad(std::span<const float> logits, int label,
                       std::span<float> dlogits) {
    const int n = static_cast<int>(logits.size());
    if (label < 0 || label >= n) throw ShapeError("label out of range");
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(logits[i]) - mx);
    const double logz = std::log(z) + mx;
    for (int i = 0; i < n; ++i) {
        const double p = std::exp(static_cast<double>(logits[i]) - logz);
        dlogits[i] = static_cast<float>(p - (i == label ? 1.0 : 0.0));
    }
    return logz - logits[label];
}

double soft_ce_grad(std::span<const float> logits,
                    std::span<const float> target_probs,
                    std::span<float> dlogits) {
    const int n = static_cast<int>(logits.size());
    if (static_cast<int>(target_probs.size()) != n)
        throw ShapeError("soft target size mismatch");
    double mx = logits[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(static_cast<double>(logits[i]) - mx);
    const double logz = std::log(z) + mx;
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double p = std::exp(static_cast<double>(logits[i]) - logz);
        dlogits[i] = static_cast<float>(p - target_probs[i]);
        loss += static_cast<double>(target_probs[i]) * (logz - logits[i]);
    }
    return loss;
}

double mse_grad(std::span<const float> out, std::span<const float> target,
                std::span<float> dout) {
    if (out.size() != target.size()) throw ShapeError("mse target size mismatch");
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double diff = static_cast<double>(out[i]) - target[i];
        loss += diff * diff;
        dout[i] = static_cast<float>(2.0 * diff);
    }
    return loss;
}

namespace {

void accumulate_sample_grad(const Model& m, const float* x, int label,
                            const float* soft, int classes, LossKind loss,
                            Trace& t, std::vector<float>& dhead, double& loss_acc,
                            ParamGrads& g) {
    forward(m, x, t);
    const Tensor& head = t.act.back();
    dhead.assign(head.data.size(), 0.0f);
    switch (loss) {
        case LossKind::softmax_ce:
            loss_acc += softmax_ce_grad(head.data, label, dhead);
            break;
        case LossKind::soft_ce:
            loss_acc += soft_ce_grad(head.data, {soft, static_cast<std::size_t>(classes)}, dhead);
            break;
        case LossKind::mse: {
            if (soft) {
                loss_acc += mse_grad(head.data, {soft, static_cast<std::size_t>(classes)}, dhead);
            } else {
                const float target = static_cast<float>(label);
                loss_acc += mse_grad(head.data, {&target, 1}, dhead);
            }
            break;
        }
    }
    backward(m, t, dhead, nullptr, &g);
}

void scale_grads(ParamGrads& g, float s) {
    for (auto& t : g.w)
        for (float& v : t.data) v *= s;
    for (auto& t : g.b)
        for (float& v : t.data) v *= s;
}

void apply_update(Model& m, const ParamGrads& g, double lr,
                  const std::vector<std::uint8_t>& trainable, bool ascent) {
    const auto& k = kern::ops();
    const float step = static_cast<float>(ascent ? -lr : lr);
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        Layer& l = m.layers[i];
        if (!l.has_params()) continue;
        if (!trainable.empty() && !trainable[i]) continue;
        k.sgd_update(l.w.ptr(), g.w[i].ptr(), step, static_cast<int>(l.w.size()));
        k.sgd_update(l.b.ptr(), g.b[i].ptr(), step, static_cast<int>(l.b.size()));
    }
}

}  // namespace

double batch_gradient(const Model& m, const DatasetSplit& data,
                      std::span<const int> rows, LossKind loss,
                      const std::vector<float>* soft_targets, ParamGrads& out) {
    const int classes = m.head_dim();
    Trace t;
    std::vector<float> dhead;
    double loss_acc = 0.0;
    for (int r : rows) {
        const float* soft =
            soft_targets ? soft_targets->data() + static_cast<std::size_t>(r) * classes
                         : nullptr;
        accumulate_sample_grad(m, data.sample(r), data.labels.empty() ? 0 : data.labels[r],
                               soft, classes, loss, t, dhead, loss_acc, out);
    }
    if (!rows.empty()) scale_grads(out, 1.0f / static_cast<float>(rows.size()));
    return rows.empty() ? 0.0 : loss_acc / static_cast<double>(rows.size());
}

void fit(Model& m, const DatasetSplit& data, const FitOptions& opt) {
    if (data.n() == 0) throw ConfigError("fit: empty dataset");
    if (opt.sgd.lr < 0) throw ConfigError("fit: negative learning rate");
    if (opt.sgd.batch <= 0) throw ConfigError("fit: batch must be positive");
    if (!opt.trainable.empty() && opt.trainable.size() != m.layers.size())
        throw ShapeError("fit: trainable mask size mismatch");
    check_model_input(m, Tensor(data.input_shape,
                                std::vector<float>(static_cast<std::size_t>(data.dim()), 0.0f)));

    CounterRng shuffle_rng(opt.sgd.seed, 101);
    std::vector<int> order(static_cast<std::size_t>(data.n()));
    std::iota(order.begin(), order.end(), 0);

    const int classes = m.head_dim();
    if (opt.soft_targets &&
        static_cast<int>(opt.soft_targets->size()) != data.n() * classes)
        throw ShapeError("fit: soft target table size mismatch");

    std::vector<std::uint8_t> seen;
    if (opt.audit_ids) seen.assign(static_cast<std::size_t>(data.n()), 0);

    ParamGrads g = zero_grads(m);
    std::vector<float> adv_batch;
    Trace t;
    std::vector<float> dhead;

    for (int epoch = 0; epoch < opt.sgd.epochs; ++epoch) {
        // Fisher-Yates from the counter stream
        for (int i = data.n() - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.next_below(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        for (int start = 0; start < data.n(); start += opt.sgd.batch) {
            const int stop = std::min(data.n(), start + opt.sgd.batch);
            const int bsz = stop - start;

            for (auto& w : g.w) std::fill(w.data.begin(), w.data.end(), 0.0f);
            for (auto& b : g.b) std::fill(b.data.begin(), b.data.end(), 0.0f);

            double loss_acc = 0.0;
            for (int bi = start; bi < stop; ++bi) {
                const int r = order[bi];
                const float* x = data.sample(r);
                const float* soft =
                    opt.soft_targets
                        ? opt.soft_targets->data() + static_cast<std::size_t>(r) * classes
                        : nullptr;
                if (opt.adversarial) {
                    adv_batch.assign(x, x + data.dim());
                    pgd_ascend(adv_batch.data(), x, data.dim(), *opt.adversarial,
                               [&](const float* xp, float* grad_out) {
                                   Trace at;
                                   forward(m, xp, at);
                                   std::vector<float> dh(at.act.back().data.size());
                                   softmax_ce_grad(at.act.back().data, data.labels[r], dh);
                                   Tensor gx;
                                   backward(m, at, dh, &gx, nullptr);
                                   std::memcpy(grad_out, gx.ptr(),
                                               sizeof(float) * static_cast<std::size_t>(data.dim()));
                               });
                    x = adv_batch.data();
                }
                accumulate_sample_grad(m, x, data.labels.empty() ? 0 : data.labels[r],
                                       soft, classes, opt.loss, t, dhead, loss_acc, g);
                if (opt.audit_ids) seen[static_cast<std::size_t>(r)] = 1;
            }
            if (!std::isfinite(loss_acc)) {
                throw TrainingError("training diverged (non-finite loss) at epoch " +
                                        std::to_string(epoch),
                                    epoch);
            }
            scale_grads(g, 1.0f / static_cast<float>(bsz));
            apply_update(m, g, opt.sgd.lr, opt.trainable, opt.ascent);
        }
    }

    if (opt.audit_ids) {
        for (int i = 0; i < data.n(); ++i)
            if (seen[static_cast<std::size_t>(i)]) opt.audit_ids->push_back(data.ids[i]);
    }
}

Model train(const std::string& arch, const DatasetSplit& data,
            const SgdConfig& cfg, const std::string& id) {
    Model m = build_model(arch, cfg.seed, id);
    FitOptions opt;
    opt.sgd = cfg;
    fit(m, data, opt);
    return m;
}

double mean_loss(const Model& m, const DatasetSplit& data, LossKind loss) {
    Trace t;
    std::vector<float> dhead;
    double acc = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        forward(m, data.sample(i), t);
        const Tensor& head = t.act.back();
        dhead.assign(head.data.size(), 0.0f);
        switch (loss) {
            case LossKind::softmax_ce:
                acc += softmax_ce_grad(head.data, data.labels[i], dhead);
                break;
            case LossKind::mse: {
                const float target = static_cast<float>(data.labels[i]);
                acc += mse_grad(head.data, {&target, 1}, dhead);
                break;
            }
            default:
                throw ConfigError("mean_loss: unsupported loss kind");
        }
    }
    return data.n() ? acc / data.n() : 0.0;
}

std::vector<int> predict_labels(const Model& m, const DatasetSplit& data) {
    Trace t;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(data.n()));
    for (int i = 0; i < data.n(); ++i) {
        forward(m, data.sample(i), t);
        const auto& h = t.act.back().data;
        out.push_back(static_cast<int>(
            std::max_element(h.begin(), h.end()) - h.begin()));
    }
    return out;
}

std::vector<float> predict_probs(const Model& m, const DatasetSplit& data) {
    Trace t;
    const int classes = m.head_dim();
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(data.n()) * classes);
    for (int i = 0; i < data.n(); ++i) {
        forward(m, data.sample(i), t);
        const auto& h = t.act.back().data;
        double mx = h[0];
        for (float v : h) mx = std::max(mx, static_cast<double>(v));
        double z = 0.0;
        std::vector<double> e(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) {
            e[j] = std::exp(static_cast<double>(h[j]) - mx);
            z += e[j];
        }
        for (std::size_t j = 0; j < h.size(); ++j)
            out.push_back(static_cast<float>(e[j] / z));
    }
    return out;
}

double accuracy(const Model& m, const DatasetSplit& data) {
    const auto pred = predict_labels(m, data);
    int hit = 0;
    for (int i = 0; i < data.n(); ++i) hit += pred[i] == data.labels[i];
    return data.n() ? static_cast<double>(hit) / data.n() : 0.0;
}

void pgd_ascend(float* x, const float* x0, int d, const PgdConfig& cfg,
                const std::function<void(const float*, float*)>& objective_grad) {
    if (cfg.steps < 1) throw ConfigError("pgd: steps must be >= 1");
    if (cfg.alpha <= 0 || cfg.eps < 0) throw ConfigError("pgd: alpha > 0 and eps >= 0 required");
    const auto& k = kern::ops();
    std::vector<float> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        lo[i] = std::max(0.0f, x0[i] - cfg.eps);
        hi[i] = std::min(1.0f, x0[i] + cfg.eps);
    }
    std::vector<float> grad(static_cast<std::size_t>(d));
    for (int s = 0; s < cfg.steps; ++s) {
        objective_grad(x, grad.data());
        k.step_sign(x, grad.data(), cfg.alpha, d);
        k.clamp_box(x, lo.data(), hi.data(), d);
    }
}

}  // namespace mgif
