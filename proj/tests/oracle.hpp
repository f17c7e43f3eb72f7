#pragma once

// Test-side oracles, kept independent of the production compute path:
// a straight-line interpreted evaluator in double precision (plain loops,
// no kernels), central finite differences on top of it, and closed-form
// analytic fields.

#include <cmath>
#include <span>
#include <vector>

#include "mgif/field.hpp"
#include "mgif/model.hpp"

namespace oracle {

inline std::vector<double> forward_interpret(const mgif::Model& m,
                                             std::span<const double> x) {
    using mgif::LayerKind;
    std::vector<double> cur(x.begin(), x.end());
    std::vector<int> shape = m.input_shape;
    for (const auto& l : m.layers) {
        std::vector<double> next;
        switch (l.kind) {
            case LayerKind::dense: {
                const int rows = l.w.shape[0], cols = l.w.shape[1];
                next.assign(static_cast<std::size_t>(rows), 0.0);
                for (int r = 0; r < rows; ++r) {
                    double acc = l.b.data[static_cast<std::size_t>(r)];
                    for (int c2 = 0; c2 < cols; ++c2)
                        acc += static_cast<double>(
                                   l.w.data[static_cast<std::size_t>(r) * cols + c2]) *
                               cur[static_cast<std::size_t>(c2)];
                    next[static_cast<std::size_t>(r)] = acc;
                }
                shape = {rows};
                break;
            }
            case LayerKind::conv2d: {
                const int ic = shape[0], h = shape[1], w = shape[2];
                const int oc = l.out_shape[0], ks = l.ksize, pad = ks / 2;
                next.assign(static_cast<std::size_t>(oc) * h * w, 0.0);
                for (int o = 0; o < oc; ++o) {
                    for (int y = 0; y < h; ++y) {
                        for (int xx = 0; xx < w; ++xx) {
                            double acc = l.b.data[static_cast<std::size_t>(o)];
                            for (int i = 0; i < ic; ++i) {
                                for (int ky = 0; ky < ks; ++ky) {
                                    for (int kx = 0; kx < ks; ++kx) {
                                        const int iy = y + ky - pad, ix = xx + kx - pad;
                                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                                        const double wv = l.w.data
                                            [((static_cast<std::size_t>(o) * ic + i) * ks + ky) * ks + kx];
                                        acc += wv * cur[(static_cast<std::size_t>(i) * h + iy) * w + ix];
                                    }
                                }
                            }
                            next[(static_cast<std::size_t>(o) * h + y) * w + xx] = acc;
                        }
                    }
                }
                shape = {oc, h, w};
                break;
            }
            case LayerKind::relu:
                next = cur;
                for (auto& v : next) v = v > 0 ? v : 0.0;
                break;
            case LayerKind::tanh_act:
                next = cur;
                for (auto& v : next) v = std::tanh(v);
                break;
            case LayerKind::maxpool2: {
                const int c = shape[0], h = shape[1], w = shape[2];
                const int oh = h / 2, ow = w / 2;
                next.assign(static_cast<std::size_t>(c) * oh * ow, 0.0);
                for (int i = 0; i < c; ++i) {
                    for (int y = 0; y < oh; ++y) {
                        for (int xx = 0; xx < ow; ++xx) {
                            double best = -1e300;
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    const double v = cur[(static_cast<std::size_t>(i) * h + 2 * y + dy) * w +
                                                         2 * xx + dx];
                                    if (v > best) best = v;
                                }
                            next[(static_cast<std::size_t>(i) * oh + y) * ow + xx] = best;
                        }
                    }
                }
                shape = {c, oh, ow};
                break;
            }
            case LayerKind::flatten:
                next = cur;
                shape = {static_cast<int>(cur.size())};
                break;
            case LayerKind::input:
                break;
        }
        cur.swap(next);
    }
    return cur;
}

inline double scalar_value(const mgif::Model& m, std::span<const double> x,
                           double scale = 1.0, double shift = 0.0) {
    const auto head = forward_interpret(m, x);
    double s;
    if (head.size() == 1) {
        s = head[0];
    } else {
        double ss = 0.0;
        for (double v : head) ss += v * v;
        s = std::sqrt(ss);
    }
    return scale * s + shift;
}

// Central finite differences of the interpreted scalar output.
inline std::vector<double> fd_input_gradient(const mgif::Model& m,
                                             std::span<const float> x,
                                             double h = 1e-3) {
    std::vector<double> xd(x.begin(), x.end());
    std::vector<double> g(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        const double keep = xd[i];
        xd[i] = keep + h;
        const double up = scalar_value(m, xd);
        xd[i] = keep - h;
        const double dn = scalar_value(m, xd);
        xd[i] = keep;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

// Softmax cross-entropy on interpreted logits (for parameter FD checks).
inline double ce_loss(const mgif::Model& m, std::span<const double> x, int label) {
    const auto z = forward_interpret(m, x);
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    return std::log(sum) + mx - z[static_cast<std::size_t>(label)];
}

// ---- closed-form fields ----

// M(x) = 0.5 ||x||^2, F(x) = x.
class QuadraticField final : public mgif::GradientField {
public:
    explicit QuadraticField(int d) : d_(d) {}
    int dim() const override { return d_; }
    double value(const float* x) const override {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += static_cast<double>(x[i]) * x[i];
        return 0.5 * s;
    }
    void gradient(const float* x, float* out) const override {
        for (int i = 0; i < d_; ++i) out[i] = x[i];
    }

private:
    int d_;
};

// M(x) = sum_i tanh(x_i), F_i(x) = 1 - tanh^2(x_i). With x0 = 0 the exact
// curve is g_i(t) = tanh(t * x1_i) / x1_i.
class TanhSumField final : public mgif::GradientField {
public:
    explicit TanhSumField(int d) : d_(d) {}
    int dim() const override { return d_; }
    double value(const float* x) const override {
        double s = 0.0;
        for (int i = 0; i < d_; ++i) s += std::tanh(static_cast<double>(x[i]));
        return s;
    }
    void gradient(const float* x, float* out) const override {
        for (int i = 0; i < d_; ++i) {
            const double t = std::tanh(static_cast<double>(x[i]));
            out[i] = static_cast<float>(1.0 - t * t);
        }
    }
    static double exact_curve(double t, double x1_i) {
        if (x1_i == 0.0) return t;  // limit of tanh(t x)/x as x -> 0
        return std::tanh(t * x1_i) / x1_i;
    }

private:
    int d_;
};

// Constant field F(x) = w (the gradient field of a linear model).
class ConstantField final : public mgif::GradientField {
public:
    explicit ConstantField(std::vector<float> w) : w_(std::move(w)) {}
    int dim() const override { return static_cast<int>(w_.size()); }
    double value(const float* x) const override {
        double s = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i)
            s += static_cast<double>(w_[i]) * x[i];
        return s;
    }
    void gradient(const float*, float* out) const override {
        for (std::size_t i = 0; i < w_.size(); ++i) out[i] = w_[i];
    }

private:
    std::vector<float> w_;
};

}  // namespace oracle
