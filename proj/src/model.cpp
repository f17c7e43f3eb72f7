#include "mgif/model.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "mgif/io_util.hpp"
#include "mgif/kernels.hpp"
#include "mgif/rng.hpp"

namespace mgif {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<int> parse_extents(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split(s, 'x')) {
        int v = 0;
        try {
            v = std::stoi(tok);
        } catch (...) {
            throw ConfigError("bad extent '" + tok + "' in arch string");
        }
        if (v <= 0) throw ConfigError("extents must be positive in arch string");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty extent list in arch string");
    return out;
}

void xavier_init(Tensor& w, std::int64_t fan_in, std::int64_t fan_out,
                 CounterRng& rng) {
    const float limit = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    for (float& v : w.data) v = rng.next_uniform(-limit, limit);
}

}  // namespace

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::input: return "input";
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh_act: return "tanh";
        case LayerKind::maxpool2: return "pool2";
        case LayerKind::flatten: return "flatten";
    }
    return "?";
}

std::int64_t Model::param_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

std::uint64_t Model::id_hash() const { return fnv1a64(id); }

Model build_model(const std::string& arch, std::uint64_t init_seed,
                  const std::string& id) {
    Model m;
    m.id = id;
    const auto tokens = split(arch, ',');
    if (tokens.empty()) throw ConfigError("empty arch string");

    std::vector<int> cur;
    std::size_t layer_index = 0;
    for (const auto& tok : tokens) {
        const auto colon = tok.find(':');
        const std::string head = tok.substr(0, colon);
        const std::string args =
            colon == std::string::npos ? "" : tok.substr(colon + 1);

        if (head == "input") {
            if (!m.layers.empty() || !cur.empty())
                throw ConfigError("'input' must be the first arch token");
            cur = parse_extents(args);
            m.input_shape = cur;
            continue;
        }
        if (cur.empty()) throw ConfigError("arch must start with 'input:...'");

        Layer l;
        CounterRng rng(init_seed, layer_index);
        if (head == "dense") {
            if (cur.size() != 1)
                throw ConfigError("dense needs a flat input; add 'flatten' first");
            const int out = parse_extents(args).at(0);
            const int in = cur[0];
            l.kind = LayerKind::dense;
            l.w = Tensor::zeros({out, in});
            l.b = Tensor::zeros({out});
            xavier_init(l.w, in, out, rng);
            cur = {out};
        } else if (head == "conv") {
            const auto a = parse_extents(args);
            if (a.size() != 2) throw ConfigError("conv wants 'conv:FILTERSxKSIZE'");
            if (cur.size() != 3)
                throw ConfigError("conv needs a CxHxW input, got " + shape_str(cur));
            const int filters = a[0], k = a[1];
            if (k % 2 == 0) throw ConfigError("conv kernel size must be odd");
            l.kind = LayerKind::conv2d;
            l.ksize = k;
            l.w = Tensor::zeros({filters, cur[0], k, k});
            l.b = Tensor::zeros({filters});
            xavier_init(l.w, static_cast<std::int64_t>(cur[0]) * k * k,
                        static_cast<std::int64_t>(filters) * k * k, rng);
            cur = {filters, cur[1], cur[2]};
        } else if (head == "relu") {
            l.kind = LayerKind::relu;
        } else if (head == "tanh") {
            l.kind = LayerKind::tanh_act;
        } else if (head == "pool2") {
            if (cur.size() != 3 || cur[1] % 2 || cur[2] % 2)
                throw ConfigError("pool2 needs CxHxW with even H and W, got " +
                                  shape_str(cur));
            l.kind = LayerKind::maxpool2;
            cur = {cur[0], cur[1] / 2, cur[2] / 2};
        } else if (head == "flatten") {
            l.kind = LayerKind::flatten;
            cur = {static_cast<int>(shape_size(cur))};
        } else {
            throw ConfigError("unknown arch token '" + tok + "'");
        }
        l.out_shape = cur;
        m.layers.push_back(std::move(l));
        ++layer_index;
    }
    if (m.layers.empty()) throw ConfigError("arch has no layers");
    return m;
}

void check_model_input(const Model& m, const Tensor& x) {
    if (x.size() != m.dim()) {
        throw ShapeError("input size " + std::to_string(x.size()) +
                         " does not match model input " +
                         shape_str(m.input_shape));
    }
    if (x.shape.size() > 1 && x.shape != m.input_shape) {
        throw ShapeError("input shape " + shape_str(x.shape) +
                         " does not match model input " +
                         shape_str(m.input_shape));
    }
}

namespace {

void conv_forward(const Layer& l, const std::vector<int>& in_shape,
                  const float* in, float* out) {
    const auto& k = kern::ops();
    const int ic_n = in_shape[0], h = in_shape[1], w = in_shape[2];
    const int oc_n = l.out_shape[0];
    const int ks = l.ksize, pad = ks / 2;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;

    for (int oc = 0; oc < oc_n; ++oc) {
        float* op = out + oc * plane;
        const float bias = l.b.data[static_cast<std::size_t>(oc)];
        for (std::int64_t i = 0; i < plane; ++i) op[i] = bias;
    }
    for (int oc = 0; oc < oc_n; ++oc) {
        float* op = out + oc * plane;
        for (int ic = 0; ic < ic_n; ++ic) {
            const float* ip = in + ic * plane;
            for (int ky = 0; ky < ks; ++ky) {
                const int oy_lo = std::max(0, pad - ky);
                const int oy_hi = std::min(h, h + pad - ky);
                for (int kx = 0; kx < ks; ++kx) {
                    const float wv =
                        l.w.data[((static_cast<std::size_t>(oc) * ic_n + ic) * ks + ky) * ks + kx];
                    if (wv == 0.0f) continue;
                    const int ox_lo = std::max(0, pad - kx);
                    const int ox_hi = std::min(w, w + pad - kx);
                    const int len = ox_hi - ox_lo;
                    if (len <= 0) continue;
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const int iy = oy + ky - pad;
                        const int ix = ox_lo + kx - pad;
                        k.axpy(wv, ip + static_cast<std::int64_t>(iy) * w + ix,
                               op + static_cast<std::int64_t>(oy) * w + ox_lo, len);
                    }
                }
            }
        }
    }
}

void conv_backward(const Layer& l, const std::vector<int>& in_shape,
                   const float* in, const float* dy, float* dx, Tensor* dw,
                   Tensor* db) {
    const auto& k = kern::ops();
    const int ic_n = in_shape[0], h = in_shape[1], w = in_shape[2];
    const int oc_n = l.out_shape[0];
    const int ks = l.ksize, pad = ks / 2;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;

    if (dx) std::memset(dx, 0, sizeof(float) * ic_n * plane);

    for (int oc = 0; oc < oc_n; ++oc) {
        const float* dyp = dy + oc * plane;
        if (db) {
            double acc = 0.0;
            for (std::int64_t i = 0; i < plane; ++i) acc += dyp[i];
            db->data[static_cast<std::size_t>(oc)] += static_cast<float>(acc);
        }
        for (int ic = 0; ic < ic_n; ++ic) {
            const float* ip = in + ic * plane;
            float* dxp = dx ? dx + ic * plane : nullptr;
            for (int ky = 0; ky < ks; ++ky) {
                const int oy_lo = std::max(0, pad - ky);
                const int oy_hi = std::min(h, h + pad - ky);
                for (int kx = 0; kx < ks; ++kx) {
                    const std::size_t widx =
                        ((static_cast<std::size_t>(oc) * ic_n + ic) * ks + ky) * ks + kx;
                    const float wv = l.w.data[widx];
                    const int ox_lo = std::max(0, pad - kx);
                    const int ox_hi = std::min(w, w + pad - kx);
                    const int len = ox_hi - ox_lo;
                    if (len <= 0) continue;
                    double wacc = 0.0;
                    for (int oy = oy_lo; oy < oy_hi; ++oy) {
                        const int iy = oy + ky - pad;
                        const int ix = ox_lo + kx - pad;
                        const float* dyr = dyp + static_cast<std::int64_t>(oy) * w + ox_lo;
                        const float* ir = ip + static_cast<std::int64_t>(iy) * w + ix;
                        if (dxp)
                            k.axpy(wv, dyr, dxp + static_cast<std::int64_t>(iy) * w + ix, len);
                        if (dw) wacc += k.dot(dyr, ir, len);
                    }
                    if (dw) dw->data[widx] += static_cast<float>(wacc);
                }
            }
        }
    }
}

void maxpool_forward(const std::vector<int>& in_shape, const float* in,
                     float* out, std::vector<int>& arg) {
    const int c_n = in_shape[0], h = in_shape[1], w = in_shape[2];
    const int oh = h / 2, ow = w / 2;
    arg.assign(static_cast<std::size_t>(c_n) * oh * ow, 0);
    std::size_t o = 0;
    for (int c = 0; c < c_n; ++c) {
        const float* ip = in + static_cast<std::int64_t>(c) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++o) {
                // candidates in row-major order; strict > keeps the first
                const int base = (2 * y) * w + 2 * x;
                int best = base;
                float bv = ip[base];
                const int cand[3] = {base + 1, base + w, base + w + 1};
                for (int idx : cand) {
                    if (ip[idx] > bv) {
                        bv = ip[idx];
                        best = idx;
                    }
                }
                out[o] = bv;
                arg[o] = best + c * h * w;
            }
        }
    }
}

}  // namespace

void forward(const Model& m, const float* x, Trace& t) {
    const auto& k = kern::ops();
    const std::size_t n_layers = m.layers.size();
    t.act.resize(n_layers + 1);
    t.pool_arg.assign(n_layers, {});

    if (t.act[0].shape != m.input_shape) t.act[0] = Tensor::zeros(m.input_shape);
    std::memcpy(t.act[0].ptr(), x, sizeof(float) * static_cast<std::size_t>(m.dim()));

    const std::vector<int>* cur_shape = &m.input_shape;
    for (std::size_t i = 0; i < n_layers; ++i) {
        const Layer& l = m.layers[i];
        Tensor& out = t.act[i + 1];
        if (out.shape != l.out_shape) out = Tensor::zeros(l.out_shape);
        const float* in = t.act[i].ptr();
        const int in_n = static_cast<int>(t.act[i].size());

        switch (l.kind) {
            case LayerKind::dense:
                k.matvec(l.w.ptr(), in, l.b.ptr(), out.ptr(), l.out_shape[0],
                         l.w.shape[1]);
                break;
            case LayerKind::conv2d:
                conv_forward(l, *cur_shape, in, out.ptr());
                break;
            case LayerKind::relu:
                k.relu_fwd(in, out.ptr(), in_n);
                break;
            case LayerKind::tanh_act:
                for (int j = 0; j < in_n; ++j) out.data[j] = std::tanh(in[j]);
                break;
            case LayerKind::maxpool2:
                maxpool_forward(*cur_shape, in, out.ptr(), t.pool_arg[i]);
                break;
            case LayerKind::flatten:
                std::memcpy(out.ptr(), in, sizeof(float) * in_n);
                break;
            case LayerKind::input:
                throw ShapeError("input pseudo-layer in layer list");
        }
        cur_shape = &l.out_shape;
    }
}

double scalarize(const Model& m, const Trace& t, OutputTransform ot) {
    const Tensor& head = t.act.back();
    double s;
    if (head.size() == 1) {
        s = head.data[0];
    } else {
        s = std::sqrt(kern::ops().sumsq(head.ptr(), static_cast<int>(head.size())));
    }
    return ot.scale * s + ot.shift;
}

void scalar_seed(const Model& m, const Trace& t, OutputTransform ot,
                 std::vector<float>& dhead) {
    const Tensor& head = t.act.back();
    const int n = static_cast<int>(head.size());
    dhead.assign(static_cast<std::size_t>(n), 0.0f);
    if (n == 1) {
        dhead[0] = static_cast<float>(ot.scale);
        return;
    }
    const double norm =
        std::sqrt(kern::ops().sumsq(head.ptr(), n));
    if (norm < 1e-12) return;  // subgradient 0 at the kink of ||.||
    for (int i = 0; i < n; ++i) {
        dhead[i] = static_cast<float>(ot.scale * static_cast<double>(head.data[i]) / norm);
    }
}

void backward(const Model& m, const Trace& t, std::span<const float> dhead,
              Tensor* input_grad, ParamGrads* grads) {
    const auto& k = kern::ops();
    const int n_layers = static_cast<int>(m.layers.size());
    if (static_cast<std::int64_t>(dhead.size()) != shape_size(m.head_shape()))
        throw ShapeError("head seed size mismatch");

    std::vector<float> cur(dhead.begin(), dhead.end());
    std::vector<float> nxt;

    for (int i = n_layers - 1; i >= 0; --i) {
        const Layer& l = m.layers[i];
        const Tensor& in = t.act[i];
        const Tensor& out = t.act[i + 1];
        const bool want_dx = input_grad != nullptr || i > 0;
        nxt.assign(static_cast<std::size_t>(in.size()), 0.0f);

        switch (l.kind) {
            case LayerKind::dense: {
                const int rows = l.w.shape[0], cols = l.w.shape[1];
                if (grads) {
                    Tensor& dw = grads->w[i];
                    Tensor& db = grads->b[i];
                    for (int r = 0; r < rows; ++r) {
                        k.axpy(cur[r], in.ptr(),
                               dw.ptr() + static_cast<std::size_t>(r) * cols, cols);
                        db.data[r] += cur[r];
                    }
                }
                if (want_dx) {
                    for (int r = 0; r < rows; ++r) {
                        k.axpy(cur[r], l.w.ptr() + static_cast<std::size_t>(r) * cols,
                               nxt.data(), cols);
                    }
                }
                break;
            }
            case LayerKind::conv2d:
                conv_backward(l, in.shape, in.ptr(), cur.data(),
                              want_dx ? nxt.data() : nullptr,
                              grads ? &grads->w[i] : nullptr,
                              grads ? &grads->b[i] : nullptr);
                break;
            case LayerKind::relu:
                k.relu_bwd(in.ptr(), cur.data(), nxt.data(),
                           static_cast<int>(in.size()));
                break;
            case LayerKind::tanh_act:
                for (std::int64_t j = 0; j < in.size(); ++j) {
                    const float y = out.data[j];
                    nxt[j] = cur[j] * (1.0f - y * y);
                }
                break;
            case LayerKind::maxpool2: {
                const auto& arg = t.pool_arg[i];
                for (std::size_t j = 0; j < arg.size(); ++j) nxt[arg[j]] += cur[j];
                break;
            }
            case LayerKind::flatten:
                std::memcpy(nxt.data(), cur.data(), sizeof(float) * nxt.size());
                break;
            case LayerKind::input:
                throw ShapeError("input pseudo-layer in layer list");
        }
        cur.swap(nxt);
    }

    if (input_grad) {
        *input_grad = Tensor(m.input_shape,
                             std::vector<float>(cur.begin(), cur.end()));
    }
}

ParamGrads zero_grads(const Model& m) {
    ParamGrads g;
    g.w.resize(m.layers.size());
    g.b.resize(m.layers.size());
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        if (m.layers[i].has_params()) {
            g.w[i] = Tensor::zeros(m.layers[i].w.shape);
            g.b[i] = Tensor::zeros(m.layers[i].b.shape);
        }
    }
    return g;
}

double evaluate_scalar(const Model& m, const Tensor& x, OutputTransform ot) {
    check_model_input(m, x);
    Trace t;
    forward(m, x.ptr(), t);
    return scalarize(m, t, ot);
}

Tensor input_gradient(const Model& m, const Tensor& x, OutputTransform ot) {
    check_model_input(m, x);
    Trace t;
    forward(m, x.ptr(), t);
    std::vector<float> dhead;
    scalar_seed(m, t, ot, dhead);
    Tensor g;
    backward(m, t, dhead, &g, nullptr);
    return g;
}

Model sgd_step(const Model& m, const ParamGrads& g, double lr) {
    if (lr < 0) throw ConfigError("negative learning rate");
    if (g.w.size() != m.layers.size() || g.b.size() != m.layers.size())
        throw ShapeError("gradient set does not match model layers");
    Model out = m;
    const auto& k = kern::ops();
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        Layer& l = out.layers[i];
        if (!l.has_params()) continue;
        if (!g.w[i].same_shape(l.w) || !g.b[i].same_shape(l.b))
            throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
        k.sgd_update(l.w.ptr(), g.w[i].ptr(), static_cast<float>(lr),
                     static_cast<int>(l.w.size()));
        k.sgd_update(l.b.ptr(), g.b[i].ptr(), static_cast<float>(lr),
                     static_cast<int>(l.b.size()));
    }
    return out;
}

}  // namespace mgif
