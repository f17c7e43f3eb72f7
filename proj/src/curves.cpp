#include "mgif/curves.hpp"

#include <cmath>

#include "mgif/io_util.hpp"
#include "mgif/kernels.hpp"
#include "mgif/parallel.hpp"
#include "mgif/rng.hpp"

namespace mgif {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'I', 'F'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void ModelField::gradient(const float* x, float* out) const {
    Trace t;
    forward(*model_, x, t);
    std::vector<float> dhead;
    scalar_seed(*model_, t, ot_, dhead);
    Tensor g;
    backward(*model_, t, dhead, &g, nullptr);
    std::copy(g.data.begin(), g.data.end(), out);
}

GifCurve extract_curve(const GradientField& f, std::span<const float> x0,
                       std::span<const float> x1, int steps) {
    if (steps < 2) throw ConfigError("extract_curve: S must be >= 2");
    const int d = f.dim();
    if (static_cast<int>(x0.size()) != d || static_cast<int>(x1.size()) != d)
        throw ShapeError("extract_curve: endpoint dimension mismatch");

    GifCurve c;
    c.steps = steps;
    c.dim = d;
    c.x0.assign(x0.begin(), x0.end());
    c.x1.assign(x1.begin(), x1.end());
    c.samples.resize(static_cast<std::size_t>(steps) * d);

    const auto& k = kern::ops();
    std::vector<float> xt(static_cast<std::size_t>(d));
    std::vector<float> grad(static_cast<std::size_t>(d));
    std::vector<double> acc(static_cast<std::size_t>(d), 0.0);
    const double inv_s = 1.0 / static_cast<double>(steps);

    for (int j = 1; j <= steps; ++j) {
        const float alpha = static_cast<float>((j - 0.5) * inv_s);
        for (int i = 0; i < d; ++i) xt[i] = x0[i] + alpha * (x1[i] - x0[i]);
        f.gradient(xt.data(), grad.data());
        k.accum_scaled(acc.data(), grad.data(), 1.0, d);
        double* out = c.samples.data() + static_cast<std::size_t>(j - 1) * d;
        for (int i = 0; i < d; ++i) {
            const double v = acc[i] * inv_s;
            if (!std::isfinite(v))
                throw ShapeError("extract_curve: non-finite field value");
            out[i] = v;
        }
    }
    return c;
}

double completeness_residual(const GradientField& f, const GifCurve& c) {
    const int d = c.dim;
    const auto g1 = c.at(c.steps - 1);
    double lhs = 0.0;
    for (int i = 0; i < d; ++i)
        lhs += (static_cast<double>(c.x1[i]) - c.x0[i]) * g1[i];
    const double rhs = f.value(c.x1.data()) - f.value(c.x0.data());
    return std::abs(lhs - rhs);
}

CurveSet fingerprint_field(const GradientField& f, std::uint64_t model_hash,
                           const std::string& model_id, const ReferenceSet& refs,
                           const CurveOptions& opt) {
    if (refs.k < 1) throw ConfigError("fingerprint: empty reference set");
    if (opt.steps < 2) throw ConfigError("fingerprint: S must be >= 2");
    if (refs.dim != f.dim())
        throw ShapeError("fingerprint: reference dimension " +
                         std::to_string(refs.dim) + " does not match model input " +
                         std::to_string(f.dim()));

    CurveSet cs;
    cs.model_id = model_id;
    cs.model_hash = model_hash;
    cs.refset_hash = refs.hash();
    cs.baseline = opt.baseline;
    cs.rule = QuadratureRule::midpoint;
    cs.k = refs.k;
    cs.steps = opt.steps;
    cs.dim = refs.dim;
    cs.data.resize(static_cast<std::size_t>(cs.k) * cs.steps * cs.dim);

    parallel_for(cs.k, opt.jobs, [&](std::int64_t ki) {
        std::vector<float> x0(static_cast<std::size_t>(cs.dim), 0.0f);
        if (opt.baseline == BaselineMode::random) {
            // pure function of (refset hash, curve index): comparable
            // fingerprints draw identical baselines
            CounterRng rng(cs.refset_hash ^ 0x8a5cd789635d2dffULL,
                           static_cast<std::uint64_t>(ki));
            for (auto& v : x0) v = rng.next_float();
        }
        const GifCurve c =
            extract_curve(f, x0, refs.point(static_cast<int>(ki)), opt.steps);
        float* out = cs.data.data() + static_cast<std::size_t>(ki) * cs.steps * cs.dim;
        for (std::size_t i = 0; i < c.samples.size(); ++i)
            out[i] = static_cast<float>(c.samples[i]);
    });
    return cs;
}

CurveSet fingerprint(const Model& m, const ReferenceSet& refs,
                     const CurveOptions& opt, OutputTransform ot) {
    const ModelField f(m, ot);
    return fingerprint_field(f, m.id_hash(), m.id, refs, opt);
}

void save_curveset(const CurveSet& cs, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u64(cs.model_hash);
    w.u64(cs.refset_hash);
    w.u8(static_cast<std::uint8_t>(cs.baseline));
    w.u32(static_cast<std::uint32_t>(cs.k));
    w.u32(static_cast<std::uint32_t>(cs.steps));
    w.u32(static_cast<std::uint32_t>(cs.dim));
    w.u8(static_cast<std::uint8_t>(cs.rule));
    w.f32_array(cs.data);
    write_file_with_crc(path, std::move(w));
}

CurveSet load_curveset(const std::filesystem::path& path,
                       const std::string& model_id) {
    const auto bytes = read_file_with_crc(path);
    ByteReader r{bytes};
    r.expect_magic(kMagic, "fingerprint");
    const auto version = r.u16();
    if (version != kVersion)
        throw IoError("unsupported fingerprint version " + std::to_string(version));
    CurveSet cs;
    cs.model_id = model_id.empty() ? path.stem().string() : model_id;
    cs.model_hash = r.u64();
    cs.refset_hash = r.u64();
    cs.baseline = static_cast<BaselineMode>(r.u8());
    cs.k = static_cast<int>(r.u32());
    cs.steps = static_cast<int>(r.u32());
    cs.dim = static_cast<int>(r.u32());
    cs.rule = static_cast<QuadratureRule>(r.u8());
    if (cs.k < 1 || cs.steps < 2 || cs.dim < 1)
        throw IoError("malformed fingerprint header");
    cs.data.resize(static_cast<std::size_t>(cs.k) * cs.steps * cs.dim);
    r.f32_array(cs.data);
    if (r.remaining() != 0) throw IoError("trailing bytes in fingerprint");
    return cs;
}

}  // namespace mgif
