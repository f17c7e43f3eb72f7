#include "mgif/refset.hpp"

#include <algorithm>
#include <cmath>

#include "mgif/io_util.hpp"
#include "mgif/rng.hpp"
#include "mgif/train.hpp"

namespace mgif {

namespace {

constexpr char kMagic[4] = {'M', 'G', 'R', 'S'};
constexpr std::uint16_t kVersion = 1;

void check_datasets(std::span<const DatasetSplit> datasets) {
    if (datasets.empty()) throw ConfigError("sampler: no datasets given");
    for (const auto& d : datasets) {
        if (d.n() == 0) throw ConfigError("sampler: empty dataset split");
        if (d.input_shape != datasets.front().input_shape)
            throw ShapeError("sampler: datasets disagree on the input shape");
    }
}

void assert_unit_box(std::span<const float> pts) {
    for (float v : pts) {
        if (!(v >= 0.0f && v <= 1.0f))
            throw ShapeError("sampler produced a point outside [0,1]^D");
    }
}

}  // namespace

std::uint64_t ReferenceSet::hash() const {
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(k));
    w.u32(static_cast<std::uint32_t>(dim));
    w.u8(static_cast<std::uint8_t>(kind));
    w.u64(seed);
    w.f32_array(points);
    return fnv1a64(w.bytes);
}

ReferenceSet sample_random(std::span<const DatasetSplit> datasets, int k,
                           std::uint64_t seed) {
    if (k < 1) throw ConfigError("sampler: K must be >= 1");
    check_datasets(datasets);
    ReferenceSet rs;
    rs.k = k;
    rs.dim = datasets.front().dim();
    rs.kind = SamplerKind::random;
    rs.seed = seed;
    for (const auto& d : datasets) rs.source_ids.push_back(d.distribution_id);

    CounterRng rng(seed, 201);
    rs.points.reserve(static_cast<std::size_t>(k) * rs.dim);
    for (int i = 0; i < k; ++i) {
        const auto di = rng.next_below(datasets.size());
        const auto& d = datasets[di];
        const auto si = rng.next_below(static_cast<std::uint64_t>(d.n()));
        const float* p = d.sample(static_cast<int>(si));
        rs.points.insert(rs.points.end(), p, p + rs.dim);
    }
    assert_unit_box(rs.points);
    return rs;
}

void cutmix_blend(std::span<const float> a, std::span<const float> b,
                  std::span<const std::uint8_t> keep_mask, int channels,
                  std::span<float> out) {
    const std::size_t plane = keep_mask.size();
    if (a.size() != b.size() || a.size() != out.size() ||
        a.size() != plane * channels)
        throw ShapeError("cutmix_blend: size mismatch");
    for (int c = 0; c < channels; ++c) {
        const std::size_t off = static_cast<std::size_t>(c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
            out[off + i] = keep_mask[i] ? a[off + i] : b[off + i];
        }
    }
}

ReferenceSet sample_cutmix(std::span<const DatasetSplit> datasets, int k,
                           std::uint64_t seed, const CutmixConfig& cfg) {
    if (k < 1) throw ConfigError("sampler: K must be >= 1");
    check_datasets(datasets);
    const auto& shape = datasets.front().input_shape;
    if (shape.size() != 3)
        throw ShapeError("cutmix needs spatial (CxHxW) inputs, got " + shape_str(shape));
    const int ch = shape[0], h = shape[1], w = shape[2];

    ReferenceSet rs;
    rs.k = k;
    rs.dim = datasets.front().dim();
    rs.kind = SamplerKind::cutmix;
    rs.seed = seed;
    for (const auto& d : datasets) rs.source_ids.push_back(d.distribution_id);

    CounterRng rng(seed, 211);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(h) * w);
    std::vector<float> mixed(static_cast<std::size_t>(rs.dim));
    rs.points.reserve(static_cast<std::size_t>(k) * rs.dim);

    auto draw = [&]() -> const float* {
        const auto di = rng.next_below(datasets.size());
        const auto& d = datasets[di];
        return d.sample(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d.n()))));
    };

    for (int i = 0; i < k; ++i) {
        const float* x = draw();
        const float* xs = draw();
        const float area = rng.next_uniform(cfg.area_lo, cfg.area_hi);
        const float side = std::sqrt(area);
        const int rh = std::clamp(static_cast<int>(std::lround(side * h)), 1, h);
        const int rw = std::clamp(static_cast<int>(std::lround(side * w)), 1, w);
        const int y0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(h - rh + 1)));
        const int x0 = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(w - rw + 1)));

        std::fill(keep.begin(), keep.end(), std::uint8_t{1});
        for (int y = y0; y < y0 + rh; ++y)
            std::fill_n(keep.begin() + static_cast<std::size_t>(y) * w + x0, rw, std::uint8_t{0});

        cutmix_blend({x, static_cast<std::size_t>(rs.dim)},
                     {xs, static_cast<std::size_t>(rs.dim)}, keep, ch, mixed);
        rs.points.insert(rs.points.end(), mixed.begin(), mixed.end());
    }
    assert_unit_box(rs.points);
    return rs;
}

ReferenceSet sample_pgd(std::span<const DatasetSplit> datasets, int k,
                        const GradientField& probe, const PgdSampleConfig& cfg,
                        std::uint64_t seed) {
    if (k < 1) throw ConfigError("sampler: K must be >= 1");
    if (cfg.steps < 1) throw ConfigError("pgd sampler: steps must be >= 1");
    if (cfg.alpha <= 0 || cfg.eps <= 0)
        throw ConfigError("pgd sampler: alpha and eps must be positive");
    check_datasets(datasets);
    if (probe.dim() != datasets.front().dim())
        throw ShapeError("pgd sampler: probe input dimension mismatch");

    ReferenceSet rs;
    rs.k = k;
    rs.dim = datasets.front().dim();
    rs.kind = SamplerKind::pgd;
    rs.seed = seed;
    for (const auto& d : datasets) rs.source_ids.push_back(d.distribution_id);

    // seed points come from the same two-stage stream as sample_random, so a
    // zero-gradient probe reproduces the plain random set exactly
    CounterRng rng(seed, 201);
    PgdConfig pc{cfg.steps, cfg.alpha, cfg.eps};
    std::vector<float> x(static_cast<std::size_t>(rs.dim));
    rs.points.reserve(static_cast<std::size_t>(k) * rs.dim);
    for (int i = 0; i < k; ++i) {
        const auto di = rng.next_below(datasets.size());
        const auto& d = datasets[di];
        const float* p = d.sample(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(d.n()))));
        x.assign(p, p + rs.dim);
        pgd_ascend(x.data(), p, rs.dim, pc,
                   [&](const float* xp, float* g) { probe.gradient(xp, g); });
        rs.points.insert(rs.points.end(), x.begin(), x.end());
    }
    assert_unit_box(rs.points);
    return rs;
}

ReferenceSet refs_from_dataset(const DatasetSplit& data) {
    if (data.n() == 0) throw ConfigError("refs_from_dataset: empty dataset");
    ReferenceSet rs;
    rs.k = data.n();
    rs.dim = data.dim();
    rs.kind = SamplerKind::dataset;
    rs.seed = 0;
    rs.source_ids.push_back(data.distribution_id);
    rs.points = data.inputs;
    assert_unit_box(rs.points);
    return rs;
}

void save_refset(const ReferenceSet& rs, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic(kMagic);
    w.u16(kVersion);
    w.u32(static_cast<std::uint32_t>(rs.k));
    w.u32(static_cast<std::uint32_t>(rs.dim));
    w.u8(static_cast<std::uint8_t>(rs.kind));
    w.u64(rs.seed);
    w.f32_array(rs.points);
    write_file_with_crc(path, std::move(w));
}

ReferenceSet load_refset(const std::filesystem::path& path) {
    const auto bytes = read_file_with_crc(path);
    ByteReader r{bytes};
    r.expect_magic(kMagic, "reference set");
    const auto version = r.u16();
    if (version != kVersion)
        throw IoError("unsupported reference-set version " + std::to_string(version));
    ReferenceSet rs;
    rs.k = static_cast<int>(r.u32());
    rs.dim = static_cast<int>(r.u32());
    rs.kind = static_cast<SamplerKind>(r.u8());
    rs.seed = r.u64();
    if (rs.k < 1 || rs.dim < 1) throw IoError("malformed reference-set header");
    rs.points.resize(static_cast<std::size_t>(rs.k) * rs.dim);
    r.f32_array(rs.points);
    if (r.remaining() != 0) throw IoError("trailing bytes in reference set");
    return rs;
}

}  // namespace mgif
