#include "mgif/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "mgif/errors.hpp"
#include "mgif/rng.hpp"

namespace mgif {

int DatasetSplit::num_classes() const {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
}

DatasetSplit DatasetSplit::subset(const std::vector<int>& rows,
                                  const std::string& tag) const {
    DatasetSplit out;
    out.input_shape = input_shape;
    out.split_tag = tag;
    out.distribution_id = distribution_id;
    const int d = dim();
    out.inputs.reserve(rows.size() * static_cast<std::size_t>(d));
    for (int r : rows) {
        if (r < 0 || r >= n()) throw ShapeError("subset row out of range");
        out.inputs.insert(out.inputs.end(), sample(r), sample(r) + d);
        out.labels.push_back(labels[r]);
        out.ids.push_back(ids[r]);
    }
    return out;
}

DatasetSplit make_blobs(int n, int classes, std::uint64_t seed, float spread,
                        const std::string& dist_id, const std::string& tag) {
    if (n <= 0 || classes <= 0) throw ConfigError("blobs: n and classes must be positive");
    DatasetSplit d;
    d.input_shape = {2};
    d.split_tag = tag;
    d.distribution_id = dist_id;
    CounterRng rng(seed, 17);
    // class centers on a circle in the unit box
    std::vector<float> cx(classes), cy(classes);
    for (int c = 0; c < classes; ++c) {
        const double a = 2.0 * M_PI * c / classes;
        cx[c] = 0.5f + 0.3f * static_cast<float>(std::cos(a));
        cy[c] = 0.5f + 0.3f * static_cast<float>(std::sin(a));
    }
    for (int i = 0; i < n; ++i) {
        const int c = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
        // triangular-ish noise from the difference of two uniforms
        const float nx = spread * (rng.next_float() - rng.next_float());
        const float ny = spread * (rng.next_float() - rng.next_float());
        d.inputs.push_back(std::clamp(cx[c] + nx, 0.0f, 1.0f));
        d.inputs.push_back(std::clamp(cy[c] + ny, 0.0f, 1.0f));
        d.labels.push_back(c);
        d.ids.push_back(i);
    }
    return d;
}

namespace {

// Value in {-1, +1} of class pattern `c` at pixel (y, x); integer arithmetic
// only, so datasets are reproducible across platforms.
int pattern_sign(int c, int y, int x, int hw) {
    switch (c % 10) {
        case 0: return (y / 2) % 2 ? 1 : -1;
        case 1: return (x / 2) % 2 ? 1 : -1;
        case 2: return ((y / 2) + (x / 2)) % 2 ? 1 : -1;
        case 3: return (y / 4) % 2 ? 1 : -1;
        case 4: return (x / 4) % 2 ? 1 : -1;
        case 5: return ((y / 4) + (x / 4)) % 2 ? 1 : -1;
        case 6: return ((y < hw / 2) == (x < hw / 2)) ? 1 : -1;
        case 7: return ((y + x) / 3) % 2 ? 1 : -1;
        case 8: return ((y - x + 4 * hw) / 3) % 2 ? 1 : -1;
        default: {
            const int q = hw / 4;
            const bool inner = y >= q && y < hw - q && x >= q && x < hw - q;
            return inner ? 1 : -1;
        }
    }
}

}  // namespace

DatasetSplit make_grid_images(const GridSpec& spec) {
    if (spec.n <= 0 || spec.classes <= 0 || spec.hw <= 0)
        throw ConfigError("grid: n, classes, hw must be positive");
    DatasetSplit d;
    d.input_shape = {1, spec.hw, spec.hw};
    d.split_tag = spec.tag;
    d.distribution_id = spec.dist_id;
    CounterRng rng(spec.seed, 23);
    const int hw = spec.hw;
    d.inputs.reserve(static_cast<std::size_t>(spec.n) * hw * hw);
    for (int i = 0; i < spec.n; ++i) {
        int label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.classes)));
        const float amp = spec.contrast * rng.next_uniform(0.6f, 1.4f);
        const int dy = static_cast<int>(rng.next_below(4));
        const int dx = static_cast<int>(rng.next_below(4));
        for (int y = 0; y < hw; ++y) {
            for (int x = 0; x < hw; ++x) {
                const int s = pattern_sign(label, y + dy, x + dx, hw);
                const float u = 2.0f * rng.next_float() - 1.0f;
                const float v = 0.5f + 0.5f * amp * static_cast<float>(s) + spec.noise * u;
                d.inputs.push_back(std::clamp(v, 0.0f, 1.0f));
            }
        }
        if (spec.label_noise > 0.0f && rng.next_float() < spec.label_noise) {
            label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.classes)));
        }
        d.labels.push_back(label);
        d.ids.push_back(spec.id_offset + i);
    }
    return d;
}

DatasetSplit make_rotated_boundary(const RotatedSpec& spec) {
    if (spec.n <= 0 || spec.hw <= 0) throw ConfigError("rotated: n, hw must be positive");
    const int hw = spec.hw;
    DatasetSplit d;
    d.input_shape = {1, hw, hw};
    d.split_tag = spec.tag;
    d.distribution_id = spec.dist_id;
    CounterRng rng(spec.seed, 31);

    // two exactly orthogonal unit patterns: stripes on the left half,
    // stripes on the right half
    std::vector<float> p1(static_cast<std::size_t>(hw) * hw, 0.0f);
    std::vector<float> p2(static_cast<std::size_t>(hw) * hw, 0.0f);
    int n1 = 0, n2 = 0;
    for (int y = 0; y < hw; ++y) {
        for (int x = 0; x < hw; ++x) {
            const int s = (y / 2) % 2 ? 1 : -1;
            if (x < hw / 2) {
                p1[static_cast<std::size_t>(y) * hw + x] = static_cast<float>(s);
                ++n1;
            } else {
                p2[static_cast<std::size_t>(y) * hw + x] = static_cast<float>(s);
                ++n2;
            }
        }
    }
    const float inv1 = 1.0f / std::sqrt(static_cast<float>(n1));
    const float inv2 = 1.0f / std::sqrt(static_cast<float>(n2));
    for (auto& v : p1) v *= inv1;
    for (auto& v : p2) v *= inv2;

    const double th = spec.theta_deg * M_PI / 180.0;
    const double ct = std::cos(th), st = std::sin(th);

    d.inputs.reserve(static_cast<std::size_t>(spec.n) * hw * hw);
    for (int i = 0; i < spec.n; ++i) {
        double u, v, proj;
        do {
            u = 2.0 * rng.next_double() - 1.0;
            v = 2.0 * rng.next_double() - 1.0;
            proj = ct * u + st * v;
        } while (std::abs(proj) < spec.margin);
        int label = proj > 0 ? 1 : 0;
        if (spec.flip_labels) label = 1 - label;
        const float su = spec.signal * static_cast<float>(u) * std::sqrt(static_cast<float>(hw * hw));
        const float sv = spec.signal * static_cast<float>(v) * std::sqrt(static_cast<float>(hw * hw));
        for (int j = 0; j < hw * hw; ++j) {
            const float eta = 2.0f * rng.next_float() - 1.0f;
            const float val = 0.5f + su * p1[j] + sv * p2[j] + spec.noise * eta;
            d.inputs.push_back(std::clamp(val, 0.0f, 1.0f));
        }
        d.labels.push_back(label);
        d.ids.push_back(i);
    }
    return d;
}

}  // namespace mgif
