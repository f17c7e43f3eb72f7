#include "mgif/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mgif/io_util.hpp"
#include "mgif/kernels.hpp"
#include "mgif/parallel.hpp"

namespace mgif {

namespace {

constexpr double kNormEps = 1e-12;  // dead-ReLU regions give exact zeros

}  // namespace

void check_comparable(const CurveSet& a, const CurveSet& b) {
    if (a.refset_hash != b.refset_hash)
        throw IncomparableError("fingerprints '" + a.model_id + "' and '" +
                                b.model_id + "' use different reference sets");
    if (a.k != b.k || a.steps != b.steps || a.dim != b.dim)
        throw IncomparableError("fingerprints '" + a.model_id + "' and '" +
                                b.model_id + "' use different curve grids");
    if (a.baseline != b.baseline)
        throw IncomparableError("fingerprints '" + a.model_id + "' and '" +
                                b.model_id + "' use different baselines");
    if (a.rule != b.rule)
        throw IncomparableError("fingerprints '" + a.model_id + "' and '" +
                                b.model_id + "' use different quadrature rules");
}

double curve_distance(const CurveSet& a, int curve_a, const CurveSet& b,
                      int curve_b) {
    const auto& k = kern::ops();
    const int steps = a.steps, d = a.dim;
    double sum = 0.0;
    for (int s = 0; s < steps; ++s) {
        const auto u = a.curve_point(curve_a, s);
        const auto v = b.curve_point(curve_b, s);
        if (u.data() == v.data()) continue;  // aliased self-pair: cos = 1 exactly
        double dot, uu, vv;
        k.cos_stats(u.data(), v.data(), d, &dot, &uu, &vv);
        const double nu = std::sqrt(uu), nv = std::sqrt(vv);
        if (nu < kNormEps && nv < kNormEps) continue;  // agreeing null gradients
        double c = dot / (std::max(nu, kNormEps) * std::max(nv, kNormEps));
        c = std::clamp(c, -1.0, 1.0);
        sum += 1.0 - c;
    }
    return sum / static_cast<double>(steps);
}

double model_distance(const CurveSet& a, const CurveSet& b) {
    check_comparable(a, b);
    double sum = 0.0;
    for (int ki = 0; ki < a.k; ++ki) sum += curve_distance(a, ki, b, ki);
    return sum;
}

DistanceMatrix distance_matrix(std::span<const CurveSet> fps, int jobs) {
    const int n = static_cast<int>(fps.size());
    if (n < 2) throw ConfigError("distance_matrix: need at least 2 fingerprints");
    for (int i = 1; i < n; ++i) check_comparable(fps[0], fps[i]);

    DistanceMatrix dm;
    dm.refset_hash = fps[0].refset_hash;
    dm.curves_per_model = fps[0].k;
    for (const auto& f : fps) dm.ids.push_back(f.model_id);
    dm.values.assign(static_cast<std::size_t>(n) * n, 0.0);

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    parallel_for(static_cast<std::int64_t>(pairs.size()), jobs, [&](std::int64_t p) {
        const auto [i, j] = pairs[static_cast<std::size_t>(p)];
        const double d = model_distance(fps[i], fps[j]);
        dm.values[static_cast<std::size_t>(i) * n + j] = d;
        dm.values[static_cast<std::size_t>(j) * n + i] = d;
    });
    return dm;
}

AffinityMatrix to_affinity(const DistanceMatrix& dm) {
    AffinityMatrix am;
    am.ids = dm.ids;
    am.values.resize(dm.values.size());
    const double denom = 2.0 * dm.curves_per_model;
    if (denom <= 0) throw ConfigError("to_affinity: fingerprint K unknown");
    for (std::size_t i = 0; i < dm.values.size(); ++i) {
        const double d = dm.values[i];
        if (d < 0 || d > denom + 1e-9)
            throw IncomparableError("distance outside [0, 2K]; wrong normalization");
        am.values[i] = 1.0 - d / denom;
    }
    return am;
}

void save_matrix_csv(const std::filesystem::path& path,
                     std::span<const std::string> ids,
                     std::span<const double> values) {
    const std::size_t n = ids.size();
    std::ostringstream os;
    for (const auto& id : ids) os << "," << id;
    os << "\n";
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        os << ids[i];
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", values[i * n + j]);
            os << "," << buf;
        }
        os << "\n";
    }
    write_text_file(path, os.str());
}

std::pair<std::vector<std::string>, std::vector<double>> load_matrix_csv(
    const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty matrix csv: " + path.string());
    std::vector<std::string> ids;
    {
        std::istringstream ls(line);
        std::string cell;
        bool first = true;
        while (std::getline(ls, cell, ',')) {
            if (first) {
                first = false;  // leading empty corner cell
                continue;
            }
            ids.push_back(cell);
        }
    }
    const std::size_t n = ids.size();
    std::vector<double> values;
    values.reserve(n * n);
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t col = 0;
        bool first = true;
        while (std::getline(ls, cell, ',')) {
            if (first) {
                if (row >= n || cell != ids[row])
                    throw IoError("matrix csv row label mismatch: " + path.string());
                first = false;
                continue;
            }
            values.push_back(std::stod(cell));
            ++col;
        }
        if (col != n) throw IoError("matrix csv has a ragged row: " + path.string());
        ++row;
    }
    if (row != n) throw IoError("matrix csv row count mismatch: " + path.string());
    return {std::move(ids), std::move(values)};
}

}  // namespace mgif
