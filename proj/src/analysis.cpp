#include "mgif/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mgif/errors.hpp"

namespace mgif {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
    if (a.size() < 3) throw ShapeError("spearman: need at least 3 observations");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - mean, db = rb[i] - mean;
        sa += da * da;
        sb += db * db;
        sab += da * db;
    }
    if (sa == 0.0 || sb == 0.0)
        throw UndefinedCorrelationError("spearman: constant input has no rank variance");
    return sab / std::sqrt(sa * sb);
}

std::vector<double> upper_triangle(std::span<const double> values, int n) {
    if (static_cast<std::size_t>(n) * n != values.size())
        throw ShapeError("upper_triangle: not an NxN matrix");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.push_back(values[static_cast<std::size_t>(i) * n + j]);
    return out;
}

Dendrogram cluster_average(const AffinityMatrix& affinity) {
    const int n = affinity.n();
    if (n < 2) throw ConfigError("cluster: need at least 2 models");

    Dendrogram d;
    std::vector<int> active;  // node index per active cluster
    std::vector<std::vector<double>> dist(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int i = 0; i < n; ++i) {
        Dendrogram::Node leaf;
        leaf.label = affinity.ids[i];
        leaf.min_id = affinity.ids[i];
        d.nodes.push_back(leaf);
        active.push_back(i);
        for (int j = 0; j < n; ++j) dist[i][j] = 1.0 - affinity.at(i, j);
    }

    // dis[a][b] between active clusters, indexed by position in `active`
    auto cluster_dist = [&](int a, int b) { return dist[a][b]; };

    std::vector<int> slot_of_node(d.nodes.size());
    std::iota(slot_of_node.begin(), slot_of_node.end(), 0);

    while (active.size() > 1) {
        int bi = -1, bj = -1;
        double best = 0.0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double dd = cluster_dist(slot_of_node[active[i]], slot_of_node[active[j]]);
                bool take = bi < 0 || dd < best;
                if (!take && dd == best) {
                    // lexicographic tie-break on (smaller min id, larger min id)
                    const auto key = [&](int x, int y) {
                        const auto &a0 = d.nodes[active[x]].min_id, &b0 = d.nodes[active[y]].min_id;
                        return a0 < b0 ? std::pair(a0, b0) : std::pair(b0, a0);
                    };
                    take = key(static_cast<int>(i), static_cast<int>(j)) <
                           key(bi, bj);
                }
                if (take) {
                    best = dd;
                    bi = static_cast<int>(i);
                    bj = static_cast<int>(j);
                }
            }
        }

        const int na = active[static_cast<std::size_t>(bi)];
        const int nb = active[static_cast<std::size_t>(bj)];
        Dendrogram::Node merged;
        merged.left = na;
        merged.right = nb;
        merged.height = best;
        merged.size = d.nodes[na].size + d.nodes[nb].size;
        merged.min_id = std::min(d.nodes[na].min_id, d.nodes[nb].min_id);
        const int mi = static_cast<int>(d.nodes.size());
        d.nodes.push_back(merged);

        // Lance-Williams average linkage update into slot of na
        const int sa = slot_of_node[na], sb = slot_of_node[nb];
        const double wa = d.nodes[na].size, wb = d.nodes[nb].size;
        for (int other : active) {
            if (other == na || other == nb) continue;
            const int so = slot_of_node[other];
            const double dd = (wa * dist[sa][so] + wb * dist[sb][so]) / (wa + wb);
            dist[sa][so] = dd;
            dist[so][sa] = dd;
        }
        slot_of_node.push_back(sa);

        active.erase(active.begin() + bj);
        active[static_cast<std::size_t>(bi)] = mi;
    }
    d.root = active[0];
    return d;
}

namespace {

void newick_rec(const Dendrogram& d, int node, double parent_h, std::ostringstream& os) {
    const auto& nd = d.nodes[static_cast<std::size_t>(node)];
    if (nd.left < 0) {
        os << nd.label;
    } else {
        os << "(";
        newick_rec(d, nd.left, nd.height, os);
        os << ",";
        newick_rec(d, nd.right, nd.height, os);
        os << ")";
    }
    os << ":" << (parent_h - nd.height);
}

}  // namespace

std::string to_newick(const Dendrogram& d) {
    std::ostringstream os;
    const auto& root = d.nodes[static_cast<std::size_t>(d.root)];
    if (root.left < 0) {
        os << root.label;
    } else {
        os << "(";
        newick_rec(d, root.left, root.height, os);
        os << ",";
        newick_rec(d, root.right, root.height, os);
        os << ")";
    }
    os << ";";
    return os.str();
}

std::string to_dot(const Dendrogram& d) {
    std::ostringstream os;
    os << "graph dendrogram {\n  node [shape=box];\n";
    for (std::size_t i = 0; i < d.nodes.size(); ++i) {
        const auto& nd = d.nodes[i];
        if (nd.left < 0) {
            os << "  n" << i << " [label=\"" << nd.label << "\"];\n";
        } else {
            os << "  n" << i << " [label=\"h=" << nd.height << "\" shape=ellipse];\n";
            os << "  n" << i << " -- n" << nd.left << ";\n";
            os << "  n" << i << " -- n" << nd.right << ";\n";
        }
    }
    os << "}\n";
    return os.str();
}

RocResult auc_roc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty())
        throw ConfigError("auc_roc: both score sets must be non-empty");

    RocResult out;
    double wins = 0.0;
    for (double p : pos) {
        for (double q : neg) {
            if (p > q) wins += 1.0;
            else if (p == q) wins += 0.5;
        }
    }
    out.auc = wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));

    // threshold sweep, descending scores, ties grouped
    std::vector<double> all(pos.begin(), pos.end());
    all.insert(all.end(), neg.begin(), neg.end());
    std::sort(all.begin(), all.end(), std::greater<>());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    out.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    for (double thr : all) {
        const auto tp = static_cast<double>(
            std::count_if(pos.begin(), pos.end(), [&](double v) { return v >= thr; }));
        const auto fp = static_cast<double>(
            std::count_if(neg.begin(), neg.end(), [&](double v) { return v >= thr; }));
        out.points.push_back({fp / static_cast<double>(neg.size()),
                              tp / static_cast<double>(pos.size()), thr});
    }
    return out;
}

DetectionReport detection_report(
    const DistanceMatrix& dm, const std::string& victim_id,
    std::span<const std::pair<std::string, std::string>> suspect_lineage) {
    const auto vit = std::find(dm.ids.begin(), dm.ids.end(), victim_id);
    if (vit == dm.ids.end())
        throw ConfigError("detection_report: victim '" + victim_id + "' not in matrix");
    const int vi = static_cast<int>(vit - dm.ids.begin());

    DetectionReport rep;
    rep.victim_id = victim_id;

    std::vector<double> independent_scores;
    std::vector<std::pair<std::string, std::vector<double>>> family_scores;
    for (const auto& [id, family] : suspect_lineage) {
        const auto it = std::find(dm.ids.begin(), dm.ids.end(), id);
        if (it == dm.ids.end())
            throw ConfigError("detection_report: suspect '" + id + "' not in matrix");
        const int si = static_cast<int>(it - dm.ids.begin());
        const double score = -dm.at(vi, si);
        rep.suspects.push_back({id, family, score});
        if (family == "independent") {
            independent_scores.push_back(score);
        } else {
            auto fit = std::find_if(family_scores.begin(), family_scores.end(),
                                    [&](const auto& p) { return p.first == family; });
            if (fit == family_scores.end()) {
                family_scores.push_back({family, {score}});
            } else {
                fit->second.push_back(score);
            }
        }
    }
    if (independent_scores.empty())
        throw ConfigError("detection_report: no independent (negative) models given");

    for (const auto& [family, scores] : family_scores) {
        const RocResult rr = auc_roc(scores, independent_scores);
        rep.family_auc.emplace_back(family, rr.auc);
        rep.family_roc.emplace_back(family, rr.points);
    }
    return rep;
}

UnlearningReport unlearning_report(double d_unrelated, double d_exact,
                                   std::span<const double> approx_series) {
    if (d_unrelated < 0 || d_exact < 0)
        throw ConfigError("unlearning_report: distances must be non-negative");
    for (double v : approx_series)
        if (v < 0) throw ConfigError("unlearning_report: distances must be non-negative");

    UnlearningReport rep;
    rep.d_unrelated = d_unrelated;
    rep.d_exact = d_exact;
    rep.approx_series.assign(approx_series.begin(), approx_series.end());
    rep.exact_detected = d_exact > d_unrelated;
    rep.approx_incomplete =
        !approx_series.empty() && approx_series.front() < d_unrelated;
    if (approx_series.size() >= 3) {
        std::vector<double> epochs(approx_series.size());
        std::iota(epochs.begin(), epochs.end(), 1.0);
        try {
            rep.forgetting_trend = spearman(epochs, approx_series) > 0.0;
        } catch (const UndefinedCorrelationError&) {
            rep.forgetting_trend = false;  // constant series: no trend
        }
    }
    return rep;
}

}  // namespace mgif
