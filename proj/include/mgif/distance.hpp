#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgif/curves.hpp"

namespace mgif {

// Pairwise fingerprint distances. Symmetric with zero diagonal; entries in
// [0, 2K].
struct DistanceMatrix {
    std::vector<std::string> ids;
    std::vector<double> values;  // N x N row-major
    std::string metric_tag = "integrated-pointwise-cosine";
    std::uint64_t refset_hash = 0;
    int curves_per_model = 0;  // K, the normalization constant

    int n() const { return static_cast<int>(ids.size()); }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n() + j]; }
};

// affinity = 1 - d / (2K): the affine map sending [0, 2K] onto [1, 0].
struct AffinityMatrix {
    std::vector<std::string> ids;
    std::vector<double> values;
    std::string normalization_tag = "one-minus-d-over-2k";

    int n() const { return static_cast<int>(ids.size()); }
    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n() + j]; }
};

// Mean over the shared t-grid of the eps-guarded cosine distance between
// aligned curve points; range [0, 2]. Both-null gradient pairs contribute 0.
double curve_distance(const CurveSet& a, int curve_a, const CurveSet& b,
                      int curve_b);

// Eq-style model distance: sum of curve_distance over the K aligned curves.
// Fingerprints must share the reference set, grid and baseline.
double model_distance(const CurveSet& a, const CurveSet& b);

DistanceMatrix distance_matrix(std::span<const CurveSet> fingerprints,
                               int jobs = 1);

AffinityMatrix to_affinity(const DistanceMatrix& dm);

void check_comparable(const CurveSet& a, const CurveSet& b);

// CSV with ids as first row and column, 9 significant digits.
void save_matrix_csv(const std::filesystem::path& path,
                     std::span<const std::string> ids,
                     std::span<const double> values);
// Returns (ids, values).
std::pair<std::vector<std::string>, std::vector<double>> load_matrix_csv(
    const std::filesystem::path& path);

}  // namespace mgif
