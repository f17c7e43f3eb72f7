#pragma once

#include <span>
#include <string>
#include <vector>

#include "mgif/distance.hpp"

namespace mgif {

// Spearman rank correlation with average ranks for ties. Throws
// UndefinedCorrelationError when either input has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);

// Strictly-upper-triangle entries in row-major order (matrix comparisons
// correlate these).
std::vector<double> upper_triangle(std::span<const double> values, int n);

// Binary merge tree from average-linkage agglomeration on 1 - affinity.
// Ties merge the pair whose smallest member ids compare lexicographically
// smallest, so the tree is invariant to input order.
struct Dendrogram {
    struct Node {
        int left = -1, right = -1;   // -1 for leaves
        double height = 0.0;         // merge dissimilarity (0 for leaves)
        std::string label;           // model id for leaves, empty otherwise
        std::string min_id;          // lexicographic smallest member id
        int size = 1;
    };
    std::vector<Node> nodes;
    int root = -1;
    std::string linkage_tag = "average";
};

Dendrogram cluster_average(const AffinityMatrix& affinity);

std::string to_newick(const Dendrogram& d);
std::string to_dot(const Dendrogram& d);

struct RocPoint {
    double fpr = 0.0, tpr = 0.0, threshold = 0.0;
};

// AUC = P(pos > neg) + 0.5 P(pos = neg) over all pairs, plus the ROC curve
// (trapezoidal area over these points equals the pair statistic).
struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> points;
};
RocResult auc_roc(std::span<const double> positive_scores,
                  std::span<const double> negative_scores);

// Stolen-model detection over one victim: score = -distance.
struct SuspectScore {
    std::string id;
    std::string lineage;  // attack family or "independent"
    double score = 0.0;
};
struct DetectionReport {
    std::string victim_id;
    std::vector<SuspectScore> suspects;
    std::vector<std::pair<std::string, double>> family_auc;  // per attack family
    std::vector<std::pair<std::string, std::vector<RocPoint>>> family_roc;
};

DetectionReport detection_report(const DistanceMatrix& dm,
                                 const std::string& victim_id,
                                 std::span<const std::pair<std::string, std::string>>
                                     suspect_lineage /* (id, family) */);

// Unlearning verification verdicts from distances to the reference model.
struct UnlearningReport {
    double d_unrelated = 0.0;
    double d_exact = 0.0;
    std::vector<double> approx_series;  // one entry per unlearning epoch
    bool exact_detected = false;     // d_exact > d_unrelated
    bool approx_incomplete = false;  // approx_series[0] < d_unrelated
    bool forgetting_trend = false;   // Spearman(epoch, series) > 0
};
UnlearningReport unlearning_report(double d_unrelated, double d_exact,
                                   std::span<const double> approx_series);

}  // namespace mgif
