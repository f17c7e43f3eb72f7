#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgif/analysis.hpp"
#include "mgif/curves.hpp"
#include "mgif/dataset.hpp"
#include "mgif/distance.hpp"
#include "mgif/refset.hpp"
#include "mgif/zoo.hpp"

namespace mgif {

// ---------- stolen-model detection ----------

struct IpZooSpec {
    std::string arch =
        "input:1x16x16,conv:8x3,relu,pool2,flatten,dense:32,relu,dense:10";
    int classes = 10;
    int per_family = 3;
    int independents = 6;
    int n_train = 2500;
    int n_transfer = 6000;  // attacker query budget
    int n_aux = 1000;       // finetune split
    float noise = 0.35f;
    float label_noise = 0.2f;  // per-model memorized quirks
    std::uint64_t seed = 42;
    int base_epochs = 25;
    double base_lr = 0.08;
    int batch = 32;
    int finetune_epochs = 3;
    double finetune_all_lr = 0.01;
    double finetune_last_lr = 0.02;
    std::vector<double> prune_fractions = {0.3, 0.5, 0.7};
    int prune_finetune_epochs = 1;
    int extract_epochs = 40;
    int harden_epochs = 3;
    double harden_lr = 0.01;
    PgdConfig harden_pgd{5, 0.01f, 0.03f};
    int jobs = 1;

    std::uint64_t config_hash() const;
};

// Attacker query distribution for model extraction: natural samples mixed
// with patch splices, intensity ramps, convex blends and uniform noise, so
// the victim's behavior is pinned well beyond the clean data manifold.
DatasetSplit make_attack_queries(const GridSpec& base, int n, std::uint64_t seed);

struct IpZooBundle {
    Zoo zoo;
    DatasetSplit train, transfer, aux;
    std::string victim_id;
    // (model id, family) for every non-victim model; family "independent"
    // marks the negatives
    std::vector<std::pair<std::string, std::string>> suspect_lineage;
};

IpZooBundle build_ip_zoo(const IpZooSpec& spec);

// Fingerprints in manifest order.
std::vector<CurveSet> fingerprint_zoo(const Zoo& zoo, const ReferenceSet& refs,
                                      const CurveOptions& opt, int jobs);

struct IpDetectResult {
    DistanceMatrix distances;
    DetectionReport report;
    std::uint64_t refset_hash = 0;
};

IpDetectResult run_ipdetect(const IpZooBundle& bundle, int refs_k, int steps,
                            std::uint64_t ref_seed, int jobs);

// ---------- task relatedness ----------

struct TaskrelSpec {
    std::vector<double> thetas_deg = {0, 15, 30, 60, 90};
    bool label_permuted_control = true;
    std::string arch = "input:1x16x16,flatten,dense:24,tanh,dense:2";
    int n_train = 1500;
    int epochs = 12;
    double lr = 0.1;
    int batch = 16;
    int refs_k = 128;
    int curve_steps = 32;
    std::uint64_t seed = 1;
    int jobs = 1;

    std::uint64_t config_hash() const;
};

struct TaskrelBundle {
    Zoo zoo;
    std::vector<DatasetSplit> data;  // per task; identical input distribution
    std::vector<std::string> task_ids;
    std::vector<double> boundary_deg;  // boundary angle per task (control: 0)
};

// Trains one model per rotated-boundary task (plus the label-permuted
// control, whose boundary angle is still 0).
TaskrelBundle build_taskrel_zoo(const TaskrelSpec& spec);

// Full N x N ground-truth relatedness matrix: -|dtheta| between boundary
// angles.
std::vector<double> taskrel_ground_truth(std::span<const double> boundary_deg);

struct TaskrelResult {
    std::vector<std::string> task_ids;
    DistanceMatrix distances;
    AffinityMatrix affinity;
    Dendrogram tree;
    std::vector<double> gt_upper;        // ground-truth -|dtheta|, upper triangle
    std::vector<double> affinity_upper;  // measured affinity, upper triangle
    double spearman_rho = 0.0;
};

TaskrelResult run_taskrel(const TaskrelSpec& spec);

// ---------- unlearning verification ----------

struct UnlearnSpec {
    std::string arch = "input:1x16x16,flatten,dense:64,tanh,dense:2";
    int classes = 2;
    int n_train = 1200;
    int forget_count = 128;
    float label_noise = 0.15f;
    int epochs = 25;
    double lr = 0.1;
    int batch = 32;
    UnlearnApproxConfig approx;
    int curve_steps = 32;
    std::uint64_t seed = 1;
    int jobs = 1;

    std::uint64_t config_hash() const;
};

struct UnlearnBundle {
    Zoo zoo;  // reference, unrelated, exact, approx_e1..eN
    DatasetSplit full, forget, retained;
    std::vector<std::string> checkpoint_ids;  // approx checkpoints in epoch order
};

UnlearnBundle build_unlearn_zoo(const UnlearnSpec& spec);

struct UnlearnResult {
    UnlearningReport report;
    std::vector<std::string> checkpoint_ids;
    std::uint64_t refset_hash = 0;
};

UnlearnResult run_unlearn(const UnlearnSpec& spec);

}  // namespace mgif
