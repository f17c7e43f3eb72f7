#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mgif/dataset.hpp"
#include "mgif/model.hpp"

namespace mgif {

enum class LossKind { softmax_ce, soft_ce, mse };

// Loss value for one sample; fills d(loss)/d(logits).
double softmax_ce_grad(std::span<const float> logits, int label,
                       std::span<float> dlogits);
double soft_ce_grad(std::span<const float> logits, std::span<const float> target_probs,
                    std::span<float> dlogits);
double mse_grad(std::span<const float> out, std::span<const float> target,
                std::span<float> dout);

struct SgdConfig {
    int epochs = 10;
    double lr = 0.05;
    int batch = 32;
    std::uint64_t seed = 1;
};

struct PgdConfig {
    int steps = 5;
    float alpha = 0.01f;
    float eps = 0.03f;
};

struct FitOptions {
    SgdConfig sgd;
    LossKind loss = LossKind::softmax_ce;
    // per-layer trainability; empty = all layers trainable
    std::vector<std::uint8_t> trainable;
    // row-major n x classes soft targets (probability extraction)
    const std::vector<float>* soft_targets = nullptr;
    // replace each batch by PGD perturbations of itself before the step
    std::optional<PgdConfig> adversarial;
    // gradient ascent instead of descent (approximate unlearning)
    bool ascent = false;
    // if set, collects the distinct sample ids whose gradients entered updates
    std::vector<int>* audit_ids = nullptr;
};

// Mini-batch SGD on the model in place. Deterministic for fixed
// (model, data, options): shuffling comes from the counter generator, batch
// gradients accumulate in sample order. Throws TrainingError (with the
// epoch index) if the loss goes non-finite.
void fit(Model& m, const DatasetSplit& data, const FitOptions& opt);

// Fresh model trained from an architecture string.
Model train(const std::string& arch, const DatasetSplit& data,
            const SgdConfig& cfg, const std::string& id);

// Mean loss over the batch; gradients averaged into `out` (zeroed first).
// soft_targets, when given, override integer labels.
double batch_gradient(const Model& m, const DatasetSplit& data,
                      std::span<const int> rows, LossKind loss,
                      const std::vector<float>* soft_targets, ParamGrads& out);

double mean_loss(const Model& m, const DatasetSplit& data, LossKind loss);
double accuracy(const Model& m, const DatasetSplit& data);
std::vector<int> predict_labels(const Model& m, const DatasetSplit& data);
// row-major n x classes softmax probabilities
std::vector<float> predict_probs(const Model& m, const DatasetSplit& data);

// Multi-step sign-ascent on `objective_grad` (writes d(objective)/dx into
// its second argument), projected after every step onto the eps-ball around
// the start point intersected with [0,1]^D.
void pgd_ascend(float* x, const float* x0, int d, const PgdConfig& cfg,
                const std::function<void(const float*, float*)>& objective_grad);

}  // namespace mgif
