#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mgif/dataset.hpp"
#include "mgif/model.hpp"
#include "mgif/train.hpp"

namespace mgif {

enum class FinetuneMode { all, last };

// Continue training a copy of the parent. mode == last freezes everything
// but the final affine layer (frozen parameters stay bit-identical).
// replace_head swaps in a freshly initialized final dense layer first
// (transfer to a new label space).
Model finetune(const Model& parent, const DatasetSplit& data, FinetuneMode mode,
               const SgdConfig& cfg, const std::string& id,
               int replace_head_classes = 0);

// Zero the `fraction` smallest-magnitude weights under a global ranking
// (biases exempt; ties resolved by parameter order), then optionally
// fine-tune briefly. Idempotent at equal fraction with 0 epochs.
Model prune(const Model& parent, double fraction, int finetune_epochs,
            const DatasetSplit& data, const SgdConfig& cfg, const std::string& id);

enum class ExtractMode { label, prob };

// Train a surrogate on the victim's outputs over transfer inputs: argmax
// labels (label) or full softmax vectors (prob). Regression victims
// (1-element head) reject label mode.
Model extract(const Model& victim, const DatasetSplit& transfer_inputs,
              ExtractMode mode, const std::string& surrogate_arch,
              const SgdConfig& cfg, const std::string& id);

// Adversarial training: every batch is replaced by PGD perturbations of
// itself (labels kept) before the gradient step.
Model adversarial_harden(const Model& parent, const DatasetSplit& data,
                         const PgdConfig& pgd, const SgdConfig& cfg,
                         const std::string& id);

// Retrain from scratch on train \ forget. The audit log of sample ids whose
// gradients were used never contains a forget id.
Model unlearn_exact(const DatasetSplit& train_split,
                    const std::vector<int>& forget_ids, const std::string& arch,
                    const SgdConfig& cfg, const std::string& id,
                    std::vector<int>* audit_ids = nullptr);

struct UnlearnApproxConfig {
    int epochs = 8;
    int ascent_passes = 1;  // forget-set ascent passes per epoch (0 = no-op)
    double ascent_lr = 0.01;
    double maintain_lr = 0.01;
    int batch = 32;
    std::uint64_t seed = 1;
};

// Gradient ascent on the forget set interleaved with one retained-set
// maintenance pass per epoch; returns one checkpoint per epoch.
std::vector<Model> unlearn_approx(const Model& reference,
                                  const DatasetSplit& forget_set,
                                  const DatasetSplit& retained_set,
                                  const UnlearnApproxConfig& cfg,
                                  const std::string& id_prefix);

// ---- manifest ----

struct ZooRecord {
    std::string id;
    std::string kind;    // victim, finetune-all, ..., independent, unrelated
    std::string parent;  // "-" for roots
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

struct Zoo {
    std::vector<ZooRecord> records;
    std::map<std::string, Model> models;

    const Model& get(const std::string& id) const;
};

// Line-oriented text: "id<TAB>kind<TAB>parent<TAB>seed<TAB>config_hash".
void save_manifest(const Zoo& zoo, const std::filesystem::path& path);
std::vector<ZooRecord> load_manifest(const std::filesystem::path& path);

void save_zoo(const Zoo& zoo, const std::filesystem::path& dir);
Zoo load_zoo(const std::filesystem::path& dir);

}  // namespace mgif
