#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mgif/dataset.hpp"
#include "mgif/field.hpp"

namespace mgif {

enum class SamplerKind : std::uint8_t {
    random = 0,
    cutmix = 1,
    pgd = 2,
    dataset = 3,  // points taken verbatim from a dataset (e.g. a forget set)
};

// The K anchor points shared by every fingerprint under comparison.
// All points lie in [0,1]^D.
struct ReferenceSet {
    int k = 0;
    int dim = 0;
    std::vector<float> points;  // K x D
    SamplerKind kind = SamplerKind::random;
    std::uint64_t seed = 0;
    std::vector<std::string> source_ids;  // provenance (not serialized)

    std::span<const float> point(int i) const {
        return {points.data() + static_cast<std::size_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
    // Content hash: fingerprints are comparable iff these agree.
    std::uint64_t hash() const;
};

// Two-stage draw: uniform dataset choice, then uniform sample within it.
ReferenceSet sample_random(std::span<const DatasetSplit> datasets, int k,
                           std::uint64_t seed);

struct CutmixConfig {
    float area_lo = 0.25f;
    float area_hi = 0.75f;
};

// Rectangular patch of one random sample pasted into another. Inputs must
// be spatial (C x H x W).
ReferenceSet sample_cutmix(std::span<const DatasetSplit> datasets, int k,
                           std::uint64_t seed, const CutmixConfig& cfg = {});

// Mask mix primitive: out = mask ? a : b, per pixel, mask shared across
// channels.
void cutmix_blend(std::span<const float> a, std::span<const float> b,
                  std::span<const std::uint8_t> keep_mask, int channels,
                  std::span<float> out);

struct PgdSampleConfig {
    int steps = 10;
    float alpha = 0.02f;
    float eps = 0.1f;
};

// Sign-ascent on the probe's scalarized output from random seed points,
// projected to the eps-ball and the unit box. The probe should be excluded
// from the model set under comparison.
ReferenceSet sample_pgd(std::span<const DatasetSplit> datasets, int k,
                        const GradientField& probe, const PgdSampleConfig& cfg,
                        std::uint64_t seed);

// Verbatim points (the unlearning protocol anchors curves at the forget set).
ReferenceSet refs_from_dataset(const DatasetSplit& data);

// Reference-set file ("MGRS"): magic, version u16, K u32, D u32, sampler
// kind u8, seed u64, K*D f32 little-endian, CRC32.
void save_refset(const ReferenceSet& rs, const std::filesystem::path& path);
ReferenceSet load_refset(const std::filesystem::path& path);

}  // namespace mgif
