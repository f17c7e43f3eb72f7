#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgif/tensor.hpp"

namespace mgif {

// A labelled sample collection over the shared input space. All inputs live
// in [0,1]^D.
struct DatasetSplit {
    std::vector<int> input_shape;
    std::vector<float> inputs;  // n() x dim(), row-major
    std::vector<int> labels;
    std::vector<int> ids;  // stable per-sample ids (forget-set bookkeeping)
    std::string split_tag;
    std::string distribution_id;

    int n() const { return static_cast<int>(labels.size()); }
    int dim() const { return static_cast<int>(shape_size(input_shape)); }
    const float* sample(int i) const {
        return inputs.data() + static_cast<std::size_t>(i) * dim();
    }
    int num_classes() const;

    // Row-subset with ids preserved.
    DatasetSplit subset(const std::vector<int>& rows, const std::string& tag) const;
};

// 2-D Gaussian blob classes (toy separable problems).
DatasetSplit make_blobs(int n, int classes, std::uint64_t seed, float spread,
                        const std::string& dist_id, const std::string& tag);

// Procedural image-like grids: each class is a distinct binary layout
// pattern, jittered per sample (amplitude, phase, pixel noise). Individual
// samples carry enough idiosyncrasy that models memorize some of them,
// which is what the extraction/unlearning experiments probe.
struct GridSpec {
    int n = 1000;
    int classes = 10;
    int hw = 16;  // square side; input shape is 1 x hw x hw
    float contrast = 0.5f;
    float noise = 0.22f;
    float label_noise = 0.0f;  // fraction of labels resampled uniformly
    std::uint64_t seed = 1;
    std::string dist_id = "grid";
    std::string tag = "train";
    int id_offset = 0;
};
DatasetSplit make_grid_images(const GridSpec& spec);

// Binary tasks whose decision boundary direction is rotated by theta in the
// plane spanned by two fixed orthogonal probe patterns. The input
// distribution is identical for every theta; only the labelling rotates, so
// ground-truth task relatedness is -|delta theta|. flip_labels relabels the
// two sides (the boundary itself does not move).
struct RotatedSpec {
    int n = 1000;
    int hw = 16;
    double theta_deg = 0.0;
    bool flip_labels = false;
    float signal = 0.12f;
    float noise = 0.08f;
    float margin = 0.05f;  // resample draws with |boundary coordinate| below this
    std::uint64_t seed = 1;
    std::string dist_id = "rotated";
    std::string tag = "train";
};
DatasetSplit make_rotated_boundary(const RotatedSpec& spec);

}  // namespace mgif
