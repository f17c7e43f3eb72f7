#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgif/tensor.hpp"

namespace mgif {

enum class LayerKind : std::uint8_t {
    input = 0,   // pseudo-layer carrying the input shape in checkpoints
    dense = 1,
    conv2d = 2,  // stride 1, zero padding, odd square kernel
    relu = 3,
    tanh_act = 4,
    maxpool2 = 5,
    flatten = 6,
};

const char* layer_kind_name(LayerKind k);

struct Layer {
    LayerKind kind = LayerKind::input;
    std::vector<int> out_shape;
    int ksize = 0;  // conv2d kernel edge
    Tensor w, b;

    bool has_params() const {
        return kind == LayerKind::dense || kind == LayerKind::conv2d;
    }
};

// A feed-forward network over the shared input space. Immutable once
// training finishes; reading (forward/gradient) is safe from many threads
// concurrently, each with its own Trace.
struct Model {
    std::string id;
    std::vector<int> input_shape;
    std::vector<Layer> layers;

    const std::vector<int>& head_shape() const { return layers.back().out_shape; }
    int head_dim() const { return static_cast<int>(shape_size(head_shape())); }
    std::int64_t dim() const { return shape_size(input_shape); }
    std::int64_t param_count() const;
    std::uint64_t id_hash() const;
};

// Affine transform of the scalarized output; identity by default. Lets the
// invariance checks compare a model against a*M+b without cloning weights.
struct OutputTransform {
    double scale = 1.0;
    double shift = 0.0;
};

// Cached activations of one forward pass: the compute graph is the layer
// chain, topologically ordered by construction, and backward visits each
// node exactly once in reverse.
struct Trace {
    std::vector<Tensor> act;                 // act[0]=input, act[i+1]=layers[i] output
    std::vector<std::vector<int>> pool_arg;  // winning input index per pooled cell
};

// Per-parameter gradient set, aligned with model.layers (empty tensors for
// parameter-free layers).
struct ParamGrads {
    std::vector<Tensor> w, b;
};

// Builds a freshly initialized model from an architecture string, e.g.
//   "input:1x16x16,conv:8x3,relu,pool2,flatten,dense:32,tanh,dense:10"
// Weights: Xavier-uniform from the seeded counter generator (one stream per
// layer); biases zero. Same (arch, seed) gives bit-identical models.
Model build_model(const std::string& arch, std::uint64_t init_seed,
                  const std::string& id = "");

void forward(const Model& m, const float* x, Trace& t);

// Scalar output: the head value itself for 1-element heads, otherwise the
// l2 norm of the head (applied to raw pre-softmax outputs), then the affine
// transform.
double scalarize(const Model& m, const Trace& t, OutputTransform ot = {});

// Seed d(scalar)/d(head) for backward. Zero head (norm < 1e-12) seeds zero.
void scalar_seed(const Model& m, const Trace& t, OutputTransform ot,
                 std::vector<float>& dhead);

// Reverse pass from a head-gradient seed. input_grad (optional) receives
// d/dx; grads (optional) are accumulated (+=), callers zero them first.
void backward(const Model& m, const Trace& t, std::span<const float> dhead,
              Tensor* input_grad, ParamGrads* grads);

ParamGrads zero_grads(const Model& m);

// ---- spec-level operations ----

// M(x); input must match the model input shape (a flat vector of the right
// length is accepted).
double evaluate_scalar(const Model& m, const Tensor& x, OutputTransform ot = {});

// ∇ₓM(x), same shape as x. Deterministic: subgradients fixed (ReLU' (0)=0,
// max-pool ties to the first row-major winner), no reduction reordering.
Tensor input_gradient(const Model& m, const Tensor& x, OutputTransform ot = {});

// θ' = θ − lr·g as a new model; the input model is untouched. lr < 0 rejected.
Model sgd_step(const Model& m, const ParamGrads& g, double lr);

void check_model_input(const Model& m, const Tensor& x);

}  // namespace mgif
