#pragma once

#include "mgif/model.hpp"

namespace mgif {

// A differentiable scalar field over the input space: anything that can
// report its value and its gradient at a point. Models adapt to this via
// ModelField; tests plug in closed-form fields.
class GradientField {
public:
    virtual ~GradientField() = default;
    virtual int dim() const = 0;
    virtual double value(const float* x) const = 0;
    virtual void gradient(const float* x, float* out) const = 0;
};

// The gradient field of a model's scalarized output.
class ModelField final : public GradientField {
public:
    explicit ModelField(const Model& m, OutputTransform ot = {})
        : model_(&m), ot_(ot) {}

    int dim() const override { return static_cast<int>(model_->dim()); }

    double value(const float* x) const override {
        Trace t;
        forward(*model_, x, t);
        return scalarize(*model_, t, ot_);
    }

    void gradient(const float* x, float* out) const override;

    const Model& model() const { return *model_; }

private:
    const Model* model_;
    OutputTransform ot_;
};

}  // namespace mgif
