#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mgif/errors.hpp"

namespace mgif {

inline std::int64_t shape_size(std::span<const int> shape) {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
}

std::string shape_str(std::span<const int> shape);

// Dense row-major f32 array. Gradients live in a same-shape buffer that is
// only allocated when a caller asks for one.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;  // empty, or same length as data

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<float> d);

    static Tensor zeros(std::vector<int> s);

    std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }
    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    void alloc_grad();

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

void check_shape(std::span<const int> got, std::span<const int> want,
                 const char* what);

}  // namespace mgif
