#include "mgif/tensor.hpp"

#include <sstream>

namespace mgif {

std::string shape_str(std::span<const int> shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<int> s, std::vector<float> d)
    : shape(std::move(s)), data(std::move(d)) {
    for (int e : shape) {
        if (e <= 0) throw ShapeError("tensor extent must be positive, got " + shape_str(shape));
    }
    if (shape_size(shape) != static_cast<std::int64_t>(data.size())) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(std::vector<int> s) {
    const auto n = shape_size(s);
    return Tensor(std::move(s), std::vector<float>(static_cast<std::size_t>(n), 0.0f));
}

void Tensor::alloc_grad() {
    requires_grad = true;
    grad.assign(data.size(), 0.0f);
}

void check_shape(std::span<const int> got, std::span<const int> want,
                 const char* what) {
    if (got.size() != want.size() ||
        !std::equal(got.begin(), got.end(), want.begin())) {
        throw ShapeError(std::string(what) + ": shape " + shape_str(got) +
                         " does not match expected " + shape_str(want));
    }
}

}  // namespace mgif
