#include "tscf/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "tscf/errors.hpp"

namespace tscf::nn {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(Shape s, std::vector<float> v)
    : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != shape_numel(shape)) {
        throw DimensionError("tensor: " + std::to_string(values.size()) +
                             " values do not fill shape " + shape_str(shape));
    }
}

Tensor Tensor::zeros(Shape s) {
    std::size_t n = shape_numel(s);
    return Tensor(std::move(s), std::vector<float>(n, 0.0f));
}

Tensor Tensor::full(Shape s, float value) {
    std::size_t n = shape_numel(s);
    return Tensor(std::move(s), std::vector<float>(n, value));
}

void Tensor::ensure_grad() {
    if (!grad) grad.emplace(values.size(), 0.0f);
}

bool Tensor::all_finite() const {
    for (float v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace tscf::nn
