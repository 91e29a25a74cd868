#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace tscf::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major float32 tensor. The gradient slot, when present, has the
// same layout as `values`.
struct Tensor {
    Shape shape;
    std::vector<float> values;
    std::optional<std::vector<float>> grad;

    Tensor() = default;
    Tensor(Shape s, std::vector<float> v);

    static Tensor zeros(Shape s);
    static Tensor full(Shape s, float value);

    std::size_t numel() const { return values.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    float& at(std::size_t i) { return values[i]; }
    float at(std::size_t i) const { return values[i]; }
    // 2-D / 3-D row-major access.
    float& at(std::size_t i, std::size_t j) { return values[i * shape[1] + j]; }
    float at(std::size_t i, std::size_t j) const { return values[i * shape[1] + j]; }
    float& at(std::size_t i, std::size_t j, std::size_t k) {
        return values[(i * shape[1] + j) * shape[2] + k];
    }
    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return values[(i * shape[1] + j) * shape[2] + k];
    }

    void ensure_grad();  // allocate zero gradient if absent
    bool all_finite() const;
};

}  // namespace tscf::nn
