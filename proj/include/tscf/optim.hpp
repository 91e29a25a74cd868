#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tscf/tensor.hpp"

namespace tscf::nn {

// Ordered name -> Tensor map. Insertion order is the serialization and
// update order, so runs are reproducible.
class TensorMap {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    bool empty() const { return order_.empty(); }
    std::uint64_t content_hash() const;

private:
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<Tensor> tensors_;
};

// Per-parameter Adam state.
struct AdamState {
    Tensor m;  // first moment
    Tensor v;  // second moment
    std::int64_t step = 0;
};

class ParameterSet {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name) { return tensors_.at(name); }
    const Tensor& at(const std::string& name) const { return tensors_.at(name); }
    bool contains(const std::string& name) const { return tensors_.contains(name); }
    const std::vector<std::string>& names() const { return tensors_.names(); }
    std::size_t size() const { return tensors_.size(); }
    AdamState& state(const std::string& name);

    // Hash of all parameter bytes in insertion order (frozen-model checks).
    std::uint64_t content_hash() const;

private:
    TensorMap tensors_;
    std::unordered_map<std::string, AdamState> states_;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    // Classic coupled decay adds wd * theta to the gradient; the decoupled
    // variant shrinks the parameter directly instead.
    bool decoupled_weight_decay = false;
};

using GradientMap = std::unordered_map<std::string, std::vector<float>>;

// Bias-corrected Adam over every parameter in `params`. `grads` must carry an
// entry of matching size for each parameter.
void adam_step(ParameterSet& params, const GradientMap& grads, const AdamConfig& cfg);

}  // namespace tscf::nn
