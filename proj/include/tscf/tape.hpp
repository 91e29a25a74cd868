#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "tscf/rng.hpp"
#include "tscf/tensor.hpp"

namespace tscf::nn {

enum class Mode { Train, Eval };

enum class Act { Relu, Tanh, Sigmoid, Softmax };

const char* act_name(Act a);
Act act_from_name(const std::string& name);

// Reverse-mode tape. One tape records one forward pass; backward() walks the
// nodes in reverse creation order (creation order is already topological).
// Graphs here are tiny, so nodes own their tensors and no graph optimization
// is attempted.
class Tape {
public:
    struct ValueId {
        std::uint32_t index = std::numeric_limits<std::uint32_t>::max();
        bool valid() const { return index != std::numeric_limits<std::uint32_t>::max(); }
    };

    using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

    // Leaf node (input or parameter). Values are copied onto the tape.
    ValueId leaf(Tensor t);
    ValueId leaf(const std::vector<float>& values, Shape shape);

    // --- layer primitives -------------------------------------------------
    // input [C_in,T] or [B,C_in,T]; weights [C_out,C_in,k] with k odd;
    // bias [C_out]; zero 'same' padding keeps length T.
    ValueId conv1d(ValueId input, ValueId weights, ValueId bias);
    // input [N] or [B,N]; weights [M,N]; bias [M].
    ValueId dense(ValueId input, ValueId weights, ValueId bias);
    // input [B,F] (stats per feature over B) or [B,C,T] (per channel over
    // B*T); gamma/beta [F]. Train mode normalizes by batch statistics and
    // folds them into running_mean/running_var with `momentum`; eval mode
    // reads the running stats. Train mode requires B >= 2.
    ValueId batchnorm(ValueId input, ValueId gamma, ValueId beta,
                      Tensor& running_mean, Tensor& running_var, Mode mode,
                      double momentum = 0.1, double eps = 1e-5);
    ValueId activation(ValueId input, Act kind);  // softmax over last axis
    // Inverted dropout: eval is the identity, train zeroes entries with
    // probability `rate` and scales survivors by 1/(1-rate).
    ValueId dropout(ValueId input, double rate, Mode mode, Rng& rng);

    // --- glue -------------------------------------------------------------
    ValueId add(ValueId a, ValueId b);       // elementwise, equal shapes
    ValueId reshape(ValueId input, Shape s); // same numel
    ValueId sum(ValueId input);              // scalar, f64 accumulation
    // total = sum_i coeffs[i] * scalars[i]
    ValueId weighted_sum(const std::vector<ValueId>& scalars,
                         const std::vector<double>& coeffs);

    // Escape hatch for modules that contribute their own differentiable
    // nodes (the loss functions live outside the kernel).
    ValueId custom(std::vector<std::uint32_t> parents, Tensor out, BackwardFn fn);

    // --- access -----------------------------------------------------------
    const Tensor& value(ValueId id) const;
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar and
    // the tape must contain a recorded forward pass. One backward per tape.
    void backward(ValueId loss);
    bool backward_done() const { return backward_done_; }
    // Gradient of the backward target w.r.t. node `id` (valid after backward).
    const std::vector<float>& grad(ValueId id) const;
    Tensor grad_tensor(ValueId id) const;

    // For backward closures.
    const Tensor& node_value(std::uint32_t i) const { return nodes_[i].value; }
    const std::vector<float>& node_grad(std::uint32_t i) const { return nodes_[i].grad; }
    const std::vector<std::uint32_t>& node_parents(std::uint32_t i) const {
        return nodes_[i].parents;
    }
    // Gradient accumulator of node i; writing marks it live for the sweep.
    std::vector<float>& grad_buffer(std::uint32_t i) {
        nodes_[i].live = true;
        return nodes_[i].grad;
    }

private:
    struct Node {
        Tensor value;
        std::vector<float> grad;
        std::vector<std::uint32_t> parents;
        BackwardFn backward_fn;
        bool live = false;  // gradient touched during the current sweep
    };

    std::uint32_t push(Tensor value, std::vector<std::uint32_t> parents,
                       BackwardFn fn);
    const Node& checked(ValueId id) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

}  // namespace tscf::nn
