#include "tscf/optim.hpp"

#include <cmath>

#include "tscf/errors.hpp"
#include "tscf/hash.hpp"

namespace tscf::nn {

Tensor& TensorMap::add(const std::string& name, Tensor t) {
    if (contains(name)) {
        throw StateError("tensor map already contains '" + name + "'");
    }
    index_[name] = tensors_.size();
    order_.push_back(name);
    tensors_.push_back(std::move(t));
    return tensors_.back();
}

Tensor& TensorMap::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw StateError("unknown tensor '" + name + "'");
    return tensors_[it->second];
}

const Tensor& TensorMap::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw StateError("unknown tensor '" + name + "'");
    return tensors_[it->second];
}

std::uint64_t TensorMap::content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (const std::string& name : order_) {
        h = fnv1a64(name, h);
        const Tensor& t = at(name);
        h = fnv1a64(t.values.data(), t.values.size() * sizeof(float), h);
    }
    return h;
}

Tensor& ParameterSet::add(const std::string& name, Tensor t) {
    return tensors_.add(name, std::move(t));
}

AdamState& ParameterSet::state(const std::string& name) {
    auto it = states_.find(name);
    if (it == states_.end()) {
        const Tensor& p = tensors_.at(name);
        AdamState st;
        st.m = Tensor::zeros(p.shape);
        st.v = Tensor::zeros(p.shape);
        it = states_.emplace(name, std::move(st)).first;
    }
    return it->second;
}

std::uint64_t ParameterSet::content_hash() const {
    std::uint64_t h = kFnvOffset;
    for (const std::string& name : names()) {
        h = fnv1a64(name, h);
        const Tensor& t = at(name);
        h = fnv1a64(t.values.data(), t.values.size() * sizeof(float), h);
    }
    return h;
}

void adam_step(ParameterSet& params, const GradientMap& grads, const AdamConfig& cfg) {
    if (cfg.lr <= 0.0) {
        throw ConfigError("adam: learning rate must be > 0, got " + std::to_string(cfg.lr));
    }
    for (const std::string& name : params.names()) {
        auto it = grads.find(name);
        if (it == grads.end()) {
            throw DimensionError("adam: missing gradient for parameter '" + name + "'");
        }
        Tensor& p = params.at(name);
        const std::vector<float>& g = it->second;
        if (g.size() != p.numel()) {
            throw DimensionError("adam: gradient size " + std::to_string(g.size()) +
                                 " does not match parameter '" + name + "' (" +
                                 std::to_string(p.numel()) + ")");
        }
        AdamState& st = params.state(name);
        st.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
        float* pv = p.values.data();
        float* m = st.m.values.data();
        float* v = st.v.values.data();
        for (std::size_t i = 0; i < p.numel(); ++i) {
            double gi = g[i];
            if (cfg.weight_decay != 0.0 && !cfg.decoupled_weight_decay) {
                gi += cfg.weight_decay * pv[i];
            }
            const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double m_hat = mi / bc1;
            const double v_hat = vi / bc2;
            double update = cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
            if (cfg.weight_decay != 0.0 && cfg.decoupled_weight_decay) {
                update += cfg.lr * cfg.weight_decay * pv[i];
            }
            pv[i] = static_cast<float>(pv[i] - update);
        }
    }
}

}  // namespace tscf::nn
