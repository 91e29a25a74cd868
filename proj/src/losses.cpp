#include "tscf/losses.hpp"

#include <cmath>

#include "tscf/errors.hpp"
#include "tscf/models.hpp"

namespace tscf::losses {

using nn::Shape;
using nn::Tape;
using nn::Tensor;

void LossWeights::validate() const {
    if (lambda_gen < 0.0 || lambda_wl1 < 0.0) {
        throw ConfigError("loss weights must be >= 0");
    }
}

namespace {

double clamp_prob(double p) {
    if (p < kLogClamp) return kLogClamp;
    if (p > 1.0 - kLogClamp) return 1.0 - kLogClamp;
    return p;
}

// Checks [B,K] probability rows against 1-based labels, returns (B, K).
std::pair<std::size_t, std::size_t> check_probs(const Tensor& probs,
                                                const std::vector<int>& labels) {
    if (probs.rank() != 2) {
        throw DimensionError("loss: probabilities must be [B,K], got " +
                             nn::shape_str(probs.shape));
    }
    const std::size_t batch = probs.dim(0), k = probs.dim(1);
    if (labels.size() != batch) {
        throw DimensionError("loss: " + std::to_string(labels.size()) +
                             " labels for a batch of " + std::to_string(batch));
    }
    for (int y : labels) {
        if (y < 1 || static_cast<std::size_t>(y) > k) {
            throw DataError("loss: label " + std::to_string(y) + " outside 1.." +
                            std::to_string(k));
        }
    }
    return {batch, k};
}

void check_scores(const Tensor& s, const char* who) {
    if (s.rank() != 1) {
        throw DimensionError(std::string(who) + ": scores must be [B], got " +
                             nn::shape_str(s.shape));
    }
    if (s.numel() == 0) {
        throw DimensionError(std::string(who) + ": empty score batch");
    }
}

}  // namespace

Tape::ValueId class_swap_loss(Tape& tape, Tape::ValueId probs,
                              const std::vector<int>& labels) {
    const Tensor& p = tape.value(probs);
    auto [batch, k] = check_probs(p, labels);

    double acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double py = clamp_prob(p.at(i, static_cast<std::size_t>(labels[i]) - 1));
        acc -= std::log(1.0 - py);
    }
    Tensor out(Shape{1}, {static_cast<float>(acc / static_cast<double>(batch))});

    auto backward = [labels, batch, k](Tape& t, std::uint32_t self) {
        const float g = t.node_grad(self)[0];
        const Tensor& pv = t.node_value(t.node_parents(self)[0]);
        std::vector<float>& dp = t.grad_buffer(t.node_parents(self)[0]);
        const double inv_n = 1.0 / static_cast<double>(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t idx = i * k + static_cast<std::size_t>(labels[i]) - 1;
            const double py = clamp_prob(pv.values[idx]);
            dp[idx] += static_cast<float>(g * inv_n / (1.0 - py));
        }
    };
    return tape.custom({probs.index}, std::move(out), std::move(backward));
}

Tape::ValueId cross_entropy_loss(Tape& tape, Tape::ValueId probs,
                                 const std::vector<int>& labels) {
    const Tensor& p = tape.value(probs);
    auto [batch, k] = check_probs(p, labels);

    double acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const double py = clamp_prob(p.at(i, static_cast<std::size_t>(labels[i]) - 1));
        acc -= std::log(py);
    }
    Tensor out(Shape{1}, {static_cast<float>(acc / static_cast<double>(batch))});

    auto backward = [labels, batch, k](Tape& t, std::uint32_t self) {
        const float g = t.node_grad(self)[0];
        const Tensor& pv = t.node_value(t.node_parents(self)[0]);
        std::vector<float>& dp = t.grad_buffer(t.node_parents(self)[0]);
        const double inv_n = 1.0 / static_cast<double>(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t idx = i * k + static_cast<std::size_t>(labels[i]) - 1;
            const double py = clamp_prob(pv.values[idx]);
            dp[idx] -= static_cast<float>(g * inv_n / py);
        }
    };
    return tape.custom({probs.index}, std::move(out), std::move(backward));
}

Tape::ValueId discriminator_loss(Tape& tape, Tape::ValueId scores_real,
                                 Tape::ValueId scores_fake) {
    const Tensor& real = tape.value(scores_real);
    const Tensor& fake = tape.value(scores_fake);
    check_scores(real, "discriminator_loss");
    check_scores(fake, "discriminator_loss");
    if (real.numel() != fake.numel()) {
        throw DimensionError("discriminator_loss: real batch " +
                             std::to_string(real.numel()) + " vs fake batch " +
                             std::to_string(fake.numel()));
    }
    const std::size_t n = real.numel();

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc -= std::log(clamp_prob(real.values[i]));
        acc -= std::log(1.0 - clamp_prob(fake.values[i]));
    }
    Tensor out(Shape{1}, {static_cast<float>(acc / static_cast<double>(n))});

    auto backward = [n](Tape& t, std::uint32_t self) {
        const float g = t.node_grad(self)[0];
        const auto& parents = t.node_parents(self);
        const Tensor& rv = t.node_value(parents[0]);
        const Tensor& fv = t.node_value(parents[1]);
        std::vector<float>& dr = t.grad_buffer(parents[0]);
        std::vector<float>& df = t.grad_buffer(parents[1]);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            dr[i] -= static_cast<float>(g * inv_n / clamp_prob(rv.values[i]));
            df[i] += static_cast<float>(g * inv_n / (1.0 - clamp_prob(fv.values[i])));
        }
    };
    return tape.custom({scores_real.index, scores_fake.index}, std::move(out),
                       std::move(backward));
}

Tape::ValueId generator_loss(Tape& tape, Tape::ValueId scores_fake) {
    const Tensor& fake = tape.value(scores_fake);
    check_scores(fake, "generator_loss");
    const std::size_t n = fake.numel();

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc -= std::log(clamp_prob(fake.values[i]));
    }
    Tensor out(Shape{1}, {static_cast<float>(acc / static_cast<double>(n))});

    auto backward = [n](Tape& t, std::uint32_t self) {
        const float g = t.node_grad(self)[0];
        const Tensor& fv = t.node_value(t.node_parents(self)[0]);
        std::vector<float>& df = t.grad_buffer(t.node_parents(self)[0]);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            df[i] -= static_cast<float>(g * inv_n / clamp_prob(fv.values[i]));
        }
    };
    return tape.custom({scores_fake.index}, std::move(out), std::move(backward));
}

int modulo_distance(int t, int t_tilde, int series_len) {
    if (series_len <= 0) {
        throw DimensionError("modulo_distance: series length must be positive");
    }
    const int fwd = ((t - t_tilde) % series_len + series_len) % series_len;
    const int bwd = ((t_tilde - t) % series_len + series_len) % series_len;
    return fwd < bwd ? fwd : bwd;
}

Tape::ValueId weighted_l1_loss(Tape& tape, Tape::ValueId deltas) {
    const Tensor& d = tape.value(deltas);
    if (d.rank() != 2) {
        throw DimensionError("weighted_l1_loss: deltas must be [B,T], got " +
                             nn::shape_str(d.shape));
    }
    const std::size_t batch = d.dim(0), t_len = d.dim(1);
    if (batch == 0 || t_len == 0) {
        throw DimensionError("weighted_l1_loss: empty delta batch");
    }

    // squared circular distance per (sample, t); the peak index comes from
    // the current values and is a constant for differentiation
    std::vector<float> weight(batch * t_len);
    double acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const float* row = d.values.data() + i * t_len;
        const std::size_t peak = models::peak_index(std::vector<float>(row, row + t_len));
        for (std::size_t t = 0; t < t_len; ++t) {
            const int dist = modulo_distance(static_cast<int>(t),
                                             static_cast<int>(peak),
                                             static_cast<int>(t_len));
            const float w = static_cast<float>(dist) * static_cast<float>(dist);
            weight[i * t_len + t] = w;
            acc += static_cast<double>(w) * std::fabs(row[t]);
        }
    }
    Tensor out(Shape{1}, {static_cast<float>(acc / static_cast<double>(batch))});

    auto backward = [batch, t_len, weight = std::move(weight)](Tape& t,
                                                               std::uint32_t self) {
        const float g = t.node_grad(self)[0];
        const Tensor& dv = t.node_value(t.node_parents(self)[0]);
        std::vector<float>& dd = t.grad_buffer(t.node_parents(self)[0]);
        const float inv_n = 1.0f / static_cast<float>(batch);
        for (std::size_t i = 0; i < batch * t_len; ++i) {
            const float v = dv.values[i];
            // subgradient 0 at v == 0
            const float sign = v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f);
            dd[i] += g * inv_n * weight[i] * sign;
        }
    };
    return tape.custom({deltas.index}, std::move(out), std::move(backward));
}

Tape::ValueId noiser_total_loss(Tape& tape, Tape::ValueId l_cl, Tape::ValueId l_gen,
                                Tape::ValueId l_wl1, const LossWeights& weights,
                                LossBreakdown* breakdown) {
    weights.validate();
    const double v_cl = tape.value(l_cl).values[0];
    const double v_gen = tape.value(l_gen).values[0];
    const double v_wl1 = tape.value(l_wl1).values[0];
    if (!std::isfinite(v_cl)) throw TrainingError("noiser loss: l_cl is not finite");
    if (!std::isfinite(v_gen)) throw TrainingError("noiser loss: l_gen is not finite");
    if (!std::isfinite(v_wl1)) throw TrainingError("noiser loss: l_wl1 is not finite");

    auto total = tape.weighted_sum({l_cl, l_gen, l_wl1},
                                   {1.0, weights.lambda_gen, weights.lambda_wl1});
    if (breakdown) {
        breakdown->l_cl = v_cl;
        breakdown->l_gen = v_gen;
        breakdown->l_wl1 = v_wl1;
        breakdown->total = tape.value(total).values[0];
    }
    return total;
}

}  // namespace tscf::losses
