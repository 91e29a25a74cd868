#pragma once

#include <vector>

#include "tscf/tape.hpp"

namespace tscf::losses {

// Probabilities/scores are clamped into [kLogClamp, 1 - kLogClamp] before any
// log; the clamp is straight-through in backward so saturated samples keep a
// usable gradient.
constexpr double kLogClamp = 1e-7;

struct LossWeights {
    double lambda_gen = 0.5;
    double lambda_wl1 = 0.05;

    void validate() const;
};

struct LossBreakdown {
    double l_cl = 0.0;
    double l_gen = 0.0;
    double l_wl1 = 0.0;
    double l_dsc = 0.0;
    double total = 0.0;  // l_cl + lambda_gen*l_gen + lambda_wl1*l_wl1
};

// -(1/n) sum log(1 - p(y_i)): pushes the predicted probability of the
// original class down without prescribing a target class. `probs` is [B,K]
// rows of valid distributions; labels are 1-based class ids.
nn::Tape::ValueId class_swap_loss(nn::Tape& tape, nn::Tape::ValueId probs,
                                  const std::vector<int>& labels);

// -(1/n) sum log p(y_i), used for classifier pretraining.
nn::Tape::ValueId cross_entropy_loss(nn::Tape& tape, nn::Tape::ValueId probs,
                                     const std::vector<int>& labels);

// -(1/n) sum [log D(x_i) + log(1 - D(x_cf_i))], minimized by the discriminator.
nn::Tape::ValueId discriminator_loss(nn::Tape& tape, nn::Tape::ValueId scores_real,
                                     nn::Tape::ValueId scores_fake);

// -(1/n) sum log D(x_cf_i), the non-saturating generator objective.
nn::Tape::ValueId generator_loss(nn::Tape& tape, nn::Tape::ValueId scores_fake);

// Circular distance on a ring of length `series_len`.
int modulo_distance(int t, int t_tilde, int series_len);

// (1/n) sum_i sum_t d(t, t_peak_i)^2 |delta_it| with t_peak_i the index of
// the largest |delta| (lowest index on ties), recomputed from the current
// values and treated as constant in the gradient. `deltas` is [B,T].
nn::Tape::ValueId weighted_l1_loss(nn::Tape& tape, nn::Tape::ValueId deltas);

// total = l_cl + lambda_gen*l_gen + lambda_wl1*l_wl1. Throws TrainingError
// naming the component if any input is non-finite. `breakdown`, when given,
// receives the component values (l_dsc must be filled by the caller).
nn::Tape::ValueId noiser_total_loss(nn::Tape& tape, nn::Tape::ValueId l_cl,
                                    nn::Tape::ValueId l_gen, nn::Tape::ValueId l_wl1,
                                    const LossWeights& weights,
                                    LossBreakdown* breakdown = nullptr);

}  // namespace tscf::losses
