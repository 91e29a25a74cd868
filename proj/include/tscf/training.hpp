#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "tscf/data.hpp"
#include "tscf/losses.hpp"
#include "tscf/models.hpp"

namespace tscf::training {

struct ClassifierStage {
    int epochs = 1000;
    std::size_t batch_size = 32;
    double lr = 1e-4;
    double weight_decay = 1e-4;
};

struct AdversarialStage {
    int epochs = 100;
    std::size_t batch_size = 128;
    double noiser_lr = 1e-4;
    double disc_lr = 1e-4;
    int d_steps_per_g_step = 1;
    std::size_t noiser_hidden = 128;
    double noiser_dropout = 0.5;
};

struct TrainConfig {
    ClassifierStage classifier;
    AdversarialStage adversarial;
    losses::LossWeights weights;
    std::uint64_t seed = 42;
    // macro (default) or frequency-weighted validation F1
    bool weighted_f1 = false;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    losses::LossBreakdown mean_losses;
    double val_f1 = 0.0;        // classifier stage
    double val_swap_rate = 0.0; // adversarial stage
};

// F1 averaged over the classes present in truth or prediction; `weighted`
// switches to support-weighted averaging.
double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                bool weighted = false);

struct ClassifierTrainResult {
    models::ClassifierModel model;  // snapshot at best validation F1
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_f1 = 0.0;
};

// Pretraining: shuffled minibatches, Adam with coupled weight decay, keeps
// the parameter snapshot of the epoch with the highest validation F1.
ClassifierTrainResult train_classifier(const data::Dataset& train,
                                       const data::Dataset& val,
                                       const models::ClassifierConfig& arch,
                                       const TrainConfig& cfg);

struct AdversarialTrainResult {
    models::NoiserModel noiser;
    models::DiscriminatorModel discriminator;
    std::vector<EpochStats> history;
    // one row per noiser step, for the training-log CSV
    std::vector<losses::LossBreakdown> step_log;
};

// Called with the number of completed epochs (0 = before training) after
// each epoch; used for probes and checkpoint-on-schedule hooks.
using EpochCallback =
    std::function<void(int epochs_done, models::NoiserModel&, models::DiscriminatorModel&)>;

// Adversarial stage. The classifier stays frozen (enforced by hash) and is
// always evaluated in inference mode. Per batch: discriminator step(s) on
// real vs x + noiser(x), then one noiser step against the frozen
// discriminator.
AdversarialTrainResult train_counterfactual(const models::ClassifierModel& classifier,
                                            const data::Dataset& train,
                                            const data::Dataset& val,
                                            const TrainConfig& cfg,
                                            const EpochCallback& on_epoch = nullptr);

// Eval-mode sweep: delta = noiser(x), x_cf = x + delta, labels from the
// classifier on both sides.
std::vector<models::CounterfactualPair> generate_counterfactuals(
    const models::ClassifierModel& classifier, const models::NoiserModel& noiser,
    const data::Dataset& samples);

// Predicted 1-based labels for a whole dataset (eval mode, batched).
std::vector<int> predict_labels(const models::ClassifierModel& classifier,
                                const data::Dataset& samples);

}  // namespace tscf::training
