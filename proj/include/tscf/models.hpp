#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscf/optim.hpp"
#include "tscf/tape.hpp"

namespace tscf::models {

using nn::Act;
using nn::Mode;
using nn::Shape;
using nn::Tensor;

enum class LayerKind { Conv1d, Dense, BatchNorm, Dropout, Activation };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

// One stage of a feed-forward stack. `name` prefixes the parameter names
// ("conv1.weight", "bn2.gamma", ...).
struct LayerSpec {
    LayerKind kind;
    std::string name;
    std::size_t in_dim = 0;   // conv: C_in, dense: N, batchnorm: features
    std::size_t out_dim = 0;  // conv: C_out, dense: M
    std::size_t kernel = 0;   // conv only, odd
    double rate = 0.0;        // dropout only, in [0,1)
    Act act = Act::Relu;      // activation only
    bool zero_init = false;   // dense only

    void validate() const;
    bool operator==(const LayerSpec&) const = default;
};

// Layer stack plus its parameters and non-trained buffers (batchnorm
// running statistics).
struct SequentialModel {
    std::vector<LayerSpec> layers;
    nn::ParameterSet params;
    nn::TensorMap buffers;

    // Records the whole stack on `tape`, returning both the output id and the
    // leaf ids of every parameter (for gradient collection after backward).
    struct ForwardRecord {
        nn::Tape::ValueId output;
        std::vector<std::pair<std::string, nn::Tape::ValueId>> param_leaves;
    };
    ForwardRecord forward(nn::Tape& tape, nn::Tape::ValueId input, Mode mode,
                          Rng* rng);

    // Convenience forward without gradient collection.
    Tensor run(const Tensor& input, Mode mode, Rng* rng = nullptr);
};

// Allocates parameters/buffers for every layer. Weights use uniform fan-in
// (He-style) scaling unless the layer is marked zero_init.
void init_params(SequentialModel& model, Rng& rng);

// ---------------------------------------------------------------------------

// Temporal-CNN classifier: `blocks` conv stages (conv -> batchnorm -> relu ->
// dropout), then dense -> relu -> dropout -> dense(K) -> softmax.
struct ClassifierConfig {
    std::size_t series_len = 24;  // T
    int classes = 8;              // K
    int conv_blocks = 3;
    std::size_t conv_channels = 64;
    std::size_t kernel = 5;
    std::size_t dense_units = 256;
    double dropout = 0.5;

    bool operator==(const ClassifierConfig&) const = default;
};

struct ClassifierModel {
    ClassifierConfig cfg;
    SequentialModel net;
};

// MLP noiser: two hidden dense stages (dense -> batchnorm -> tanh -> dropout)
// and a tanh output of width T. Output weights start at zero so training
// begins from delta ~= 0.
struct NoiserConfig {
    std::size_t series_len = 24;
    std::size_t hidden_units = 128;
    double dropout = 0.5;

    bool operator==(const NoiserConfig&) const = default;
};

struct NoiserModel {
    NoiserConfig cfg;
    SequentialModel net;
};

// Classifier body with a single sigmoid output neuron.
struct DiscriminatorModel {
    ClassifierConfig cfg;  // body hyperparameters, classes ignored
    SequentialModel net;
};

ClassifierModel make_classifier(const ClassifierConfig& cfg, Rng& rng);
NoiserModel make_noiser(const NoiserConfig& cfg, Rng& rng);
DiscriminatorModel make_discriminator(const ClassifierConfig& cfg, Rng& rng);

// Batch forwards. `batch` is [B,T]; classifier returns [B,K] probability
// rows, noiser returns [B,T] perturbations in (-1,1), discriminator returns
// [B] scores in (0,1).
nn::Tape::ValueId classifier_forward(nn::Tape& tape, ClassifierModel& model,
                                     nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                     SequentialModel::ForwardRecord* record = nullptr);
nn::Tape::ValueId noiser_forward(nn::Tape& tape, NoiserModel& model,
                                 nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                 SequentialModel::ForwardRecord* record = nullptr);
nn::Tape::ValueId discriminator_forward(nn::Tape& tape, DiscriminatorModel& model,
                                        nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                        SequentialModel::ForwardRecord* record = nullptr);

Tensor classifier_forward(ClassifierModel& model, const Tensor& batch, Mode mode,
                          Rng* rng = nullptr);
Tensor noiser_forward(NoiserModel& model, const Tensor& batch, Mode mode,
                      Rng* rng = nullptr);
Tensor discriminator_forward(DiscriminatorModel& model, const Tensor& batch,
                             Mode mode, Rng* rng = nullptr);

// Predicted class ids (1-based) from probability rows.
std::vector<int> argmax_rows(const Tensor& probs);

// ---------------------------------------------------------------------------

// One sample with its generated perturbation. Labels are 1-based class ids;
// y_true/sample_id are carried through for evaluation bookkeeping.
struct CounterfactualPair {
    std::int64_t sample_id = 0;
    std::vector<float> x;
    std::vector<float> delta;
    std::vector<float> x_cf;
    int y_true = 0;
    int y_src = 0;
    int y_cf = 0;
    std::size_t t_tilde = 0;
    bool success = false;  // y_cf != y_src
};

// Index of the largest |delta_t|, lowest index on ties.
std::size_t peak_index(const std::vector<float>& delta);

// x_cf = x + delta, elementwise, no clipping. Prediction labels are left to
// the caller.
CounterfactualPair compose_counterfactual(const std::vector<float>& x,
                                          const std::vector<float>& delta);

}  // namespace tscf::models
