#include "tscf/models.hpp"

#include <cmath>

#include "tscf/errors.hpp"

namespace tscf::models {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv1d: return "conv1d";
        case LayerKind::Dense: return "dense";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Dropout: return "dropout";
        case LayerKind::Activation: return "activation";
    }
    return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv1d") return LayerKind::Conv1d;
    if (name == "dense") return LayerKind::Dense;
    if (name == "batchnorm") return LayerKind::BatchNorm;
    if (name == "dropout") return LayerKind::Dropout;
    if (name == "activation") return LayerKind::Activation;
    throw ConfigError("unknown layer kind: " + name);
}

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::Conv1d:
            if (kernel % 2 == 0 || kernel == 0) {
                throw ConfigError("layer '" + name + "': conv kernel must be odd");
            }
            if (in_dim == 0 || out_dim == 0) {
                throw ConfigError("layer '" + name + "': conv channels must be positive");
            }
            break;
        case LayerKind::Dense:
            if (in_dim == 0 || out_dim == 0) {
                throw ConfigError("layer '" + name + "': dense dims must be positive");
            }
            break;
        case LayerKind::BatchNorm:
            if (in_dim == 0) {
                throw ConfigError("layer '" + name + "': batchnorm needs feature count");
            }
            break;
        case LayerKind::Dropout:
            if (rate < 0.0 || rate >= 1.0) {
                throw ConfigError("layer '" + name + "': dropout rate must be in [0,1)");
            }
            break;
        case LayerKind::Activation:
            break;
    }
}

SequentialModel::ForwardRecord SequentialModel::forward(nn::Tape& tape,
                                                        nn::Tape::ValueId input,
                                                        Mode mode, Rng* rng) {
    ForwardRecord rec;
    auto param_leaf = [&](const std::string& name) {
        nn::Tape::ValueId id = tape.leaf(params.at(name));
        rec.param_leaves.emplace_back(name, id);
        return id;
    };

    nn::Tape::ValueId x = input;
    for (const LayerSpec& layer : layers) {
        switch (layer.kind) {
            case LayerKind::Conv1d:
                x = tape.conv1d(x, param_leaf(layer.name + ".weight"),
                                param_leaf(layer.name + ".bias"));
                break;
            case LayerKind::Dense: {
                const Shape cur = tape.value(x).shape;
                if (cur.size() == 3) {  // flatten [B,C,T] -> [B,C*T]
                    x = tape.reshape(x, Shape{cur[0], cur[1] * cur[2]});
                }
                x = tape.dense(x, param_leaf(layer.name + ".weight"),
                               param_leaf(layer.name + ".bias"));
                break;
            }
            case LayerKind::BatchNorm:
                x = tape.batchnorm(x, param_leaf(layer.name + ".gamma"),
                                   param_leaf(layer.name + ".beta"),
                                   buffers.at(layer.name + ".running_mean"),
                                   buffers.at(layer.name + ".running_var"), mode);
                break;
            case LayerKind::Dropout: {
                if (mode == Mode::Train && rng == nullptr) {
                    throw StateError("layer '" + layer.name +
                                     "': train-mode dropout needs an rng");
                }
                static Rng unused(0);
                x = tape.dropout(x, layer.rate, mode, rng ? *rng : unused);
                break;
            }
            case LayerKind::Activation:
                x = tape.activation(x, layer.act);
                break;
        }
    }
    rec.output = x;
    return rec;
}

Tensor SequentialModel::run(const Tensor& input, Mode mode, Rng* rng) {
    nn::Tape tape;
    auto rec = forward(tape, tape.leaf(input), mode, rng);
    return tape.value(rec.output);
}

void init_params(SequentialModel& model, Rng& rng) {
    for (const LayerSpec& layer : model.layers) {
        layer.validate();
        switch (layer.kind) {
            case LayerKind::Conv1d: {
                const std::size_t fan_in = layer.in_dim * layer.kernel;
                const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
                Tensor w = Tensor::zeros({layer.out_dim, layer.in_dim, layer.kernel});
                for (float& v : w.values) {
                    v = static_cast<float>(rng.uniform(-limit, limit));
                }
                model.params.add(layer.name + ".weight", std::move(w));
                model.params.add(layer.name + ".bias", Tensor::zeros({layer.out_dim}));
                break;
            }
            case LayerKind::Dense: {
                Tensor w = Tensor::zeros({layer.out_dim, layer.in_dim});
                if (!layer.zero_init) {
                    const double limit =
                        std::sqrt(6.0 / static_cast<double>(layer.in_dim));
                    for (float& v : w.values) {
                        v = static_cast<float>(rng.uniform(-limit, limit));
                    }
                }
                model.params.add(layer.name + ".weight", std::move(w));
                model.params.add(layer.name + ".bias", Tensor::zeros({layer.out_dim}));
                break;
            }
            case LayerKind::BatchNorm:
                model.params.add(layer.name + ".gamma",
                                 Tensor::full({layer.in_dim}, 1.0f));
                model.params.add(layer.name + ".beta", Tensor::zeros({layer.in_dim}));
                model.buffers.add(layer.name + ".running_mean",
                                  Tensor::zeros({layer.in_dim}));
                model.buffers.add(layer.name + ".running_var",
                                  Tensor::full({layer.in_dim}, 1.0f));
                break;
            case LayerKind::Dropout:
            case LayerKind::Activation:
                break;
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

// conv blocks shared by classifier and discriminator
std::vector<LayerSpec> tempcnn_body(const ClassifierConfig& cfg) {
    std::vector<LayerSpec> layers;
    std::size_t in_ch = 1;
    for (int b = 0; b < cfg.conv_blocks; ++b) {
        const std::string idx = std::to_string(b + 1);
        layers.push_back({LayerKind::Conv1d, "conv" + idx, in_ch, cfg.conv_channels,
                          cfg.kernel});
        layers.push_back({LayerKind::BatchNorm, "bn" + idx, cfg.conv_channels});
        LayerSpec relu{LayerKind::Activation, "relu" + idx};
        relu.act = Act::Relu;
        layers.push_back(relu);
        LayerSpec drop{LayerKind::Dropout, "drop" + idx};
        drop.rate = cfg.dropout;
        layers.push_back(drop);
        in_ch = cfg.conv_channels;
    }
    return layers;
}

std::vector<LayerSpec> dense_head(const ClassifierConfig& cfg, std::size_t out_units,
                                  Act out_act) {
    std::vector<LayerSpec> layers;
    const std::size_t flat = cfg.conv_channels * cfg.series_len;
    layers.push_back({LayerKind::Dense, "fc1", flat, cfg.dense_units});
    LayerSpec relu{LayerKind::Activation, "fc1_relu"};
    relu.act = Act::Relu;
    layers.push_back(relu);
    LayerSpec drop{LayerKind::Dropout, "fc1_drop"};
    drop.rate = cfg.dropout;
    layers.push_back(drop);
    layers.push_back({LayerKind::Dense, "head", cfg.dense_units, out_units});
    LayerSpec act{LayerKind::Activation, "head_act"};
    act.act = out_act;
    layers.push_back(act);
    return layers;
}

}  // namespace

ClassifierModel make_classifier(const ClassifierConfig& cfg, Rng& rng) {
    ClassifierModel model;
    model.cfg = cfg;
    model.net.layers = tempcnn_body(cfg);
    auto head = dense_head(cfg, static_cast<std::size_t>(cfg.classes), Act::Softmax);
    model.net.layers.insert(model.net.layers.end(), head.begin(), head.end());
    init_params(model.net, rng);
    return model;
}

DiscriminatorModel make_discriminator(const ClassifierConfig& cfg, Rng& rng) {
    DiscriminatorModel model;
    model.cfg = cfg;
    model.net.layers = tempcnn_body(cfg);
    auto head = dense_head(cfg, 1, Act::Sigmoid);
    model.net.layers.insert(model.net.layers.end(), head.begin(), head.end());
    init_params(model.net, rng);
    return model;
}

NoiserModel make_noiser(const NoiserConfig& cfg, Rng& rng) {
    NoiserModel model;
    model.cfg = cfg;
    auto& layers = model.net.layers;
    std::size_t in_dim = cfg.series_len;
    for (int h = 1; h <= 2; ++h) {
        const std::string idx = std::to_string(h);
        layers.push_back({LayerKind::Dense, "fc" + idx, in_dim, cfg.hidden_units});
        layers.push_back({LayerKind::BatchNorm, "bn" + idx, cfg.hidden_units});
        LayerSpec tanh_spec{LayerKind::Activation, "tanh" + idx};
        tanh_spec.act = Act::Tanh;
        layers.push_back(tanh_spec);
        LayerSpec drop{LayerKind::Dropout, "drop" + idx};
        drop.rate = cfg.dropout;
        layers.push_back(drop);
        in_dim = cfg.hidden_units;
    }
    LayerSpec out{LayerKind::Dense, "out", cfg.hidden_units, cfg.series_len};
    out.zero_init = true;
    layers.push_back(out);
    LayerSpec out_act{LayerKind::Activation, "out_tanh"};
    out_act.act = Act::Tanh;
    layers.push_back(out_act);
    init_params(model.net, rng);
    return model;
}

// ---------------------------------------------------------------------------

namespace {

void check_series_len(const Tensor& batch, std::size_t t_len, const char* who) {
    if (batch.rank() != 2 || batch.dim(1) != t_len) {
        throw DimensionError(std::string(who) + ": expected batch [B," +
                             std::to_string(t_len) + "], got " + nn::shape_str(batch.shape));
    }
}

}  // namespace

nn::Tape::ValueId classifier_forward(nn::Tape& tape, ClassifierModel& model,
                                     nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                     SequentialModel::ForwardRecord* record) {
    check_series_len(tape.value(batch), model.cfg.series_len, "classifier");
    // note: tape.value references go stale on the next push; copy dims first
    const std::size_t rows = tape.value(batch).dim(0);
    auto x = tape.reshape(batch, Shape{rows, 1, model.cfg.series_len});
    auto rec = model.net.forward(tape, x, mode, rng);
    if (record) *record = rec;
    return rec.output;
}

nn::Tape::ValueId noiser_forward(nn::Tape& tape, NoiserModel& model,
                                 nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                 SequentialModel::ForwardRecord* record) {
    check_series_len(tape.value(batch), model.cfg.series_len, "noiser");
    auto rec = model.net.forward(tape, batch, mode, rng);
    if (record) *record = rec;
    return rec.output;
}

nn::Tape::ValueId discriminator_forward(nn::Tape& tape, DiscriminatorModel& model,
                                        nn::Tape::ValueId batch, Mode mode, Rng* rng,
                                        SequentialModel::ForwardRecord* record) {
    check_series_len(tape.value(batch), model.cfg.series_len, "discriminator");
    const std::size_t rows = tape.value(batch).dim(0);
    auto x = tape.reshape(batch, Shape{rows, 1, model.cfg.series_len});
    auto rec = model.net.forward(tape, x, mode, rng);
    // [B,1] -> [B]
    rec.output = tape.reshape(rec.output, Shape{rows});
    if (record) *record = rec;
    return rec.output;
}

Tensor classifier_forward(ClassifierModel& model, const Tensor& batch, Mode mode,
                          Rng* rng) {
    nn::Tape tape;
    return tape.value(classifier_forward(tape, model, tape.leaf(batch), mode, rng));
}

Tensor noiser_forward(NoiserModel& model, const Tensor& batch, Mode mode, Rng* rng) {
    nn::Tape tape;
    return tape.value(noiser_forward(tape, model, tape.leaf(batch), mode, rng));
}

Tensor discriminator_forward(DiscriminatorModel& model, const Tensor& batch,
                             Mode mode, Rng* rng) {
    nn::Tape tape;
    return tape.value(discriminator_forward(tape, model, tape.leaf(batch), mode, rng));
}

std::vector<int> argmax_rows(const Tensor& probs) {
    if (probs.rank() != 2) {
        throw DimensionError("argmax_rows: expected [B,K], got " + nn::shape_str(probs.shape));
    }
    const std::size_t rows = probs.dim(0), width = probs.dim(1);
    std::vector<int> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = probs.values.data() + r * width;
        std::size_t best = 0;
        for (std::size_t i = 1; i < width; ++i) {
            if (row[i] > row[best]) best = i;
        }
        out[r] = static_cast<int>(best) + 1;  // class ids are 1-based
    }
    return out;
}

std::size_t peak_index(const std::vector<float>& delta) {
    std::size_t best = 0;
    float best_abs = delta.empty() ? 0.0f : std::fabs(delta[0]);
    for (std::size_t t = 1; t < delta.size(); ++t) {
        const float a = std::fabs(delta[t]);
        if (a > best_abs) {
            best = t;
            best_abs = a;
        }
    }
    return best;
}

CounterfactualPair compose_counterfactual(const std::vector<float>& x,
                                          const std::vector<float>& delta) {
    if (x.size() != delta.size()) {
        throw DimensionError("compose_counterfactual: series length " +
                             std::to_string(x.size()) + " does not match delta length " +
                             std::to_string(delta.size()));
    }
    CounterfactualPair pair;
    pair.x = x;
    pair.delta = delta;
    pair.x_cf.resize(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) pair.x_cf[t] = x[t] + delta[t];
    pair.t_tilde = peak_index(delta);
    return pair;
}

}  // namespace tscf::models
