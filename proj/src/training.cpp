#include "tscf/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tscf/errors.hpp"

namespace tscf::training {

using losses::LossBreakdown;
using models::ClassifierModel;
using models::CounterfactualPair;
using models::DiscriminatorModel;
using models::NoiserModel;
using nn::GradientMap;
using nn::Mode;
using nn::Tape;
using nn::Tensor;

void TrainConfig::validate() const {
    if (classifier.epochs < 0 || adversarial.epochs < 0) {
        throw ConfigError("epoch counts must be >= 0");
    }
    if (classifier.batch_size == 0 || adversarial.batch_size == 0) {
        throw ConfigError("batch sizes must be positive");
    }
    if (classifier.lr <= 0.0 || adversarial.noiser_lr <= 0.0 ||
        adversarial.disc_lr <= 0.0) {
        throw ConfigError("learning rates must be positive");
    }
    if (adversarial.d_steps_per_g_step < 1) {
        throw ConfigError("d_steps_per_g_step must be >= 1");
    }
    weights.validate();
}

// ---------------------------------------------------------------------------
// metrics

double f1_score(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                bool weighted) {
    if (y_true.size() != y_pred.size()) {
        throw DimensionError("f1: label vectors differ in length");
    }
    if (y_true.empty()) throw DataError("f1: empty label vectors");

    std::map<int, std::array<std::size_t, 3>> stats;  // class -> {tp, fp, fn}
    std::map<int, std::size_t> support;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        support[y_true[i]]++;
        stats.try_emplace(y_true[i]);
        stats.try_emplace(y_pred[i]);
        if (y_true[i] == y_pred[i]) {
            stats[y_true[i]][0]++;
        } else {
            stats[y_pred[i]][1]++;
            stats[y_true[i]][2]++;
        }
    }
    double sum = 0.0, weight_sum = 0.0;
    for (const auto& [cls, s] : stats) {
        const double denom = 2.0 * static_cast<double>(s[0]) +
                             static_cast<double>(s[1]) + static_cast<double>(s[2]);
        const double f1 = denom > 0.0 ? 2.0 * static_cast<double>(s[0]) / denom : 0.0;
        const double w = weighted ? static_cast<double>(support[cls]) : 1.0;
        sum += w * f1;
        weight_sum += w;
    }
    return weight_sum > 0.0 ? sum / weight_sum : 0.0;
}

// ---------------------------------------------------------------------------
// helpers

namespace {

Tensor gather_batch(const data::Dataset& ds, const std::vector<std::size_t>& idx,
                    std::size_t lo, std::size_t hi, std::vector<int>* labels) {
    const std::size_t n = hi - lo;
    Tensor batch = Tensor::zeros({n, ds.series_len});
    if (labels) labels->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const data::Sample& s = ds.samples[idx[lo + i]];
        std::copy(s.series.begin(), s.series.end(),
                  batch.values.begin() + static_cast<std::ptrdiff_t>(i * ds.series_len));
        if (labels) (*labels)[i] = s.label;
    }
    return batch;
}

void accumulate_grads(const Tape& tape,
                      const models::SequentialModel::ForwardRecord& rec,
                      GradientMap& grads) {
    for (const auto& [name, leaf] : rec.param_leaves) {
        const std::vector<float>& g = tape.grad(leaf);
        auto it = grads.find(name);
        if (it == grads.end()) {
            grads.emplace(name, g);
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
        }
    }
}

std::vector<int> predict_batched(ClassifierModel& model, const data::Dataset& ds) {
    std::vector<int> out;
    out.reserve(ds.size());
    const std::size_t chunk = 512;
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t lo = 0; lo < ds.size(); lo += chunk) {
        const std::size_t hi = std::min(ds.size(), lo + chunk);
        Tensor batch = gather_batch(ds, idx, lo, hi, nullptr);
        Tensor probs = models::classifier_forward(model, batch, Mode::Eval);
        for (int label : models::argmax_rows(probs)) out.push_back(label);
    }
    return out;
}

std::uint64_t model_hash(const models::SequentialModel& net) {
    std::uint64_t h = net.params.content_hash();
    return h ^ (net.buffers.content_hash() * 0x9e3779b97f4a7c15ull);
}

}  // namespace

// ---------------------------------------------------------------------------
// classifier pretraining

ClassifierTrainResult train_classifier(const data::Dataset& train,
                                       const data::Dataset& val,
                                       const models::ClassifierConfig& arch,
                                       const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw DataError("train_classifier: empty training split");
    if (val.empty()) throw DataError("train_classifier: empty validation split");

    Rng root(cfg.seed);
    Rng init_rng = root.fork("classifier-init");
    Rng train_rng = root.fork("classifier-train");

    ClassifierModel model = models::make_classifier(arch, init_rng);
    nn::AdamConfig adam;
    adam.lr = cfg.classifier.lr;
    adam.weight_decay = cfg.classifier.weight_decay;

    ClassifierTrainResult result{model, {}, 0, -1.0};
    const std::vector<int> val_labels = val.labels();

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 1; epoch <= cfg.classifier.epochs; ++epoch) {
        train_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t lo = 0; lo < order.size();
             lo += cfg.classifier.batch_size, ++steps) {
            const std::size_t hi = std::min(order.size(), lo + cfg.classifier.batch_size);
            if (hi - lo < 2) continue;  // batchnorm needs at least 2 samples
            std::vector<int> labels;
            Tensor batch = gather_batch(train, order, lo, hi, &labels);

            Tape tape;
            models::SequentialModel::ForwardRecord rec;
            auto probs = models::classifier_forward(tape, model, tape.leaf(batch),
                                                    Mode::Train, &train_rng, &rec);
            auto loss = losses::cross_entropy_loss(tape, probs, labels);
            const double loss_value = tape.value(loss).values[0];
            if (!std::isfinite(loss_value)) {
                throw TrainingError("classifier training diverged at epoch " +
                                    std::to_string(epoch) + " step " +
                                    std::to_string(steps));
            }
            loss_sum += loss_value;
            tape.backward(loss);
            GradientMap grads;
            accumulate_grads(tape, rec, grads);
            nn::adam_step(model.net.params, grads, adam);
        }

        const std::vector<int> val_pred = predict_batched(model, val);
        const double f1 = f1_score(val_labels, val_pred, cfg.weighted_f1);

        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_losses.l_cl = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
        stats.mean_losses.total = stats.mean_losses.l_cl;
        stats.val_f1 = f1;
        result.history.push_back(stats);

        if (f1 > result.best_f1) {
            result.best_f1 = f1;
            result.best_epoch = epoch;
            result.model = model;  // parameter snapshot
        }
    }
    if (cfg.classifier.epochs == 0) {
        result.model = model;
        result.best_epoch = 0;
        result.best_f1 = 0.0;
    }
    return result;
}

// ---------------------------------------------------------------------------
// adversarial stage

AdversarialTrainResult train_counterfactual(const ClassifierModel& classifier,
                                            const data::Dataset& train,
                                            const data::Dataset& val,
                                            const TrainConfig& cfg,
                                            const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.empty()) throw DataError("train_counterfactual: empty training split");
    if (classifier.cfg.series_len != train.series_len) {
        throw DimensionError("train_counterfactual: classifier expects T=" +
                             std::to_string(classifier.cfg.series_len) +
                             ", dataset has T=" + std::to_string(train.series_len));
    }

    const std::uint64_t frozen_hash = model_hash(classifier.net);
    // eval-mode forwards never touch parameters or buffers; the hash check
    // below enforces it
    ClassifierModel& frozen = const_cast<ClassifierModel&>(classifier);

    Rng root(cfg.seed);
    Rng init_rng = root.fork("adversarial-init");
    Rng train_rng = root.fork("adversarial-train");

    models::NoiserConfig noiser_cfg;
    noiser_cfg.series_len = train.series_len;
    noiser_cfg.hidden_units = cfg.adversarial.noiser_hidden;
    noiser_cfg.dropout = cfg.adversarial.noiser_dropout;
    AdversarialTrainResult result{models::make_noiser(noiser_cfg, init_rng),
                                  models::make_discriminator(classifier.cfg, init_rng),
                                  {},
                                  {}};
    NoiserModel& noiser = result.noiser;
    DiscriminatorModel& disc = result.discriminator;

    nn::AdamConfig noiser_adam;
    noiser_adam.lr = cfg.adversarial.noiser_lr;
    nn::AdamConfig disc_adam;
    disc_adam.lr = cfg.adversarial.disc_lr;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto val_swap_rate = [&]() -> double {
        if (val.empty()) return 0.0;
        auto pairs = generate_counterfactuals(frozen, noiser, val);
        std::size_t swapped = 0;
        for (const auto& p : pairs) swapped += p.success ? 1 : 0;
        return static_cast<double>(swapped) / static_cast<double>(pairs.size());
    };

    if (on_epoch) on_epoch(0, noiser, disc);

    for (int epoch = 1; epoch <= cfg.adversarial.epochs; ++epoch) {
        train_rng.shuffle(order);
        LossBreakdown epoch_sum;
        std::size_t steps = 0;
        for (std::size_t lo = 0; lo < order.size();
             lo += cfg.adversarial.batch_size, ++steps) {
            const std::size_t hi = std::min(order.size(), lo + cfg.adversarial.batch_size);
            if (hi - lo < 2) continue;
            std::vector<int> labels;
            Tensor x_real = gather_batch(train, order, lo, hi, &labels);

            // --- discriminator step(s): real x vs x + noiser(x) ------------
            double dsc_value = 0.0;
            for (int d = 0; d < cfg.adversarial.d_steps_per_g_step; ++d) {
                // perturbations are data here; eval mode matches the
                // distribution seen at generation time
                Tensor delta = models::noiser_forward(noiser, x_real, Mode::Eval);
                Tensor x_cf = x_real;
                for (std::size_t i = 0; i < x_cf.numel(); ++i) {
                    x_cf.values[i] += delta.values[i];
                }
                Tape tape;
                models::SequentialModel::ForwardRecord rec_real, rec_fake;
                auto s_real = models::discriminator_forward(
                    tape, disc, tape.leaf(x_real), Mode::Train, &train_rng, &rec_real);
                auto s_fake = models::discriminator_forward(
                    tape, disc, tape.leaf(x_cf), Mode::Train, &train_rng, &rec_fake);
                auto l_dsc = losses::discriminator_loss(tape, s_real, s_fake);
                dsc_value = tape.value(l_dsc).values[0];
                if (!std::isfinite(dsc_value)) {
                    throw TrainingError("discriminator loss diverged at epoch " +
                                        std::to_string(epoch) + " step " +
                                        std::to_string(steps));
                }
                tape.backward(l_dsc);
                GradientMap grads;
                accumulate_grads(tape, rec_real, grads);
                accumulate_grads(tape, rec_fake, grads);
                nn::adam_step(disc.net.params, grads, disc_adam);
            }

            // --- noiser step against the frozen discriminator --------------
            Tape tape;
            models::SequentialModel::ForwardRecord rec_noiser;
            auto x_id = tape.leaf(x_real);
            auto delta_id = models::noiser_forward(tape, noiser, x_id, Mode::Train,
                                                   &train_rng, &rec_noiser);
            auto x_cf_id = tape.add(x_id, delta_id);
            auto probs = models::classifier_forward(tape, frozen, x_cf_id, Mode::Eval,
                                                    nullptr);
            auto l_cl = losses::class_swap_loss(tape, probs, labels);
            auto s_fake = models::discriminator_forward(tape, disc, x_cf_id, Mode::Eval,
                                                        nullptr);
            auto l_gen = losses::generator_loss(tape, s_fake);
            auto l_wl1 = losses::weighted_l1_loss(tape, delta_id);
            LossBreakdown breakdown;
            nn::Tape::ValueId total;
            try {
                total = losses::noiser_total_loss(tape, l_cl, l_gen, l_wl1, cfg.weights,
                                                  &breakdown);
            } catch (const TrainingError& e) {
                throw TrainingError(std::string(e.what()) + " at epoch " +
                                    std::to_string(epoch) + " step " +
                                    std::to_string(steps));
            }
            breakdown.l_dsc = dsc_value;
            tape.backward(total);
            GradientMap grads;
            accumulate_grads(tape, rec_noiser, grads);
            nn::adam_step(noiser.net.params, grads, noiser_adam);

            result.step_log.push_back(breakdown);
            epoch_sum.l_cl += breakdown.l_cl;
            epoch_sum.l_gen += breakdown.l_gen;
            epoch_sum.l_wl1 += breakdown.l_wl1;
            epoch_sum.l_dsc += breakdown.l_dsc;
            epoch_sum.total += breakdown.total;
        }

        EpochStats stats;
        stats.epoch = epoch;
        if (steps > 0) {
            const double inv = 1.0 / static_cast<double>(steps);
            stats.mean_losses = {epoch_sum.l_cl * inv, epoch_sum.l_gen * inv,
                                 epoch_sum.l_wl1 * inv, epoch_sum.l_dsc * inv,
                                 epoch_sum.total * inv};
        }
        stats.val_swap_rate = val_swap_rate();
        result.history.push_back(stats);
        if (on_epoch) on_epoch(epoch, noiser, disc);
    }

    if (model_hash(classifier.net) != frozen_hash) {
        throw TrainingError(
            "classifier was mutated during adversarial training (frozen-model "
            "contract violated)");
    }
    return result;
}

// ---------------------------------------------------------------------------
// generation

std::vector<CounterfactualPair> generate_counterfactuals(
    const ClassifierModel& classifier, const NoiserModel& noiser,
    const data::Dataset& samples) {
    ClassifierModel& cls = const_cast<ClassifierModel&>(classifier);
    NoiserModel& noi = const_cast<NoiserModel&>(noiser);
    if (classifier.cfg.series_len != samples.series_len) {
        throw DimensionError("generate: classifier expects T=" +
                             std::to_string(classifier.cfg.series_len) +
                             ", dataset has T=" + std::to_string(samples.series_len));
    }

    std::vector<CounterfactualPair> pairs;
    pairs.reserve(samples.size());
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t chunk = 512;
    for (std::size_t lo = 0; lo < samples.size(); lo += chunk) {
        const std::size_t hi = std::min(samples.size(), lo + chunk);
        Tensor batch = gather_batch(samples, idx, lo, hi, nullptr);
        Tensor delta = models::noiser_forward(noi, batch, Mode::Eval);
        Tensor x_cf = batch;
        for (std::size_t i = 0; i < x_cf.numel(); ++i) x_cf.values[i] += delta.values[i];
        const auto y_src = models::argmax_rows(
            models::classifier_forward(cls, batch, Mode::Eval));
        const auto y_cf = models::argmax_rows(
            models::classifier_forward(cls, x_cf, Mode::Eval));

        const std::size_t t_len = samples.series_len;
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t r = i - lo;
            const float* drow = delta.values.data() + r * t_len;
            CounterfactualPair pair = models::compose_counterfactual(
                samples.samples[i].series, std::vector<float>(drow, drow + t_len));
            pair.sample_id = samples.samples[i].id;
            pair.y_true = samples.samples[i].label;
            pair.y_src = y_src[r];
            pair.y_cf = y_cf[r];
            pair.success = pair.y_cf != pair.y_src;
            pairs.push_back(std::move(pair));
        }
    }
    return pairs;
}

std::vector<int> predict_labels(const ClassifierModel& classifier,
                                const data::Dataset& samples) {
    return predict_batched(const_cast<ClassifierModel&>(classifier), samples);
}

}  // namespace tscf::training
