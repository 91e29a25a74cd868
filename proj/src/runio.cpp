#include "tscf/runio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "tscf/errors.hpp"
#include "tscf/hash.hpp"
#include "tscf/persistence.hpp"

namespace tscf::runio {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config: field '") + key +
                              "' has the wrong type");
        }
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (key == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("config: unknown field '" + key + "' in " + where);
        }
    }
}

}  // namespace

RunConfig RunConfig::from_json(const json& input) {
    const json& j = input.contains("config") && input.contains("command")
                        ? input.at("config")
                        : input;
    if (!j.is_object()) throw ConfigError("config: document must be a JSON object");
    reject_unknown(j,
                   {"seed", "paths", "split", "arch", "classifier", "adversarial",
                    "loss_weights", "synth", "eval"},
                   "top level");

    RunConfig cfg;
    read_field(j, "seed", cfg.seed);

    if (j.contains("paths")) {
        const json& p = j.at("paths");
        reject_unknown(p, {"data", "out", "classifier", "noiser", "discriminator"},
                       "paths");
        read_field(p, "data", cfg.paths.data);
        read_field(p, "out", cfg.paths.out);
        read_field(p, "classifier", cfg.paths.classifier);
        read_field(p, "noiser", cfg.paths.noiser);
        read_field(p, "discriminator", cfg.paths.discriminator);
    }
    if (j.contains("split")) {
        const json& s = j.at("split");
        reject_unknown(s, {"train", "val", "test", "stratified"}, "split");
        read_field(s, "train", cfg.split.train);
        read_field(s, "val", cfg.split.val);
        read_field(s, "test", cfg.split.test);
        read_field(s, "stratified", cfg.split.stratified);
    }
    if (j.contains("arch")) {
        const json& a = j.at("arch");
        reject_unknown(a,
                       {"series_len", "classes", "conv_blocks", "conv_channels",
                        "kernel", "dense_units", "dropout"},
                       "arch");
        read_field(a, "series_len", cfg.arch.series_len);
        read_field(a, "classes", cfg.arch.classes);
        read_field(a, "conv_blocks", cfg.arch.conv_blocks);
        read_field(a, "conv_channels", cfg.arch.conv_channels);
        read_field(a, "kernel", cfg.arch.kernel);
        read_field(a, "dense_units", cfg.arch.dense_units);
        read_field(a, "dropout", cfg.arch.dropout);
    }
    if (j.contains("classifier")) {
        const json& c = j.at("classifier");
        reject_unknown(c, {"epochs", "batch", "lr", "weight_decay", "weighted_f1"},
                       "classifier");
        read_field(c, "epochs", cfg.train.classifier.epochs);
        read_field(c, "batch", cfg.train.classifier.batch_size);
        read_field(c, "lr", cfg.train.classifier.lr);
        read_field(c, "weight_decay", cfg.train.classifier.weight_decay);
        read_field(c, "weighted_f1", cfg.train.weighted_f1);
    }
    if (j.contains("adversarial")) {
        const json& a = j.at("adversarial");
        reject_unknown(a,
                       {"epochs", "batch", "noiser_lr", "disc_lr", "d_steps",
                        "noiser_hidden", "noiser_dropout"},
                       "adversarial");
        read_field(a, "epochs", cfg.train.adversarial.epochs);
        read_field(a, "batch", cfg.train.adversarial.batch_size);
        read_field(a, "noiser_lr", cfg.train.adversarial.noiser_lr);
        read_field(a, "disc_lr", cfg.train.adversarial.disc_lr);
        read_field(a, "d_steps", cfg.train.adversarial.d_steps_per_g_step);
        read_field(a, "noiser_hidden", cfg.train.adversarial.noiser_hidden);
        read_field(a, "noiser_dropout", cfg.train.adversarial.noiser_dropout);
    }
    if (j.contains("loss_weights")) {
        const json& w = j.at("loss_weights");
        reject_unknown(w, {"lambda_gen", "lambda_wl1"}, "loss_weights");
        read_field(w, "lambda_gen", cfg.train.weights.lambda_gen);
        read_field(w, "lambda_wl1", cfg.train.weights.lambda_wl1);
    }
    if (j.contains("synth")) {
        const json& s = j.at("synth");
        reject_unknown(s, {"n_per_class", "sigma"}, "synth");
        read_field(s, "n_per_class", cfg.synth.n_per_class);
        read_field(s, "sigma", cfg.synth.sigma);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown(e, {"contamination", "trees", "subsample", "split", "min_support"},
                       "eval");
        read_field(e, "contamination", cfg.eval.contamination);
        read_field(e, "trees", cfg.eval.trees);
        read_field(e, "subsample", cfg.eval.subsample);
        read_field(e, "split", cfg.eval.split);
        read_field(e, "min_support", cfg.eval.min_support);
    }

    cfg.split.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    return cfg;
}

json RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["paths"] = {{"data", paths.data},
                  {"out", paths.out},
                  {"classifier", paths.classifier},
                  {"noiser", paths.noiser},
                  {"discriminator", paths.discriminator}};
    j["split"] = {{"train", split.train},
                  {"val", split.val},
                  {"test", split.test},
                  {"stratified", split.stratified}};
    j["arch"] = {{"series_len", arch.series_len},
                 {"classes", arch.classes},
                 {"conv_blocks", arch.conv_blocks},
                 {"conv_channels", arch.conv_channels},
                 {"kernel", arch.kernel},
                 {"dense_units", arch.dense_units},
                 {"dropout", arch.dropout}};
    j["classifier"] = {{"epochs", train.classifier.epochs},
                       {"batch", train.classifier.batch_size},
                       {"lr", train.classifier.lr},
                       {"weight_decay", train.classifier.weight_decay},
                       {"weighted_f1", train.weighted_f1}};
    j["adversarial"] = {{"epochs", train.adversarial.epochs},
                        {"batch", train.adversarial.batch_size},
                        {"noiser_lr", train.adversarial.noiser_lr},
                        {"disc_lr", train.adversarial.disc_lr},
                        {"d_steps", train.adversarial.d_steps_per_g_step},
                        {"noiser_hidden", train.adversarial.noiser_hidden},
                        {"noiser_dropout", train.adversarial.noiser_dropout}};
    j["loss_weights"] = {{"lambda_gen", train.weights.lambda_gen},
                         {"lambda_wl1", train.weights.lambda_wl1}};
    j["synth"] = {{"n_per_class", synth.n_per_class}, {"sigma", synth.sigma}};
    j["eval"] = {{"contamination", eval.contamination},
                 {"trees", eval.trees},
                 {"subsample", eval.subsample},
                 {"split", eval.split},
                 {"min_support", eval.min_support}};
    return j;
}

void RunConfig::validate() const {
    split.validate();
    train.validate();
    if (synth.n_per_class < 1) throw ConfigError("synth.n_per_class must be >= 1");
    if (synth.sigma < 0.0) throw ConfigError("synth.sigma must be >= 0");
    if (eval.contamination < 0.0 || eval.contamination >= 1.0) {
        throw ConfigError("eval.contamination must be in [0,1)");
    }
    if (eval.trees == 0) throw ConfigError("eval.trees must be >= 1");
    if (eval.subsample < 2) throw ConfigError("eval.subsample must be >= 2");
    if (eval.split != "train" && eval.split != "val" && eval.split != "test" &&
        eval.split != "all") {
        throw ConfigError("eval.split must be one of train/val/test/all");
    }
    if (paths.out.empty()) throw ConfigError("paths.out must not be empty");
}

std::string RunConfig::data_path() const {
    return paths.data.empty() ? paths.out + "/data.csv" : paths.data;
}

std::string RunConfig::classifier_base() const {
    return paths.classifier.empty() ? paths.out + "/classifier.ckpt" : paths.classifier;
}

std::string RunConfig::noiser_base() const {
    return paths.noiser.empty() ? paths.out + "/noiser.ckpt" : paths.noiser;
}

std::string RunConfig::discriminator_base() const {
    return paths.discriminator.empty() ? paths.out + "/discriminator.ckpt"
                                       : paths.discriminator;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j);
}

// ---------------------------------------------------------------------------
// shared command plumbing

namespace {

constexpr const char* kVersion = "0.1.0";

void ensure_out_dir(const RunConfig& cfg) {
    fs::create_directories(cfg.paths.out);
}

data::Dataset load_dataset(const RunConfig& cfg) {
    const std::string path = cfg.data_path();
    if (!fs::exists(path)) {
        throw ConfigError("dataset not found at '" + path +
                          "'; run `tscf synth` first or point paths.data at a CSV");
    }
    return data::load_csv(path);
}

const data::Dataset& pick_split(const data::Splits& splits, const data::Dataset& full,
                                const std::string& name) {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    return full;
}

models::ClassifierModel require_classifier(const RunConfig& cfg) {
    if (!persistence::checkpoint_exists(cfg.classifier_base())) {
        throw ConfigError("classifier checkpoint not found at '" +
                          cfg.classifier_base() + "'; run `tscf train-classifier` first");
    }
    return persistence::load_classifier(cfg.classifier_base());
}

models::NoiserModel require_noiser(const RunConfig& cfg) {
    if (!persistence::checkpoint_exists(cfg.noiser_base())) {
        throw ConfigError("noiser checkpoint not found at '" + cfg.noiser_base() +
                          "'; run `tscf train-cf` first");
    }
    return persistence::load_noiser(cfg.noiser_base());
}

// run.json: resolved config + input/artifact hashes, enough to replay the
// command exactly
struct RunRecord {
    std::string command;
    const RunConfig& cfg;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> artifacts;

    void add_input(const std::string& path) { inputs[path] = hash_file(path); }
    void add_artifact(const std::string& path) { artifacts[path] = hash_file(path); }

    void write() const {
        json j;
        j["command"] = command;
        j["version"] = kVersion;
        j["config"] = cfg.to_json();
        j["inputs"] = inputs;
        j["artifacts"] = artifacts;
        const std::string path = cfg.paths.out + "/run.json";
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path);
        out << j.dump(2) << "\n";
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// commands

void cmd_synth(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = data::synth_generate(cfg.synth.n_per_class, cfg.seed,
                                            cfg.synth.sigma, cfg.arch.series_len);
    const std::string path = cfg.data_path();
    fs::create_directories(fs::path(path).parent_path().empty()
                               ? "."
                               : fs::path(path).parent_path().string());
    data::write_csv(ds, path);

    // sidecar: generator parameters
    json side;
    side["seed"] = cfg.seed;
    side["n_per_class"] = cfg.synth.n_per_class;
    side["sigma"] = cfg.synth.sigma;
    side["series_len"] = cfg.arch.series_len;
    json templates = json::array();
    for (const auto& t : data::class_templates()) {
        templates.push_back({{"name", t.name},
                             {"base", t.base},
                             {"amplitude", t.amplitude},
                             {"green_up", t.green_up},
                             {"green_rate", t.green_rate},
                             {"senescence", t.senescence},
                             {"senescence_rate", t.senescence_rate}});
    }
    side["templates"] = std::move(templates);
    const std::string side_path = path + ".params.json";
    std::ofstream side_out(side_path, std::ios::trunc);
    if (!side_out) throw IoError("cannot write " + side_path);
    side_out << side.dump(2) << "\n";

    RunRecord record{"synth", cfg, {}, {}};
    record.add_artifact(path);
    record.add_artifact(side_path);
    record.write();
}

void cmd_train_classifier(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = load_dataset(cfg);
    data::Splits splits = data::split_dataset(ds, cfg.split);

    models::ClassifierConfig arch = cfg.arch;
    arch.series_len = ds.series_len;
    arch.classes = ds.classes;
    auto result = training::train_classifier(splits.train, splits.val, arch, cfg.train);

    json meta;
    meta["seed"] = cfg.seed;
    meta["best_epoch"] = result.best_epoch;
    meta["best_val_f1"] = result.best_f1;
    meta["epochs"] = cfg.train.classifier.epochs;
    persistence::save_classifier(result.model, cfg.classifier_base(), meta);

    const std::string log_path = cfg.paths.out + "/train_classifier_log.csv";
    {
        std::ofstream log(log_path, std::ios::trunc);
        if (!log) throw IoError("cannot write " + log_path);
        log << "epoch,train_loss,val_f1\n";
        for (const auto& e : result.history) {
            log << e.epoch << "," << fmt(e.mean_losses.l_cl) << "," << fmt(e.val_f1)
                << "\n";
        }
    }

    RunRecord record{"train-classifier", cfg, {}, {}};
    record.add_input(cfg.data_path());
    record.add_artifact(cfg.classifier_base() + ".json");
    record.add_artifact(cfg.classifier_base() + ".bin");
    record.add_artifact(log_path);
    record.write();
}

void cmd_train_cf(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = load_dataset(cfg);
    data::Splits splits = data::split_dataset(ds, cfg.split);
    models::ClassifierModel classifier = require_classifier(cfg);

    auto result =
        training::train_counterfactual(classifier, splits.train, splits.val, cfg.train);

    json meta;
    meta["seed"] = cfg.seed;
    meta["epochs"] = cfg.train.adversarial.epochs;
    meta["lambda_gen"] = cfg.train.weights.lambda_gen;
    meta["lambda_wl1"] = cfg.train.weights.lambda_wl1;
    persistence::save_noiser(result.noiser, cfg.noiser_base(), meta);
    persistence::save_discriminator(result.discriminator, cfg.discriminator_base(),
                                    meta);

    const std::string step_log = cfg.paths.out + "/train_cf_log.csv";
    {
        std::ofstream log(step_log, std::ios::trunc);
        if (!log) throw IoError("cannot write " + step_log);
        log << "step,l_cl,l_gen,l_wl1,l_dsc,total\n";
        for (std::size_t s = 0; s < result.step_log.size(); ++s) {
            const auto& b = result.step_log[s];
            log << s << "," << fmt(b.l_cl) << "," << fmt(b.l_gen) << "," << fmt(b.l_wl1)
                << "," << fmt(b.l_dsc) << "," << fmt(b.total) << "\n";
        }
    }
    const std::string epoch_log = cfg.paths.out + "/train_cf_epochs.csv";
    {
        std::ofstream log(epoch_log, std::ios::trunc);
        if (!log) throw IoError("cannot write " + epoch_log);
        log << "epoch,l_cl,l_gen,l_wl1,l_dsc,total,val_swap_rate\n";
        for (const auto& e : result.history) {
            log << e.epoch << "," << fmt(e.mean_losses.l_cl) << ","
                << fmt(e.mean_losses.l_gen) << "," << fmt(e.mean_losses.l_wl1) << ","
                << fmt(e.mean_losses.l_dsc) << "," << fmt(e.mean_losses.total) << ","
                << fmt(e.val_swap_rate) << "\n";
        }
    }

    RunRecord record{"train-cf", cfg, {}, {}};
    record.add_input(cfg.data_path());
    record.add_input(cfg.classifier_base() + ".bin");
    record.add_artifact(cfg.noiser_base() + ".json");
    record.add_artifact(cfg.noiser_base() + ".bin");
    record.add_artifact(cfg.discriminator_base() + ".json");
    record.add_artifact(cfg.discriminator_base() + ".bin");
    record.add_artifact(step_log);
    record.add_artifact(epoch_log);
    record.write();
}

void cmd_generate(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = load_dataset(cfg);
    data::Splits splits = data::split_dataset(ds, cfg.split);
    models::ClassifierModel classifier = require_classifier(cfg);
    models::NoiserModel noiser = require_noiser(cfg);

    const data::Dataset& subset = pick_split(splits, ds, cfg.eval.split);
    auto pairs = training::generate_counterfactuals(classifier, noiser, subset);

    const std::string path = cfg.paths.out + "/counterfactuals.csv";
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path);
        out << "id,y_src,y_cf,t_tilde";
        for (std::size_t t = 0; t < subset.series_len; ++t) out << ",d" << t;
        for (std::size_t t = 0; t < subset.series_len; ++t) out << ",cf" << t;
        out << "\n";
        char buf[32];
        for (const auto& p : pairs) {
            out << p.sample_id << "," << p.y_src << "," << p.y_cf << "," << p.t_tilde;
            for (float v : p.delta) {
                std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(v));
                out << "," << buf;
            }
            for (float v : p.x_cf) {
                std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(v));
                out << "," << buf;
            }
            out << "\n";
        }
    }

    RunRecord record{"generate", cfg, {}, {}};
    record.add_input(cfg.data_path());
    record.add_input(cfg.classifier_base() + ".bin");
    record.add_input(cfg.noiser_base() + ".bin");
    record.add_artifact(path);
    record.write();
}

void cmd_evaluate(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = load_dataset(cfg);
    data::Splits splits = data::split_dataset(ds, cfg.split);
    models::ClassifierModel classifier = require_classifier(cfg);
    models::NoiserModel noiser = require_noiser(cfg);

    const data::Dataset& subset = pick_split(splits, ds, cfg.eval.split);
    auto pairs = training::generate_counterfactuals(classifier, noiser, subset);

    RunRecord record{"evaluate", cfg, {}, {}};
    record.add_input(cfg.data_path());
    record.add_input(cfg.classifier_base() + ".bin");
    record.add_input(cfg.noiser_base() + ".bin");

    auto tm = evalsuite::transition_matrix(pairs, ds.classes);
    const std::string transitions_path = cfg.paths.out + "/transitions.csv";
    evalsuite::write_transitions_csv(tm, ds.class_names, transitions_path,
                                     cfg.eval.split);
    record.add_artifact(transitions_path);
    const std::string chord_path = cfg.paths.out + "/chord.json";
    evalsuite::write_chord_json(tm, ds.class_names, chord_path, cfg.eval.split);
    record.add_artifact(chord_path);

    auto stats = evalsuite::perturbation_stats(pairs);
    const std::string stats_path = cfg.paths.out + "/perturbation_stats.json";
    evalsuite::write_perturbation_stats_json(stats, stats_path, cfg.eval.split);
    record.add_artifact(stats_path);

    for (int src = 1; src <= ds.classes; ++src) {
        for (int dst = 1; dst <= ds.classes; ++dst) {
            if (src == dst) continue;
            auto ap = evalsuite::average_perturbation(pairs, src, dst);
            if (ap.support < cfg.eval.min_support) continue;
            const std::string ap_path = cfg.paths.out + "/avg_perturbation_" +
                                        std::to_string(src) + "_" +
                                        std::to_string(dst) + ".csv";
            evalsuite::write_average_perturbation_csv(ap, ap_path, cfg.eval.split);
            record.add_artifact(ap_path);
        }
    }

    evalsuite::IsolationForest::Params forest_params;
    forest_params.trees = cfg.eval.trees;
    forest_params.subsample = cfg.eval.subsample;
    forest_params.seed = cfg.seed;
    auto forest = evalsuite::IsolationForest::fit(splits.train.matrix(), forest_params);
    nn::Tensor cf = nn::Tensor::zeros({pairs.size(), subset.series_len});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::copy(pairs[i].x_cf.begin(), pairs[i].x_cf.end(),
                  cf.values.begin() + static_cast<std::ptrdiff_t>(i * subset.series_len));
    }
    auto plausibility = evalsuite::plausibility_report(forest, subset.matrix(), cf,
                                                       cfg.eval.contamination);
    const std::string plaus_path = cfg.paths.out + "/plausibility.json";
    evalsuite::write_plausibility_json(plausibility, plaus_path, cfg.eval.split);
    record.add_artifact(plaus_path);

    record.write();
}

void cmd_ablate(const RunConfig& cfg) {
    cfg.validate();
    ensure_out_dir(cfg);
    data::Dataset ds = load_dataset(cfg);
    data::Splits splits = data::split_dataset(ds, cfg.split);
    models::ClassifierModel classifier = require_classifier(cfg);

    evalsuite::AblationOptions options;
    options.forest.trees = cfg.eval.trees;
    options.forest.subsample = cfg.eval.subsample;
    options.contamination = cfg.eval.contamination;
    auto report = evalsuite::ablation_run(classifier, splits, cfg.train, options);

    const std::string path = cfg.paths.out + "/ablation.json";
    evalsuite::write_ablation_json(report, path, "test");

    RunRecord record{"ablate", cfg, {}, {}};
    record.add_input(cfg.data_path());
    record.add_input(cfg.classifier_base() + ".bin");
    record.add_artifact(path);
    record.write();
}

}  // namespace tscf::runio
