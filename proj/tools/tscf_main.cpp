#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tscf/errors.hpp"
#include "tscf/runio.hpp"

namespace {

// exit codes by failure category
constexpr int kOk = 0;
constexpr int kInternalError = 1;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kTrainError = 4;
constexpr int kEvalError = 5;
constexpr int kIoError = 6;

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> data;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::optional<int> cf_epochs;
    std::optional<double> lambda_gen;
    std::optional<double> lambda_wl1;
    std::optional<int> n_per_class;
    std::optional<double> sigma;
    std::optional<double> contamination;
    std::optional<std::string> eval_split;
    std::optional<std::size_t> conv_channels;
    std::optional<std::size_t> dense_units;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path,
                    "JSON config file (a previous run.json also works)");
    cmd->add_option("--data", flags.data, "dataset CSV path");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--epochs", flags.epochs, "classifier training epochs");
    cmd->add_option("--cf-epochs", flags.cf_epochs, "adversarial training epochs");
    cmd->add_option("--lambda-gen", flags.lambda_gen, "generator loss weight");
    cmd->add_option("--lambda-wl1", flags.lambda_wl1, "weighted-l1 loss weight");
    cmd->add_option("--n-per-class", flags.n_per_class, "synthetic samples per class");
    cmd->add_option("--sigma", flags.sigma, "synthetic noise sigma");
    cmd->add_option("--contamination", flags.contamination,
                    "isolation-forest contamination quantile");
    cmd->add_option("--eval-split", flags.eval_split,
                    "split for generate/evaluate (train|val|test|all)");
    cmd->add_option("--conv-channels", flags.conv_channels, "conv channels per block");
    cmd->add_option("--dense-units", flags.dense_units, "dense head width");
}

tscf::runio::RunConfig resolve(const CommonFlags& flags) {
    tscf::runio::RunConfig cfg;
    if (!flags.config_path.empty()) {
        cfg = tscf::runio::load_config_file(flags.config_path);
    }
    if (flags.data) cfg.paths.data = *flags.data;
    if (flags.out) cfg.paths.out = *flags.out;
    if (flags.seed) {
        cfg.seed = *flags.seed;
        cfg.split.seed = *flags.seed;
        cfg.train.seed = *flags.seed;
    }
    if (flags.epochs) cfg.train.classifier.epochs = *flags.epochs;
    if (flags.cf_epochs) cfg.train.adversarial.epochs = *flags.cf_epochs;
    if (flags.lambda_gen) cfg.train.weights.lambda_gen = *flags.lambda_gen;
    if (flags.lambda_wl1) cfg.train.weights.lambda_wl1 = *flags.lambda_wl1;
    if (flags.n_per_class) cfg.synth.n_per_class = *flags.n_per_class;
    if (flags.sigma) cfg.synth.sigma = *flags.sigma;
    if (flags.contamination) cfg.eval.contamination = *flags.contamination;
    if (flags.eval_split) cfg.eval.split = *flags.eval_split;
    if (flags.conv_channels) cfg.arch.conv_channels = *flags.conv_channels;
    if (flags.dense_units) cfg.arch.dense_units = *flags.dense_units;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "tscf: adversarial counterfactual explanations for univariate "
        "time-series classifiers"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        std::function<void(const tscf::runio::RunConfig&)> fn;
    };
    const Sub subs[] = {
        {"synth", "generate the synthetic NDVI dataset", tscf::runio::cmd_synth},
        {"train-classifier", "pretrain the classifier (best-validation-F1 snapshot)",
         tscf::runio::cmd_train_classifier},
        {"train-cf", "adversarial stage: train noiser + discriminator",
         tscf::runio::cmd_train_cf},
        {"generate", "write counterfactual pairs for a split",
         tscf::runio::cmd_generate},
        {"evaluate", "transitions, perturbation stats, plausibility",
         tscf::runio::cmd_evaluate},
        {"ablate", "train/evaluate proposed vs no-gen vs no-wl1 variants",
         tscf::runio::cmd_ablate},
    };

    std::vector<CommonFlags> flags(std::size(subs));
    for (std::size_t i = 0; i < std::size(subs); ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_common(cmd, flags[i]);
        cmd->callback([&, i]() { subs[i].fn(resolve(flags[i])); });
    }

    try {
        app.parse(argc, argv);
        return kOk;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    } catch (const tscf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const tscf::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kDataError;
    } catch (const tscf::TrainingError& e) {
        std::fprintf(stderr, "training error: %s\n", e.what());
        return kTrainError;
    } catch (const tscf::EvalError& e) {
        std::fprintf(stderr, "evaluation error: %s\n", e.what());
        return kEvalError;
    } catch (const tscf::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kIoError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kInternalError;
    }
}
