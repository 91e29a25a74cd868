#pragma once

#include <string>

#include <json.hpp>

#include "tscf/data.hpp"
#include "tscf/evalsuite.hpp"
#include "tscf/models.hpp"
#include "tscf/training.hpp"

namespace tscf::runio {

// Resolved configuration of one pipeline run. Defaults match the reference
// experiment (lambda_gen=0.5, lambda_wl1=0.05, 1000/100 epochs, batches
// 32/128, lr=1e-4, weight decay 1e-4). The master seed feeds the split and
// both training stages.
struct RunConfig {
    std::uint64_t seed = 42;

    struct Paths {
        std::string data;  // dataset CSV (input or synth output)
        std::string out = "runs/default";
        // checkpoint bases; empty = "<out>/<kind>.ckpt"
        std::string classifier;
        std::string noiser;
        std::string discriminator;
    } paths;

    data::SplitSpec split;
    models::ClassifierConfig arch;
    training::TrainConfig train;

    struct Synth {
        int n_per_class = 1000;
        double sigma = 0.02;
    } synth;

    struct Eval {
        double contamination = 0.10;
        std::size_t trees = 100;
        std::size_t subsample = 256;
        std::string split = "test";     // train | val | test | all
        std::size_t min_support = 1;    // avg-perturbation file threshold
    } eval;

    // Accepts either a bare config document or a run.json (whose "config"
    // block is then used), so any emitted run.json replays directly.
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;

    std::string data_path() const;
    std::string classifier_base() const;
    std::string noiser_base() const;
    std::string discriminator_base() const;
};

RunConfig load_config_file(const std::string& path);

// Subcommand bodies. Each creates the output directory, writes its
// artifacts, and finishes with a run.json carrying the resolved config plus
// input/artifact hashes for exact replay.
void cmd_synth(const RunConfig& cfg);
void cmd_train_classifier(const RunConfig& cfg);
void cmd_train_cf(const RunConfig& cfg);
void cmd_generate(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);
void cmd_ablate(const RunConfig& cfg);

}  // namespace tscf::runio
