#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tscf/data.hpp"
#include "tscf/models.hpp"
#include "tscf/training.hpp"

namespace tscf::evalsuite {

// ---------------------------------------------------------------------------
// class transitions

// K x K counts; row = source predicted class, column = counterfactual
// predicted class; diagonal = unsuccessful swaps.
struct TransitionMatrix {
    int classes = 0;
    std::vector<std::int64_t> counts;  // row-major K x K

    std::int64_t& at(int src, int dst);
    std::int64_t at(int src, int dst) const;
    std::int64_t total() const;
    double swap_rate() const;  // 1 - diagonal/total
};

TransitionMatrix transition_matrix(const std::vector<models::CounterfactualPair>& pairs,
                                   int classes);

// ---------------------------------------------------------------------------
// perturbation statistics

struct PerturbationStats {
    std::size_t count = 0;
    double l2_mean = 0.0, l2_std = 0.0;
    double l1_mean = 0.0, l1_std = 0.0;
    double swap_rate = 0.0;               // over all evaluated samples
    double swap_rate_correct_only = 0.0;  // over correctly-classified samples
    std::size_t out_of_range_cf = 0;      // x_cf values falling outside [-1,1]
    // mean fraction of sum|delta| within circular radius r of the peak,
    // r = 0..T/2; non-decreasing, 1 at T/2
    std::vector<double> localization_mass;
};

PerturbationStats perturbation_stats(const std::vector<models::CounterfactualPair>& pairs);

// per-time mean/std of delta over successful pairs of one transition;
// support == 0 marks an explicit "no support" result
struct AveragePerturbation {
    int source = 0;
    int target = 0;
    std::size_t support = 0;
    std::vector<double> mean;
    std::vector<double> stddev;
};

AveragePerturbation average_perturbation(const std::vector<models::CounterfactualPair>& pairs,
                                         int source, int target);

// ---------------------------------------------------------------------------
// isolation forest

// Random axis-aligned isolation trees over the T features. Anomaly score
// s(x) = 2^(-E[h(x)]/c(psi)) with the standard truncated-leaf adjustment.
class IsolationForest {
public:
    struct Params {
        std::size_t trees = 100;
        std::size_t subsample = 256;  // psi, lowered to n when n < psi
        std::uint64_t seed = 0;
    };

    // `train` is [n,d]; requires n >= 2.
    static IsolationForest fit(const nn::Tensor& train, const Params& params);

    double score(std::span<const float> point) const;
    std::vector<double> score_rows(const nn::Tensor& points) const;

    bool fitted() const { return fitted_; }
    std::size_t dims() const { return dims_; }
    std::size_t effective_subsample() const { return psi_; }
    std::size_t height_limit() const { return height_limit_; }
    // mean isolation depth (before normalization), exposed for tests
    double expected_path_length(std::span<const float> point) const;

private:
    struct Node {
        int feature = -1;  // -1: leaf
        float threshold = 0.0f;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::uint32_t size = 0;  // leaf only
    };

    double tree_path_length(const std::vector<Node>& tree,
                            std::span<const float> point) const;

    std::vector<std::vector<Node>> trees_;
    std::size_t dims_ = 0;
    std::size_t psi_ = 0;
    std::size_t height_limit_ = 0;
    bool fitted_ = false;
};

// c(m) = 2 H(m-1) - 2(m-1)/m with H(i) ~= ln(i) + Euler-Mascheroni; 0 for m <= 1.
double average_path_length(std::size_t m);

// ---------------------------------------------------------------------------
// plausibility

struct PlausibilityReport {
    std::size_t count = 0;
    double contamination = 0.0;
    double threshold = 0.0;  // scores above are outliers
    // rows: real inlier/outlier; cols: counterfactual inlier/outlier
    std::int64_t contingency[2][2] = {{0, 0}, {0, 0}};
    double accuracy = 0.0;
    double nmi = 0.0;
    double real_inlier_ratio = 0.0;
    double cf_inlier_ratio = 0.0;
};

// Normalized mutual information 2 I(U;V) / (H(U)+H(V)), 0/0 -> 0.
double normalized_mutual_information(const std::vector<int>& u, const std::vector<int>& v);

// Threshold = (1-contamination) quantile of the forest's scores on `real`;
// the same cut labels both lists. The forest must be fit on training data
// only; `real` and `cf` are paired lists of equal length.
PlausibilityReport plausibility_report(const IsolationForest& forest,
                                       const nn::Tensor& real, const nn::Tensor& cf,
                                       double contamination = 0.10);

// ---------------------------------------------------------------------------
// ablation

struct AblationVariant {
    std::string name;
    losses::LossWeights weights;
    PerturbationStats stats;
    TransitionMatrix transitions;
    std::optional<PlausibilityReport> plausibility;
};

struct AblationReport {
    // proposed, without_l_gen, without_l_wl1 (same seeds throughout)
    std::vector<AblationVariant> variants;
};

struct AblationOptions {
    IsolationForest::Params forest;
    double contamination = 0.10;
};

// Trains the three adversarial variants against one pretrained classifier
// with identical seeds, evaluates on the test split, and attaches
// plausibility reports for the first two variants.
AblationReport ablation_run(const models::ClassifierModel& classifier,
                            const data::Splits& splits,
                            const training::TrainConfig& base_cfg,
                            const AblationOptions& options = {});

// ---------------------------------------------------------------------------
// output files (all numbers serialized with 6 significant digits)

double round_sig6(double v);

void write_transitions_csv(const TransitionMatrix& tm,
                           const std::vector<std::string>& class_names,
                           const std::string& path, const std::string& split);
void write_chord_json(const TransitionMatrix& tm,
                      const std::vector<std::string>& class_names,
                      const std::string& path, const std::string& split);
void write_perturbation_stats_json(const PerturbationStats& stats,
                                   const std::string& path, const std::string& split);
void write_average_perturbation_csv(const AveragePerturbation& ap,
                                    const std::string& path, const std::string& split);
void write_plausibility_json(const PlausibilityReport& report, const std::string& path,
                             const std::string& split);
void write_ablation_json(const AblationReport& report, const std::string& path,
                         const std::string& split);

}  // namespace tscf::evalsuite
