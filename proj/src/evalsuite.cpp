#include "tscf/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "tscf/errors.hpp"

namespace tscf::evalsuite {

using models::CounterfactualPair;
using nlohmann::json;
using nn::Tensor;

// ---------------------------------------------------------------------------
// transitions

std::int64_t& TransitionMatrix::at(int src, int dst) {
    return counts[static_cast<std::size_t>(src - 1) * static_cast<std::size_t>(classes) +
                  static_cast<std::size_t>(dst - 1)];
}

std::int64_t TransitionMatrix::at(int src, int dst) const {
    return counts[static_cast<std::size_t>(src - 1) * static_cast<std::size_t>(classes) +
                  static_cast<std::size_t>(dst - 1)];
}

std::int64_t TransitionMatrix::total() const {
    std::int64_t t = 0;
    for (std::int64_t c : counts) t += c;
    return t;
}

double TransitionMatrix::swap_rate() const {
    const std::int64_t n = total();
    if (n == 0) return 0.0;
    std::int64_t diag = 0;
    for (int c = 1; c <= classes; ++c) diag += at(c, c);
    return 1.0 - static_cast<double>(diag) / static_cast<double>(n);
}

TransitionMatrix transition_matrix(const std::vector<CounterfactualPair>& pairs,
                                   int classes) {
    if (classes <= 0) throw EvalError("transition_matrix: class count must be positive");
    TransitionMatrix tm;
    tm.classes = classes;
    tm.counts.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes),
                     0);
    for (const CounterfactualPair& p : pairs) {
        if (p.y_src < 1 || p.y_src > classes || p.y_cf < 1 || p.y_cf > classes) {
            throw EvalError("transition_matrix: label out of range: " +
                            std::to_string(p.y_src) + "->" + std::to_string(p.y_cf));
        }
        tm.at(p.y_src, p.y_cf)++;
    }
    return tm;
}

// ---------------------------------------------------------------------------
// perturbation statistics

namespace {

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    double acc = 0.0;
    for (double v : values) acc += v;
    out.mean = acc / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

}  // namespace

PerturbationStats perturbation_stats(const std::vector<CounterfactualPair>& pairs) {
    if (pairs.empty()) throw EvalError("perturbation_stats: no pairs to evaluate");
    const std::size_t t_len = pairs.front().delta.size();

    PerturbationStats stats;
    stats.count = pairs.size();
    std::vector<double> l2s, l1s;
    l2s.reserve(pairs.size());
    l1s.reserve(pairs.size());
    const std::size_t radii = t_len / 2 + 1;
    std::vector<double> mass_acc(radii, 0.0);

    std::size_t swapped = 0, correct = 0, swapped_correct = 0;
    for (const CounterfactualPair& p : pairs) {
        double l2 = 0.0, l1 = 0.0;
        for (float v : p.delta) {
            l2 += static_cast<double>(v) * v;
            l1 += std::fabs(v);
        }
        l2s.push_back(std::sqrt(l2));
        l1s.push_back(l1);
        if (p.success) ++swapped;
        if (p.y_src == p.y_true) {
            ++correct;
            if (p.success) ++swapped_correct;
        }
        for (float v : p.x_cf) {
            if (v < -1.0f || v > 1.0f) ++stats.out_of_range_cf;
        }

        // cumulative |delta| mass by circular distance from the peak
        std::vector<double> by_radius(radii, 0.0);
        for (std::size_t t = 0; t < t_len; ++t) {
            const int d = losses::modulo_distance(static_cast<int>(t),
                                                  static_cast<int>(p.t_tilde),
                                                  static_cast<int>(t_len));
            by_radius[static_cast<std::size_t>(d)] += std::fabs(p.delta[t]);
        }
        double cum = 0.0;
        for (std::size_t r = 0; r < radii; ++r) {
            cum += by_radius[r];
            // an all-zero delta is trivially contained in any radius
            mass_acc[r] += l1 > 0.0 ? cum / l1 : 1.0;
        }
    }

    const MeanStd l2m = mean_std(l2s), l1m = mean_std(l1s);
    stats.l2_mean = l2m.mean;
    stats.l2_std = l2m.stddev;
    stats.l1_mean = l1m.mean;
    stats.l1_std = l1m.stddev;
    stats.swap_rate = static_cast<double>(swapped) / static_cast<double>(pairs.size());
    stats.swap_rate_correct_only =
        correct > 0 ? static_cast<double>(swapped_correct) / static_cast<double>(correct)
                    : 0.0;
    stats.localization_mass.resize(radii);
    for (std::size_t r = 0; r < radii; ++r) {
        stats.localization_mass[r] = mass_acc[r] / static_cast<double>(pairs.size());
    }
    return stats;
}

AveragePerturbation average_perturbation(const std::vector<CounterfactualPair>& pairs,
                                         int source, int target) {
    AveragePerturbation ap;
    ap.source = source;
    ap.target = target;
    std::size_t t_len = 0;
    for (const CounterfactualPair& p : pairs) {
        if (!p.success || p.y_src != source || p.y_cf != target) continue;
        if (t_len == 0) {
            t_len = p.delta.size();
            ap.mean.assign(t_len, 0.0);
            ap.stddev.assign(t_len, 0.0);
        }
        for (std::size_t t = 0; t < t_len; ++t) {
            ap.mean[t] += p.delta[t];
        }
        ap.support++;
    }
    if (ap.support == 0) return ap;  // explicit "no support" result

    for (std::size_t t = 0; t < t_len; ++t) {
        ap.mean[t] /= static_cast<double>(ap.support);
    }
    for (const CounterfactualPair& p : pairs) {
        if (!p.success || p.y_src != source || p.y_cf != target) continue;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double d = p.delta[t] - ap.mean[t];
            ap.stddev[t] += d * d;
        }
    }
    for (std::size_t t = 0; t < t_len; ++t) {
        ap.stddev[t] = std::sqrt(ap.stddev[t] / static_cast<double>(ap.support));
    }
    return ap;
}

// ---------------------------------------------------------------------------
// isolation forest

double average_path_length(std::size_t m) {
    if (m <= 1) return 0.0;
    const double md = static_cast<double>(m);
    const double harmonic = std::log(md - 1.0) + 0.5772156649;
    return 2.0 * harmonic - 2.0 * (md - 1.0) / md;
}

IsolationForest IsolationForest::fit(const Tensor& train, const Params& params) {
    if (train.rank() != 2) {
        throw EvalError("isolation forest: training data must be [n,d], got " +
                        nn::shape_str(train.shape));
    }
    const std::size_t n = train.dim(0), d = train.dim(1);
    if (n < 2) throw EvalError("isolation forest: need at least 2 training rows");
    if (params.trees == 0) throw EvalError("isolation forest: need at least 1 tree");

    IsolationForest forest;
    forest.dims_ = d;
    forest.psi_ = std::min(params.subsample, n);
    forest.height_limit_ = static_cast<std::size_t>(
        std::ceil(std::log2(static_cast<double>(forest.psi_))));
    forest.trees_.reserve(params.trees);

    Rng forest_rng = Rng(params.seed).fork("iforest");
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;

    for (std::size_t t = 0; t < params.trees; ++t) {
        Rng rng = forest_rng.fork("tree-" + std::to_string(t));
        // subsample without replacement: partial Fisher-Yates
        std::vector<std::size_t> sample(all);
        for (std::size_t i = 0; i < forest.psi_; ++i) {
            const std::size_t j = i + rng.uniform_index(n - i);
            std::swap(sample[i], sample[j]);
        }
        sample.resize(forest.psi_);

        std::vector<Node> tree;
        // recursive build over index spans
        auto build = [&](auto&& self, std::vector<std::size_t>& idx,
                         std::size_t depth) -> std::uint32_t {
            const std::uint32_t node_id = static_cast<std::uint32_t>(tree.size());
            tree.emplace_back();
            if (depth >= forest.height_limit_ || idx.size() <= 1) {
                tree[node_id].size = static_cast<std::uint32_t>(idx.size());
                return node_id;
            }
            // features that still vary on this node's data
            std::vector<int> splittable;
            std::vector<std::pair<float, float>> ranges(d);
            for (std::size_t f = 0; f < d; ++f) {
                float lo = train.at(idx[0], f), hi = lo;
                for (std::size_t i = 1; i < idx.size(); ++i) {
                    const float v = train.at(idx[i], f);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                ranges[f] = {lo, hi};
                if (lo < hi) splittable.push_back(static_cast<int>(f));
            }
            if (splittable.empty()) {  // duplicates cannot be separated
                tree[node_id].size = static_cast<std::uint32_t>(idx.size());
                return node_id;
            }
            const int feature = splittable[rng.uniform_index(splittable.size())];
            const auto [lo, hi] = ranges[static_cast<std::size_t>(feature)];
            // threshold in (lo, hi] keeps both children non-empty
            const float threshold = static_cast<float>(
                static_cast<double>(lo) +
                (1.0 - rng.uniform()) * (static_cast<double>(hi) - static_cast<double>(lo)));

            std::vector<std::size_t> left_idx, right_idx;
            for (std::size_t i : idx) {
                if (train.at(i, static_cast<std::size_t>(feature)) < threshold) {
                    left_idx.push_back(i);
                } else {
                    right_idx.push_back(i);
                }
            }
            idx.clear();
            idx.shrink_to_fit();
            tree[node_id].feature = feature;
            tree[node_id].threshold = threshold;
            const std::uint32_t left = self(self, left_idx, depth + 1);
            tree[node_id].left = left;
            const std::uint32_t right = self(self, right_idx, depth + 1);
            tree[node_id].right = right;
            return node_id;
        };
        build(build, sample, 0);
        forest.trees_.push_back(std::move(tree));
    }
    forest.fitted_ = true;
    return forest;
}

double IsolationForest::tree_path_length(const std::vector<Node>& tree,
                                         std::span<const float> point) const {
    std::uint32_t cur = 0;
    double depth = 0.0;
    while (tree[cur].feature >= 0) {
        cur = point[static_cast<std::size_t>(tree[cur].feature)] < tree[cur].threshold
                  ? tree[cur].left
                  : tree[cur].right;
        depth += 1.0;
    }
    return depth + average_path_length(tree[cur].size);
}

double IsolationForest::expected_path_length(std::span<const float> point) const {
    if (!fitted_) throw StateError("isolation forest: score requested before fit");
    if (point.size() != dims_) {
        throw DimensionError("isolation forest: point has " +
                             std::to_string(point.size()) + " features, forest expects " +
                             std::to_string(dims_));
    }
    double acc = 0.0;
    for (const auto& tree : trees_) acc += tree_path_length(tree, point);
    return acc / static_cast<double>(trees_.size());
}

double IsolationForest::score(std::span<const float> point) const {
    const double e_h = expected_path_length(point);
    return std::pow(2.0, -e_h / average_path_length(psi_));
}

std::vector<double> IsolationForest::score_rows(const Tensor& points) const {
    if (points.rank() != 2 || points.dim(1) != dims_) {
        throw DimensionError("isolation forest: expected [n," + std::to_string(dims_) +
                             "], got " + nn::shape_str(points.shape));
    }
    std::vector<double> out(points.dim(0));
    for (std::size_t i = 0; i < points.dim(0); ++i) {
        out[i] = score(std::span<const float>(points.values).subspan(i * dims_, dims_));
    }
    return out;
}

// ---------------------------------------------------------------------------
// plausibility

double normalized_mutual_information(const std::vector<int>& u,
                                     const std::vector<int>& v) {
    if (u.size() != v.size()) throw EvalError("nmi: partitions differ in length");
    if (u.empty()) throw EvalError("nmi: empty partitions");
    const double n = static_cast<double>(u.size());

    std::map<int, double> pu, pv;
    std::map<std::pair<int, int>, double> puv;
    for (std::size_t i = 0; i < u.size(); ++i) {
        pu[u[i]] += 1.0;
        pv[v[i]] += 1.0;
        puv[{u[i], v[i]}] += 1.0;
    }
    double h_u = 0.0, h_v = 0.0, mi = 0.0;
    for (auto& [k, c] : pu) {
        const double p = c / n;
        h_u -= p * std::log(p);
    }
    for (auto& [k, c] : pv) {
        const double p = c / n;
        h_v -= p * std::log(p);
    }
    for (auto& [kv, c] : puv) {
        const double p = c / n;
        const double p_u = pu[kv.first] / n;
        const double p_v = pv[kv.second] / n;
        mi += p * std::log(p / (p_u * p_v));
    }
    const double denom = h_u + h_v;
    if (denom <= 0.0) return 0.0;
    return 2.0 * mi / denom;
}

PlausibilityReport plausibility_report(const IsolationForest& forest,
                                       const Tensor& real, const Tensor& cf,
                                       double contamination) {
    if (!forest.fitted()) throw StateError("plausibility: forest not fitted");
    if (real.shape != cf.shape) {
        throw DimensionError("plausibility: real " + nn::shape_str(real.shape) +
                             " and counterfactual " + nn::shape_str(cf.shape) +
                             " sets must be paired");
    }
    if (contamination < 0.0 || contamination >= 1.0) {
        throw ConfigError("plausibility: contamination must be in [0,1)");
    }
    const std::vector<double> real_scores = forest.score_rows(real);
    const std::vector<double> cf_scores = forest.score_rows(cf);
    const std::size_t n = real_scores.size();
    if (n == 0) throw EvalError("plausibility: empty evaluation set");

    // nearest-rank (1-contamination) quantile of the real scores
    std::vector<double> sorted(real_scores);
    std::sort(sorted.begin(), sorted.end());
    std::size_t rank = static_cast<std::size_t>(
        std::ceil((1.0 - contamination) * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    const double threshold = sorted[rank - 1];

    PlausibilityReport report;
    report.count = n;
    report.contamination = contamination;
    report.threshold = threshold;

    std::vector<int> real_labels(n), cf_labels(n);  // 0 inlier, 1 outlier
    std::size_t agree = 0, real_in = 0, cf_in = 0;
    for (std::size_t i = 0; i < n; ++i) {
        real_labels[i] = real_scores[i] <= threshold ? 0 : 1;
        cf_labels[i] = cf_scores[i] <= threshold ? 0 : 1;
        report.contingency[real_labels[i]][cf_labels[i]]++;
        if (real_labels[i] == cf_labels[i]) ++agree;
        real_in += real_labels[i] == 0 ? 1 : 0;
        cf_in += cf_labels[i] == 0 ? 1 : 0;
    }
    report.accuracy = static_cast<double>(agree) / static_cast<double>(n);
    report.nmi = normalized_mutual_information(real_labels, cf_labels);
    report.real_inlier_ratio = static_cast<double>(real_in) / static_cast<double>(n);
    report.cf_inlier_ratio = static_cast<double>(cf_in) / static_cast<double>(n);
    return report;
}

// ---------------------------------------------------------------------------
// ablation

AblationReport ablation_run(const models::ClassifierModel& classifier,
                            const data::Splits& splits,
                            const training::TrainConfig& base_cfg,
                            const AblationOptions& options) {
    AblationReport report;

    // shared forest: fit once on real training data only
    IsolationForest::Params forest_params = options.forest;
    forest_params.seed = base_cfg.seed;
    const IsolationForest forest = IsolationForest::fit(splits.train.matrix(),
                                                        forest_params);
    const Tensor real_test = splits.test.matrix();

    struct VariantSpec {
        const char* name;
        double lambda_gen;
        double lambda_wl1;
        bool plausibility;
    };
    const VariantSpec variant_specs[3] = {
        {"proposed", base_cfg.weights.lambda_gen, base_cfg.weights.lambda_wl1, true},
        {"without_l_gen", 0.0, base_cfg.weights.lambda_wl1, true},
        {"without_l_wl1", base_cfg.weights.lambda_gen, 0.0, false},
    };

    for (const VariantSpec& spec : variant_specs) {
        training::TrainConfig cfg = base_cfg;  // identical seeds across variants
        cfg.weights.lambda_gen = spec.lambda_gen;
        cfg.weights.lambda_wl1 = spec.lambda_wl1;
        auto trained = training::train_counterfactual(classifier, splits.train,
                                                      splits.val, cfg);
        auto pairs = training::generate_counterfactuals(classifier, trained.noiser,
                                                        splits.test);
        AblationVariant variant;
        variant.name = spec.name;
        variant.weights = cfg.weights;
        variant.stats = perturbation_stats(pairs);
        variant.transitions = transition_matrix(pairs, splits.test.classes);
        if (spec.plausibility) {
            Tensor cf = Tensor::zeros(real_test.shape);
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                std::copy(pairs[i].x_cf.begin(), pairs[i].x_cf.end(),
                          cf.values.begin() +
                              static_cast<std::ptrdiff_t>(i * splits.test.series_len));
            }
            variant.plausibility =
                plausibility_report(forest, real_test, cf, options.contamination);
        }
        report.variants.push_back(std::move(variant));
    }
    return report;
}

// ---------------------------------------------------------------------------
// writers

double round_sig6(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    const double mag = std::pow(10.0, 5.0 - std::floor(std::log10(std::fabs(v))));
    return std::round(v * mag) / mag;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write output file: " + path);
    return out;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

json stats_json(const PerturbationStats& stats) {
    json j;
    j["n"] = stats.count;
    j["l2_mean"] = round_sig6(stats.l2_mean);
    j["l2_std"] = round_sig6(stats.l2_std);
    j["l1_mean"] = round_sig6(stats.l1_mean);
    j["l1_std"] = round_sig6(stats.l1_std);
    j["swap_rate"] = round_sig6(stats.swap_rate);
    j["swap_rate_correct_only"] = round_sig6(stats.swap_rate_correct_only);
    j["out_of_range_cf_values"] = stats.out_of_range_cf;
    json mass = json::array();
    for (double m : stats.localization_mass) mass.push_back(round_sig6(m));
    j["localization_mass"] = std::move(mass);
    return j;
}

json plausibility_json(const PlausibilityReport& r) {
    json j;
    j["n"] = r.count;
    j["contamination"] = round_sig6(r.contamination);
    j["threshold"] = round_sig6(r.threshold);
    j["contingency"] = {{r.contingency[0][0], r.contingency[0][1]},
                        {r.contingency[1][0], r.contingency[1][1]}};
    j["accuracy"] = round_sig6(r.accuracy);
    j["nmi"] = round_sig6(r.nmi);
    j["real_inlier_ratio"] = round_sig6(r.real_inlier_ratio);
    j["cf_inlier_ratio"] = round_sig6(r.cf_inlier_ratio);
    return j;
}

}  // namespace

void write_transitions_csv(const TransitionMatrix& tm,
                           const std::vector<std::string>& class_names,
                           const std::string& path, const std::string& split) {
    auto out = open_out(path);
    out << "# split: " << split << "\n";
    out << "src\\dst";
    for (int c = 1; c <= tm.classes; ++c) {
        out << "," << class_names.at(static_cast<std::size_t>(c) - 1);
    }
    out << "\n";
    for (int src = 1; src <= tm.classes; ++src) {
        out << class_names.at(static_cast<std::size_t>(src) - 1);
        for (int dst = 1; dst <= tm.classes; ++dst) {
            out << "," << tm.at(src, dst);
        }
        out << "\n";
    }
}

void write_chord_json(const TransitionMatrix& tm,
                      const std::vector<std::string>& class_names,
                      const std::string& path, const std::string& split) {
    json j;
    j["split"] = split;
    j["classes"] = class_names;
    j["total"] = tm.total();
    json edges = json::array();
    for (int src = 1; src <= tm.classes; ++src) {
        for (int dst = 1; dst <= tm.classes; ++dst) {
            if (src == dst || tm.at(src, dst) == 0) continue;
            json e;
            e["source"] = src;
            e["target"] = dst;
            e["source_name"] = class_names.at(static_cast<std::size_t>(src) - 1);
            e["target_name"] = class_names.at(static_cast<std::size_t>(dst) - 1);
            e["count"] = tm.at(src, dst);
            edges.push_back(std::move(e));
        }
    }
    j["edges"] = std::move(edges);
    open_out(path) << j.dump(2) << "\n";
}

void write_perturbation_stats_json(const PerturbationStats& stats,
                                   const std::string& path, const std::string& split) {
    json j = stats_json(stats);
    j["split"] = split;
    open_out(path) << j.dump(2) << "\n";
}

void write_average_perturbation_csv(const AveragePerturbation& ap,
                                    const std::string& path, const std::string& split) {
    auto out = open_out(path);
    out << "# split: " << split << "\n";
    out << "# transition: " << ap.source << " -> " << ap.target
        << ", support: " << ap.support << "\n";
    out << "t,mean,std\n";
    for (std::size_t t = 0; t < ap.mean.size(); ++t) {
        out << t << "," << fmt6(round_sig6(ap.mean[t])) << ","
            << fmt6(round_sig6(ap.stddev[t])) << "\n";
    }
}

void write_plausibility_json(const PlausibilityReport& report, const std::string& path,
                             const std::string& split) {
    json j = plausibility_json(report);
    j["split"] = split;
    open_out(path) << j.dump(2) << "\n";
}

void write_ablation_json(const AblationReport& report, const std::string& path,
                         const std::string& split) {
    json j;
    j["split"] = split;
    json variants = json::array();
    for (const AblationVariant& v : report.variants) {
        json vj;
        vj["name"] = v.name;
        vj["lambda_gen"] = round_sig6(v.weights.lambda_gen);
        vj["lambda_wl1"] = round_sig6(v.weights.lambda_wl1);
        vj["stats"] = stats_json(v.stats);
        if (v.plausibility) {
            vj["plausibility"] = plausibility_json(*v.plausibility);
        } else {
            vj["plausibility"] = nullptr;
        }
        variants.push_back(std::move(vj));
    }
    j["variants"] = std::move(variants);
    open_out(path) << j.dump(2) << "\n";
}

}  // namespace tscf::evalsuite
