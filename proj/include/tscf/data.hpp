#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tscf/rng.hpp"
#include "tscf/tensor.hpp"

namespace tscf::data {

// One labeled NDVI series. Labels are 1-based class ids; values live in [-1,1].
struct Sample {
    std::int64_t id = 0;
    int label = 0;
    std::vector<float> series;
};

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;
    std::size_t series_len = 24;  // T
    int classes = 8;              // K

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    // [n,T] matrix of all series, row order = sample order.
    nn::Tensor matrix() const;
    std::vector<int> labels() const;
};

// Default class-name table (8 savannah land-cover classes).
const std::vector<std::string>& default_class_names();

struct SplitSpec {
    double train = 0.50;
    double val = 0.17;
    double test = 0.33;
    std::uint64_t seed = 0;
    bool stratified = true;

    void validate() const;  // fractions sum to 1 +- 1e-6
};

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

// CSV schema: header `id,label,t0,...,t{T-1}`, decimal values in [-1,1].
Dataset load_csv(const std::string& path);
void write_csv(const Dataset& dataset, const std::string& path);

// Disjoint, exhaustive, per-class apportioned split; deterministic in seed.
Splits split_dataset(const Dataset& dataset, const SplitSpec& spec);

// Double-logistic seasonal template per class.
struct ClassTemplate {
    const char* name;
    double base;       // off-season NDVI level
    double amplitude;  // seasonal rise
    double green_up;   // inflection time of the rise
    double green_rate;
    double senescence;  // inflection time of the decay
    double senescence_rate;
};

const std::array<ClassTemplate, 8>& class_templates();
// Template value at time t (0-based, out of series_len samples per year).
double template_value(const ClassTemplate& tpl, double t);

// Synthetic stand-in dataset: per class, `n_per_class` noisy copies of its
// template (i.i.d. Gaussian noise, sigma default 0.02), clipped to [-1,1].
Dataset synth_generate(int n_per_class, std::uint64_t seed, double noise_sigma = 0.02,
                       std::size_t series_len = 24);

}  // namespace tscf::data
