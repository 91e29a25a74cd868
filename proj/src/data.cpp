#include "tscf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "tscf/errors.hpp"

namespace tscf::data {

nn::Tensor Dataset::matrix() const {
    nn::Tensor m = nn::Tensor::zeros({samples.size(), series_len});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::copy(samples[i].series.begin(), samples[i].series.end(),
                  m.values.begin() + static_cast<std::ptrdiff_t>(i * series_len));
    }
    return m;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].label;
    return out;
}

const std::vector<std::string>& default_class_names() {
    static const std::vector<std::string> names = {
        "Cereals", "Cotton", "Oleaginous", "Grassland",
        "Shrubland", "Forest", "Bare soil", "Water"};
    return names;
}

void SplitSpec::validate() const {
    if (train < 0.0 || val < 0.0 || test < 0.0) {
        throw ConfigError("split fractions must be >= 0");
    }
    if (std::fabs(train + val + test - 1.0) > 1e-6) {
        throw ConfigError("split fractions must sum to 1, got " +
                          std::to_string(train + val + test));
    }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& field, std::size_t row) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw DataError("csv row " + std::to_string(row) + ": cannot parse '" + field +
                        "' as a number");
    }
    return value;
}

void validate_labels(Dataset& ds) {
    std::unordered_set<std::int64_t> ids;
    int max_label = 0;
    for (const Sample& s : ds.samples) {
        if (!ids.insert(s.id).second) {
            throw DataError("duplicate sample id " + std::to_string(s.id));
        }
        max_label = std::max(max_label, s.label);
    }
    ds.classes = max_label;
    std::vector<std::size_t> per_class(static_cast<std::size_t>(max_label), 0);
    for (const Sample& s : ds.samples) {
        per_class[static_cast<std::size_t>(s.label) - 1]++;
    }
    for (std::size_t c = 0; c < per_class.size(); ++c) {
        if (per_class[c] == 0) {
            throw DataError("class " + std::to_string(c + 1) + " has no samples");
        }
    }
    ds.class_names.clear();
    const auto& defaults = default_class_names();
    for (int c = 1; c <= max_label; ++c) {
        if (static_cast<std::size_t>(c) <= defaults.size()) {
            ds.class_names.push_back(defaults[static_cast<std::size_t>(c) - 1]);
        } else {
            ds.class_names.push_back("class_" + std::to_string(c));
        }
    }
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_fields(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
        throw DataError(path + ": header must be id,label,t0,...");
    }
    const std::size_t t_len = header.size() - 2;
    for (std::size_t t = 0; t < t_len; ++t) {
        if (header[t + 2] != "t" + std::to_string(t)) {
            throw DataError(path + ": unexpected header column '" + header[t + 2] + "'");
        }
    }

    Dataset ds;
    ds.series_len = t_len;
    std::size_t row = 1;  // header was row 1
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != t_len + 2) {
            throw DataError("csv row " + std::to_string(row) + ": expected " +
                            std::to_string(t_len + 2) + " columns, got " +
                            std::to_string(fields.size()));
        }
        Sample s;
        s.id = static_cast<std::int64_t>(parse_number(fields[0], row));
        const double label = parse_number(fields[1], row);
        if (label < 1 || label != std::floor(label)) {
            throw DataError("csv row " + std::to_string(row) + ": unknown label '" +
                            fields[1] + "'");
        }
        s.label = static_cast<int>(label);
        s.series.resize(t_len);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double v = parse_number(fields[t + 2], row);
            if (v < -1.0 || v > 1.0) {
                throw DataError("csv row " + std::to_string(row) + ": value " +
                                fields[t + 2] + " outside [-1,1]");
            }
            s.series[t] = static_cast<float>(v);
        }
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError(path + ": no data rows");
    validate_labels(ds);
    return ds;
}

void write_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    out << "id,label";
    for (std::size_t t = 0; t < dataset.series_len; ++t) out << ",t" << t;
    out << "\n";
    char buf[32];
    for (const Sample& s : dataset.samples) {
        out << s.id << "," << s.label;
        for (float v : s.series) {
            std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(v));
            out << "," << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// splitting

namespace {

// Largest-remainder apportionment of n into three parts.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& f) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double exact = f[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainder[i] = exact - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t left = n - assigned, i = 0; left > 0; --left, ++i) {
        counts[order[i % 3]]++;
    }
    return counts;
}

}  // namespace

Splits split_dataset(const Dataset& dataset, const SplitSpec& spec) {
    spec.validate();
    if (dataset.empty()) throw DataError("split: dataset is empty");

    const std::array<double, 3> fractions{spec.train, spec.val, spec.test};
    std::size_t positive_parts = 0;
    for (double f : fractions) {
        if (f > 0.0) ++positive_parts;
    }

    // groups of sample indices to apportion independently
    std::vector<std::vector<std::size_t>> groups;
    if (spec.stratified) {
        groups.assign(static_cast<std::size_t>(dataset.classes), {});
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            groups[static_cast<std::size_t>(dataset.samples[i].label) - 1].push_back(i);
        }
    } else {
        groups.emplace_back(dataset.size());
        std::iota(groups.back().begin(), groups.back().end(), std::size_t{0});
    }

    Rng rng = Rng(spec.seed).fork("split");
    Splits out;
    for (Dataset* part : {&out.train, &out.val, &out.test}) {
        part->class_names = dataset.class_names;
        part->series_len = dataset.series_len;
        part->classes = dataset.classes;
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& idx = groups[g];
        if (idx.size() < positive_parts) {
            throw DataError("split: class " + std::to_string(g + 1) + " has only " +
                            std::to_string(idx.size()) + " samples for " +
                            std::to_string(positive_parts) + " splits");
        }
        rng.shuffle(idx);
        const auto counts = apportion(idx.size(), fractions);
        std::size_t pos = 0;
        Dataset* parts[3] = {&out.train, &out.val, &out.test};
        for (std::size_t p = 0; p < 3; ++p) {
            for (std::size_t i = 0; i < counts[p]; ++i, ++pos) {
                parts[p]->samples.push_back(dataset.samples[idx[pos]]);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic generator

namespace {

// Seasonal profiles caricaturing the eight land-cover classes: single strong
// season for the crops, broad high plateau for forest, flat negative signal
// for water. Constants are fixed so runs are comparable.
const std::array<ClassTemplate, 8> kTemplates{{
    {"Cereals", 0.18, 0.55, 11.0, 1.20, 17.0, 1.00},
    {"Cotton", 0.20, 0.62, 13.0, 1.00, 20.0, 1.10},
    {"Oleaginous", 0.15, 0.42, 9.5, 1.40, 15.0, 0.90},
    {"Grassland", 0.24, 0.33, 8.5, 0.70, 18.5, 0.60},
    {"Shrubland", 0.30, 0.28, 7.5, 0.55, 19.5, 0.50},
    {"Forest", 0.46, 0.24, 6.0, 0.45, 21.0, 0.45},
    {"Bare soil", 0.12, 0.10, 12.0, 0.80, 16.0, 0.80},
    {"Water", -0.25, 0.05, 12.0, 0.80, 16.0, 0.90},
}};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const std::array<ClassTemplate, 8>& class_templates() { return kTemplates; }

double template_value(const ClassTemplate& tpl, double t) {
    return tpl.base +
           tpl.amplitude * (logistic(tpl.green_rate * (t - tpl.green_up)) -
                            logistic(tpl.senescence_rate * (t - tpl.senescence)));
}

Dataset synth_generate(int n_per_class, std::uint64_t seed, double noise_sigma,
                       std::size_t series_len) {
    if (n_per_class < 1) throw DataError("synth: n_per_class must be >= 1");
    if (noise_sigma < 0.0) throw DataError("synth: noise sigma must be >= 0");
    if (series_len == 0) throw DataError("synth: series length must be positive");

    Dataset ds;
    ds.series_len = series_len;
    ds.classes = static_cast<int>(kTemplates.size());
    ds.class_names.assign(default_class_names().begin(), default_class_names().end());

    Rng rng = Rng(seed).fork("synth");
    std::int64_t next_id = 0;
    for (std::size_t c = 0; c < kTemplates.size(); ++c) {
        for (int i = 0; i < n_per_class; ++i) {
            Sample s;
            s.id = next_id++;
            s.label = static_cast<int>(c) + 1;
            s.series.resize(series_len);
            for (std::size_t t = 0; t < series_len; ++t) {
                double v = template_value(kTemplates[c], static_cast<double>(t));
                if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
                s.series[t] = static_cast<float>(std::clamp(v, -1.0, 1.0));
            }
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

}  // namespace tscf::data
