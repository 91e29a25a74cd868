#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "tscf/hash.hpp"

namespace tscf {

// Deterministic random source. The engine is std::mt19937_64 (fully specified
// by the standard); all distributions are implemented here rather than taken
// from <random>, whose distribution algorithms are implementation-defined.
// Identical seeds therefore give identical streams on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n). Multiply-shift; bias is < 2^-64 per draw.
    std::size_t uniform_index(std::size_t n) {
        using u128 = unsigned __int128;
        return static_cast<std::size_t>(
            (static_cast<u128>(next()) * static_cast<u128>(n)) >> 64);
    }

    // Box-Muller with a cached spare.
    double normal(double mean = 0.0, double stddev = 1.0);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derived stream: same parent seed and tag always give the same child.
    Rng fork(std::string_view tag) const {
        std::uint64_t h = fnv1a64(&seed_, sizeof(seed_));
        h = fnv1a64(tag, h);
        return Rng(h);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tscf
