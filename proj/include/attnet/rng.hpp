#pragma once

#include <cstdint>
#include <random>

#include "attnet/special_functions.hpp"

namespace attnet {

// Deterministic random source. std::mt19937_64 has a fixed, portable output
// sequence; the distributions in <random> do not, so uniform and normal
// variates are derived here directly from the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1), safe as a quantile-function argument.
    double uniform_open() {
        return (static_cast<double>(gen_() >> 12) + 0.5) * 0x1.0p-52;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via the inverse CDF, so the value stream is portable.
    double normal() { return normal_quantile(uniform_open()); }

    std::uint64_t next() { return gen_(); }

    // Derives a decorrelated child seed (splitmix64 finalizer).
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace attnet
