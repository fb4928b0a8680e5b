#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace odernn {

/// Deterministic random source. Wraps mt19937_64 with explicit distribution
/// transforms so that streams are identical across platforms and standard
/// library versions; all reproducibility guarantees in this library rest on it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Box-Muller. Draws a fresh pair each call; the second value is discarded
    /// so the stream consumed per call is fixed.
    double normal(double mean, double sd) {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * mag * std::cos(2.0 * M_PI * u2);
    }

    /// Uniform integer in [lo, hi], inclusive.
    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift; bias is negligible for the small ranges used here.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    /// Derives an independent child seed (splitmix64 finalizer over seed+stream).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace odernn
