#pragma once

// Counter-based pseudo-random generator. Every draw is a pure function of
// (seed, counter, slot), so encoder/decoder pairs and parallel Monte Carlo
// workers reproduce identical streams without sharing mutable state.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ratedist {

inline constexpr std::uint64_t kDefaultSeed = 0xC0DEC0DEULL;

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6A09E667F3BCC909ULL)) {}

    std::uint64_t seed_key() const { return key_; }

    // Raw 64-bit word for (counter, slot).
    std::uint64_t word(std::uint64_t counter, std::uint32_t slot) const {
        std::uint64_t h = key_;
        h = mix(h ^ (counter * 0x9E3779B97F4A7C15ULL));
        h = mix(h ^ (static_cast<std::uint64_t>(slot) * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
        return h;
    }

    // Uniform in [0, 1).
    double uniform01(std::uint64_t counter, std::uint32_t slot) const {
        return static_cast<double>(word(counter, slot) >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; consumes slots `slot` and `slot + 1`.
    double gaussian(std::uint64_t counter, std::uint32_t slot) const {
        const double u1 = (static_cast<double>(word(counter, slot) >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = uniform01(counter, slot + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    // SplitMix64 finalizer; full-avalanche 64-bit mixer.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
};

}  // namespace ratedist
