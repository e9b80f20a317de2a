// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace slao::rng {

// Counter-based generator: SplitMix64 run in counter mode. Draw i of a
// stream is a pure function of (seed, i), so any element can be produced
// without sequencing through the ones before it, and every randomized
// operation in the library is a pure function of (input, seed). The same
// seed yields the same bits on any platform with IEEE-754 doubles.

inline constexpr double kPi = 3.14159265358979323846;

inline std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
    return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ull);
}

// Deterministically splits one seed into independent sub-streams.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + 0xD1B54A32D192ED03ull));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(at(seed, counter) >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; draw `index` consumes counters
// 2*index and 2*index+1 so gaussians are random-access too.
inline double gaussian(std::uint64_t seed, std::uint64_t index) {
    const double u1 = 1.0 - uniform01(seed, 2 * index);  // (0, 1], log is finite
    const double u2 = uniform01(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Sequential convenience wrapper over the counter stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : seed_(seed) {}

    double next_uniform() { return uniform01(seed_, counter_++); }

    std::uint64_t next_u64() { return at(seed_, counter_++); }

    // Uniform index in [0, bound); bound must be > 0. The modulo bias is
    // below 2^-40 for any bound this library uses.
    std::size_t next_index(std::size_t bound) {
        return static_cast<std::size_t>(next_u64() % bound);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace slao::rng
