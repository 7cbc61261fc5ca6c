#pragma once

#include <cstdint>

#include "gpe/matrix.hpp"

namespace gpe {

// splitmix64: fully specified, platform-independent. Identical seed gives an
// identical stream everywhere, which is what makes checkpoints and datasets
// bit-reproducible across builds.
struct RngState {
    std::uint64_t state = 0;
};

inline std::uint64_t next_u64(RngState& rng) {
    std::uint64_t z = (rng.state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform in [0, 1): top 53 bits over 2^53.
inline double uniform(RngState& rng) {
    return static_cast<double>(next_u64(rng) >> 11) * 0x1.0p-53;
}

// Box-Muller (cosine branch), two uniforms per draw. log(1-u) keeps the
// argument strictly positive.
double normal(RngState& rng);

Matrix random_uniform(RngState& rng, std::size_t rows, std::size_t cols, double lo, double hi);
Matrix random_normal(RngState& rng, std::size_t rows, std::size_t cols, double sigma);

// Derives a subsystem seed from a master seed and a tag, so that every source
// of randomness in a run flows from one config key.
std::uint64_t derive_seed(std::uint64_t master, const char* tag);

}  // namespace gpe
