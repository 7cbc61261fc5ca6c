#include "gpe/rng.hpp"

#include <cmath>

namespace gpe {

double normal(RngState& rng) {
    const double u1 = uniform(rng);
    const double u2 = uniform(rng);
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

Matrix random_uniform(RngState& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = lo + (hi - lo) * uniform(rng);
    return m;
}

Matrix random_normal(RngState& rng, std::size_t rows, std::size_t cols, double sigma) {
    Matrix m(rows, cols);
    for (double& v : m.data) v = sigma * normal(rng);
    return m;
}

std::uint64_t derive_seed(std::uint64_t master, const char* tag) {
    // FNV-1a over the tag, mixed into the master seed via one splitmix step.
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* p = tag; *p; ++p) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
        h *= 1099511628211ULL;
    }
    RngState s{master ^ h};
    return next_u64(s);
}

}  // namespace gpe
