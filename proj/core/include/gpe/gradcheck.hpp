#pragma once

#include <cstdint>
#include <string>

namespace gpe {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
};

// Analytic gradients of L_final vs central finite differences (h = 1e-5) on a
// 2-class, K=2, K'=1, d=4 instance. Checks every prompt parameter in both
// modalities.
GradCheckResult run_gradcheck(std::uint64_t seed);

}  // namespace gpe
