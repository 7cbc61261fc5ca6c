#include "doctest.h"
#include "gpe/gradcheck.hpp"

TEST_CASE("analytic prompt gradients match finite differences") {
    for (std::uint64_t seed : {7ULL, 42ULL}) {
        gpe::GradCheckResult r = gpe::run_gradcheck(seed);
        INFO("seed ", seed, " worst tensor ", r.worst_tensor);
        CHECK(r.max_rel_error <= 1e-4);
        CHECK(r.max_rel_error >= 0.0);
        CHECK(!r.worst_tensor.empty());
    }
}
