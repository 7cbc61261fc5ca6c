#include <cmath>
#include <vector>

#include "doctest.h"
#include "gpe/ensemble.hpp"
#include "gpe/numeric.hpp"
#include "gpe/rng.hpp"

using namespace gpe;

namespace {

// Brute-force double loop over group rows (row 0 = special).
double group_sim_oracle(const Matrix& v, const Matrix& t, int group, std::size_t k) {
    const std::size_t begin = group == 1 ? 1 : 1 + k;
    double s = 0.0;
    for (std::size_t i = begin; i < begin + k; ++i)
        for (std::size_t j = begin; j < begin + k; ++j)
            s += cosine_similarity(v.row(i), t.row(j));
    return s / static_cast<double>(k * k);
}

std::vector<double> softmax_vec(std::vector<double> x) {
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double z = 0.0;
    for (double& v : x) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : x) v /= z;
    return x;
}

Matrix random_rows(RngState& rng, std::size_t n, std::size_t d) {
    return random_normal(rng, n, d, 1.0);
}

}  // namespace

TEST_CASE("group_similarity matches double-loop oracle") {
    const std::size_t k = 3, d = 5;
    RngState rng{21};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    Matrix t = random_rows(rng, 2 * k + 1, d);
    CHECK(group_similarity(v, t, 1) == doctest::Approx(group_sim_oracle(v, t, 1, k)).epsilon(1e-12));
    CHECK(group_similarity(v, t, 2) == doctest::Approx(group_sim_oracle(v, t, 2, k)).epsilon(1e-12));
}

TEST_CASE("group_similarity degenerate K=1 equals plain cosine") {
    RngState rng{22};
    Matrix v = random_rows(rng, 3, 4);
    Matrix t = random_rows(rng, 3, 4);
    CHECK(group_similarity(v, t, 1) ==
          doctest::Approx(cosine_similarity(v.row(1), t.row(1))).epsilon(1e-14));
}

TEST_CASE("group_prediction is a softmax over per-class similarities") {
    const std::size_t k = 2, d = 4, n_cls = 3;
    RngState rng{23};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    std::vector<Matrix> t;
    for (std::size_t c = 0; c < n_cls; ++c) t.push_back(random_rows(rng, 2 * k + 1, d));
    const double tau = 0.01;

    std::vector<double> got = group_prediction(v, t, 2, tau);
    std::vector<double> sims;
    for (const Matrix& tc : t) sims.push_back(group_sim_oracle(v, tc, 2, k) / tau);
    std::vector<double> want = softmax_vec(sims);
    REQUIRE(got.size() == n_cls);
    double sum = 0.0;
    for (std::size_t c = 0; c < n_cls; ++c) {
        CHECK(got[c] == doctest::Approx(want[c]).epsilon(1e-10));
        sum += got[c];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full ensemble matches the per-pair softmax-average oracle") {
    const std::size_t k = 2, d = 4, n_cls = 3;
    RngState rng{24};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    std::vector<Matrix> t;
    for (std::size_t c = 0; c < n_cls; ++c) t.push_back(random_rows(rng, 2 * k + 1, d));
    const double tau = 0.02;

    for (bool specials : {true, false}) {
        EnsembleConfig cfg;
        cfg.use_special_tokens = specials;
        std::vector<double> got = full_ensemble_predict(v, t, cfg, tau);

        const std::size_t begin = specials ? 0 : 1;
        const std::size_t end = 2 * k + 1;
        std::vector<double> want(n_cls, 0.0);
        std::size_t pairs = 0;
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t j = begin; j < end; ++j) {
                std::vector<double> logits;
                for (const Matrix& tc : t)
                    logits.push_back(cosine_similarity(v.row(i), tc.row(j)) / tau);
                std::vector<double> p = softmax_vec(logits);
                for (std::size_t c = 0; c < n_cls; ++c) want[c] += p[c];
                ++pairs;
            }
        CHECK(pairs == (specials ? (2 * k + 1) * (2 * k + 1) : 4 * k * k));
        for (std::size_t c = 0; c < n_cls; ++c)
            CHECK(got[c] == doctest::Approx(want[c] / static_cast<double>(pairs)).epsilon(1e-12));
    }
}

TEST_CASE("duplicate ensemble members collapse to a single classifier exactly") {
    const std::size_t k = 3, d = 4, n_cls = 4;
    RngState rng{25};
    Matrix v0 = random_rows(rng, 1, d);
    Matrix v(2 * k + 1, d);
    for (std::size_t i = 0; i < v.rows; ++i)
        for (std::size_t j = 0; j < d; ++j) v(i, j) = v0(0, j);
    std::vector<Matrix> t;
    std::vector<Matrix> t0;
    for (std::size_t c = 0; c < n_cls; ++c) {
        Matrix r = random_rows(rng, 1, d);
        Matrix tc(2 * k + 1, d);
        for (std::size_t i = 0; i < tc.rows; ++i)
            for (std::size_t j = 0; j < d; ++j) tc(i, j) = r(0, j);
        t.push_back(tc);
        t0.push_back(r);
    }
    const double tau = 0.01;
    EnsembleConfig cfg;
    std::vector<double> ens = full_ensemble_predict(v, t, cfg, tau);

    std::vector<double> logits;
    for (std::size_t c = 0; c < n_cls; ++c)
        logits.push_back(cosine_similarity(v0, t0[c]) / tau);
    std::vector<double> single = softmax_vec(logits);
    // identical pairs produce identical per-pair distributions; the final
    // average rounds once, so equality holds to ~1 ulp
    for (std::size_t c = 0; c < n_cls; ++c)
        CHECK(ens[c] == doctest::Approx(single[c]).epsilon(1e-14));

    // Eq. 2 side: the group similarity equals the plain cosine
    CHECK(group_similarity(v, t[0], 1) ==
          doctest::Approx(cosine_similarity(v0, t0[0])).epsilon(1e-14));
}

TEST_CASE("pairwise similarity matches the index-matched loop") {
    const std::size_t k = 3, d = 6;
    RngState rng{26};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    Matrix t = random_rows(rng, 2 * k + 1, d);
    std::vector<double> got = pairwise_similarity(v, t);
    REQUIRE(got.size() == 2 * k);
    for (std::size_t i = 0; i < 2 * k; ++i)
        CHECK(got[i] ==
              doctest::Approx(cosine_similarity(v.row(i + 1), t.row(i + 1))).epsilon(1e-12));
}

TEST_CASE("pooled similarity matches the full cross-mean loop") {
    const std::size_t k = 2, d = 5;
    RngState rng{27};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    Matrix t = random_rows(rng, 2 * k + 1, d);
    double want = 0.0;
    for (std::size_t i = 1; i <= 2 * k; ++i)
        for (std::size_t j = 1; j <= 2 * k; ++j)
            want += cosine_similarity(v.row(i), t.row(j));
    want /= static_cast<double>(4 * k * k);
    CHECK(pooled_similarity(v, t) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("prediction vectors always normalize") {
    const std::size_t k = 2, d = 4;
    RngState rng{28};
    Matrix v = random_rows(rng, 2 * k + 1, d);
    std::vector<Matrix> t;
    for (int c = 0; c < 5; ++c) t.push_back(random_rows(rng, 2 * k + 1, d));
    EnsembleConfig cfg;
    std::vector<double> p = full_ensemble_predict(v, t, cfg, 0.01);
    double sum = 0.0;
    for (double x : p) {
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
}
