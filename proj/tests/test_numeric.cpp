#include <cmath>
#include <limits>

#include "doctest.h"
#include "gpe/numeric.hpp"
#include "gpe/rng.hpp"

using namespace gpe;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Independent triple-loop product, coded apart from gpe::matmul.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}
}  // namespace

TEST_CASE("matmul identity and hand cases") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Matrix r = matmul(Matrix::identity(2), a);
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.data[i] == a.data[i]);

    Matrix b = Matrix::from_rows({{0}, {1}});
    Matrix p = matmul(a, b);
    CHECK(p(0, 0) == 2.0);
    CHECK(p(1, 0) == 4.0);

    CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), ShapeError);
}

TEST_CASE("matmul matches triple-loop oracle") {
    RngState rng{123};
    Matrix a = random_normal(rng, 5, 7, 1.0);
    Matrix b = random_normal(rng, 7, 3, 1.0);
    Matrix got = matmul(a, b);
    Matrix want = matmul_oracle(a, b);
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
}

TEST_CASE("matmul associativity on random triples") {
    RngState rng{7};
    Matrix a = random_normal(rng, 4, 5, 1.0);
    Matrix b = random_normal(rng, 5, 6, 1.0);
    Matrix c = random_normal(rng, 6, 3, 1.0);
    Matrix l = matmul(matmul(a, b), c);
    Matrix r = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < l.size(); ++i) {
        const double denom = std::max(std::abs(l.data[i]), 1.0);
        CHECK(std::abs(l.data[i] - r.data[i]) / denom < 1e-9);
    }
}

TEST_CASE("softmax_rows basics") {
    Matrix x = Matrix::from_rows({{0, 0}});
    Matrix p = softmax_rows(x);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(0, 1) == doctest::Approx(0.5));

    Matrix m = Matrix::from_rows({{-kInf, 0}});
    Matrix q = softmax_rows(m);
    CHECK(q(0, 0) == 0.0);
    CHECK(q(0, 1) == 1.0);

    Matrix bad = Matrix::from_rows({{-kInf, -kInf}});
    CHECK_THROWS_AS(softmax_rows(bad), DomainError);
}

TEST_CASE("softmax_rows matches direct exp/sum oracle") {
    Matrix x = Matrix::from_rows({{1, 2, 3}});
    Matrix p = softmax_rows(x);
    const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(p(0, j) - std::exp(1.0 + j) / z) < 1e-12);
    double sum = p(0, 0) + p(0, 1) + p(0, 2);
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("layer_norm") {
    Matrix gain = Matrix::from_rows({{1, 1, 1}});
    Matrix bias(1, 3);
    Matrix c = Matrix::from_rows({{5, 5, 5}});
    Matrix out = layer_norm(c, gain, bias);
    for (double v : out.data) CHECK(std::abs(v) < 1e-6);

    Matrix g2 = Matrix::from_rows({{1, 1}});
    Matrix b2(1, 2);
    Matrix pm = Matrix::from_rows({{-1, 1}});
    Matrix out2 = layer_norm(pm, g2, b2, 1e-14);
    CHECK(out2(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(out2(0, 1) == doctest::Approx(1.0).epsilon(1e-6));

    RngState rng{99};
    Matrix x = random_normal(rng, 1, 64, 3.0);
    Matrix g = Matrix(1, 64);
    for (double& v : g.data) v = 1.0;
    Matrix out3 = layer_norm(x, g, Matrix(1, 64), 1e-5);
    double mean = 0.0, var = 0.0;
    for (double v : out3.data) mean += v;
    mean /= 64.0;
    for (double v : out3.data) var += (v - mean) * (v - mean);
    var /= 64.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-4);
}

TEST_CASE("masked_attention diagonal-only mask returns v") {
    RngState rng{5};
    Matrix q = random_normal(rng, 3, 4, 1.0);
    Matrix k = random_normal(rng, 3, 4, 1.0);
    Matrix v = random_normal(rng, 3, 4, 1.0);
    Matrix mask(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            if (i != j) mask(i, j) = -kInf;
    Matrix out = masked_attention(q, k, v, mask, 0.5);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data[i] == v.data[i]);
}

TEST_CASE("masked_attention uniform with identical keys") {
    RngState rng{6};
    Matrix q = random_normal(rng, 2, 4, 1.0);
    Matrix k(2, 4);
    for (double& x : k.data) x = 0.7;
    Matrix v = random_normal(rng, 2, 4, 1.0);
    Matrix mask(2, 2);
    Matrix out = masked_attention(q, k, v, mask, 0.5);
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(out(0, j) == doctest::Approx(0.5 * (v(0, j) + v(1, j))).epsilon(1e-12));
}

TEST_CASE("masked_attention matches per-row weighted-sum oracle") {
    RngState rng{8};
    const std::size_t n = 4, d = 3;
    Matrix q = random_normal(rng, n, d, 1.0);
    Matrix k = random_normal(rng, n, d, 1.0);
    Matrix v = random_normal(rng, n, d, 1.0);
    Matrix mask(n, n);
    mask(0, 3) = -kInf;
    mask(2, 0) = -kInf;
    mask(2, 1) = -kInf;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix out = masked_attention(q, k, v, mask, scale);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> w(n, 0.0);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(mask(i, j))) continue;
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) s += q(i, t) * k(j, t);
            w[j] = std::exp(s * scale);
            z += w[j];
        }
        for (std::size_t t = 0; t < d; ++t) {
            double expect = 0.0;
            for (std::size_t j = 0; j < n; ++j) expect += w[j] / z * v(j, t);
            CHECK(std::abs(out(i, t) - expect) < 1e-12);
        }
    }
}

TEST_CASE("masked_attention puts exactly zero weight on masked columns") {
    RngState rng{9};
    Matrix q = random_normal(rng, 3, 4, 1.0);
    Matrix k = random_normal(rng, 3, 4, 1.0);
    Matrix v = random_normal(rng, 3, 4, 1.0);
    Matrix mask(3, 3);
    mask(0, 2) = -kInf;
    mask(1, 0) = -kInf;
    Matrix out1 = masked_attention(q, k, v, mask, 0.7);
    Matrix va = v;
    for (std::size_t j = 0; j < 4; ++j) va(2, j) += 1e6;  // row 2 masked for row 0
    Matrix out_a = masked_attention(q, k, va, mask, 0.7);
    Matrix vb = v;
    for (std::size_t j = 0; j < 4; ++j) vb(0, j) -= 42.0;  // row 0 masked for row 1
    Matrix out_b = masked_attention(q, k, vb, mask, 0.7);
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(out1(0, j) == out_a(0, j));
        CHECK(out1(1, j) == out_b(1, j));
    }
}

TEST_CASE("cosine_similarity") {
    CHECK(cosine_similarity(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{1, 0}})) == 1.0);
    CHECK(cosine_similarity(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{0, 1}})) == 0.0);
    CHECK(cosine_similarity(Matrix::from_rows({{3, 4}}), Matrix::from_rows({{4, 3}})) ==
          doctest::Approx(0.96).epsilon(1e-14));
    CHECK_THROWS_AS(cosine_similarity(Matrix(1, 2), Matrix::from_rows({{1, 0}})), DomainError);
}

TEST_CASE("splitmix64 reference sequence and uniform sanity") {
    RngState rng{0};
    CHECK(next_u64(rng) == 0xE220A8397B1DCDAFULL);

    RngState a{12345}, b{12345};
    for (int i = 0; i < 1000; ++i) CHECK(next_u64(a) == next_u64(b));

    RngState u{2024};
    double mean = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) mean += uniform(u);
    mean /= n;
    CHECK(std::abs(mean - 0.5) < 0.01);
}

TEST_CASE("finite_diff_grad") {
    auto sumsq = [](const Matrix& x) {
        double s = 0.0;
        for (double v : x.data) s += v * v;
        return s;
    };
    RngState rng{3};
    Matrix x = random_normal(rng, 2, 3, 1.0);
    Matrix g = finite_diff_grad(sumsq, x);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(g.data[i] - 2.0 * x.data[i]) < 1e-8);

    auto constf = [](const Matrix&) { return 3.5; };
    Matrix gz = finite_diff_grad(constf, x);
    for (double v : gz.data) CHECK(v == 0.0);
}
