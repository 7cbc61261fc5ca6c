#include <cmath>
#include <vector>

#include "doctest.h"
#include "gpe/loss.hpp"

using namespace gpe;

namespace {

// Small but complete training instance shared by the total_loss tests.
struct TinyInstance {
    EncoderWeights w;
    PromptSet vp, tp;
    std::vector<Matrix> images;
    std::vector<std::size_t> labels;
    std::vector<std::vector<std::size_t>> class_tokens;

    TinyInstance() {
        EncoderConfig cfg;
        cfg.d_v = 8;
        cfg.d_t = 8;
        cfg.d_joint = 4;
        cfg.layers = 1;
        cfg.heads = 2;
        cfg.vocab = 8;
        cfg.n_x = 3;
        cfg.n_y = 3;
        RngState rng{101};
        w = init_encoder_weights(cfg, rng);
        vp = init_prompt_set(w.vis_special, 2, 1, rng, Modality::vision);
        tp = init_prompt_set(w.txt_special, 2, 1, rng, Modality::text);
        images.push_back(random_normal(rng, 3, 8, 1.0));
        images.push_back(random_normal(rng, 3, 8, 1.0));
        labels = {0, 1};
        class_tokens = {{0, 0, 1}, {0, 0, 2}};
    }
};

}  // namespace

TEST_CASE("group cross entropy hand values and clamping") {
    CHECK(group_cross_entropy({0.5, 0.5}, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(group_cross_entropy({0.25, 0.25, 0.25, 0.25}, 2) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK(group_cross_entropy({1.0, 0.0}, 0) == 0.0);

    const std::size_t before = ce_clamp_warning_count();
    const double ce = group_cross_entropy({1.0, 0.0}, 1);
    CHECK(ce == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
    CHECK(ce_clamp_warning_count() == before + 1);

    CHECK_THROWS(group_cross_entropy({0.5, 0.5}, 2));
}

TEST_CASE("covariance matrix and penalty hand values") {
    // identical rows: zero covariance, zero penalty
    Matrix same = Matrix::from_rows({{1, 2}, {1, 2}, {1, 2}});
    Matrix c0 = covariance_matrix(same);
    for (double v : c0.data) CHECK(std::abs(v) < 1e-15);
    CHECK(covariance_penalty(same) == doctest::Approx(0.0).epsilon(1e-15));

    // Z = {(1,0),(0,1)}: C = [[.5,-.5],[-.5,.5]], r = (1/2)(.25+.25) = 0.25
    Matrix basis = Matrix::from_rows({{1, 0}, {0, 1}});
    Matrix c = covariance_matrix(basis);
    CHECK(c(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(covariance_penalty(basis) == doctest::Approx(0.25).epsilon(1e-12));

    // duplicated basis {(1,0),(1,0),(0,1),(0,1)}: C off-diag = -1/3, r = 1/9
    Matrix dup = Matrix::from_rows({{1, 0}, {1, 0}, {0, 1}, {0, 1}});
    CHECK(covariance_penalty(dup) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

    // diagonal-only covariance (uncorrelated axes) gives zero penalty
    Matrix axes = Matrix::from_rows({{1, 0}, {-1, 0}, {0, 2}, {0, -2}});
    CHECK(covariance_penalty(axes) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("covariance penalty is nonnegative and rejects single rows") {
    RngState rng{102};
    for (int i = 0; i < 10; ++i) {
        Matrix z = random_normal(rng, 6, 4, 1.0);
        CHECK(covariance_penalty(z) >= 0.0);
    }
    CHECK_THROWS(covariance_matrix(Matrix(1, 3)));
}

TEST_CASE("total_loss breakdown is internally consistent") {
    TinyInstance inst;
    LossConfig cfg;
    cfg.lambda = 500.0;
    LossResult res = total_loss(inst.images, inst.labels, inst.class_tokens, inst.vp, inst.tp,
                                inst.w, cfg);
    const LossBreakdown& b = res.breakdown;
    CHECK(b.lambda == 500.0);
    CHECK(b.ce_group1 > 0.0);
    CHECK(b.ce_group2 > 0.0);
    CHECK(b.cov_image >= 0.0);
    CHECK(b.cov_text >= 0.0);
    CHECK(b.total == b.ce_group1 + b.ce_group2 + b.lambda * (b.cov_image + b.cov_text));
    CHECK(std::isfinite(b.total));

    // gradient tensors mirror the prompt shapes and are not all zero
    CHECK(res.grads.vis_group1.same_shape(inst.vp.group1));
    CHECK(res.grads.txt_aux.same_shape(inst.tp.auxiliary));
    double norm = 0.0;
    for (double v : res.grads.vis_group1.data) norm += v * v;
    for (double v : res.grads.txt_group2.data) norm += v * v;
    CHECK(norm > 0.0);
}

TEST_CASE("lambda=0 drops the covariance terms from the total") {
    TinyInstance inst;
    LossConfig cfg;
    cfg.lambda = 0.0;
    LossResult res = total_loss(inst.images, inst.labels, inst.class_tokens, inst.vp, inst.tp,
                                inst.w, cfg);
    CHECK(res.breakdown.total == res.breakdown.ce_group1 + res.breakdown.ce_group2);
    CHECK(res.breakdown.cov_image > 0.0);  // still reported
}

TEST_CASE("pooled mode uses a single cross-entropy term") {
    TinyInstance inst;
    LossConfig cfg;
    cfg.mode = EnsembleMode::pooled;
    LossResult res = total_loss(inst.images, inst.labels, inst.class_tokens, inst.vp, inst.tp,
                                inst.w, cfg);
    CHECK(res.breakdown.ce_group1 > 0.0);
    CHECK(res.breakdown.ce_group2 == 0.0);
    CHECK(res.breakdown.total ==
          res.breakdown.ce_group1 +
              res.breakdown.lambda * (res.breakdown.cov_image + res.breakdown.cov_text));
}

TEST_CASE("pair_wise mode runs and differs from group_wise") {
    TinyInstance inst;
    LossConfig g, p;
    p.mode = EnsembleMode::pair_wise;
    LossResult rg = total_loss(inst.images, inst.labels, inst.class_tokens, inst.vp, inst.tp,
                               inst.w, g);
    LossResult rp = total_loss(inst.images, inst.labels, inst.class_tokens, inst.vp, inst.tp,
                               inst.w, p);
    CHECK(std::isfinite(rp.breakdown.total));
    CHECK(rg.breakdown.total != rp.breakdown.total);
}
