#include "gpe/loss.hpp"

#include <cmath>

namespace gpe {

double group_cross_entropy(const std::vector<double>& probabilities, std::size_t label) {
    if (label >= probabilities.size()) throw DomainError("group_cross_entropy: label out of range");
    double p = probabilities[label];
    if (p < 1e-12) {
        p = 1e-12;
        ++ce_clamp_warning_count();
    }
    return -std::log(p);
}

std::size_t& ce_clamp_warning_count() {
    static std::size_t count = 0;
    return count;
}

Matrix covariance_matrix(const Matrix& z) {
    if (z.rows < 2) throw DomainError("covariance_matrix: need at least 2 rows");
    const std::size_t n = z.rows, d = z.cols;
    Matrix mean(1, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean(0, j) += z(i, j);
    for (double& v : mean.data) v /= static_cast<double>(n);
    Matrix c(d, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < d; ++a) {
            const double da = z(i, a) - mean(0, a);
            for (std::size_t b = 0; b < d; ++b) c(a, b) += da * (z(i, b) - mean(0, b));
        }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (double& v : c.data) v *= inv;
    return c;
}

double covariance_penalty(const Matrix& z) {
    const Matrix c = covariance_matrix(z);
    double sum = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i)
        for (std::size_t j = 0; j < c.cols; ++j)
            if (i != j) sum += c(i, j) * c(i, j);
    return sum / static_cast<double>(z.cols);
}

namespace {

// r(Z) as an autodiff subgraph: C = Zc^T Zc / (2K-1), r = offdiag(C)^2 / d.
ad::Var covariance_penalty_ad(const ad::Var& z) {
    const std::size_t n = z.rows();
    const std::size_t d = z.cols();
    ad::Var centered = ad::sub_row_broadcast(z, ad::mean_rows(z));
    ad::Var c = ad::scale(ad::matmul(ad::transpose(centered), centered),
                          1.0 / static_cast<double>(n - 1));
    return ad::scale(ad::offdiag_square_sum(c), 1.0 / static_cast<double>(d));
}

// Mean of a rectangular block of S, as a 1x1 Var.
ad::Var block_mean(const ad::Var& s, std::size_t r0, std::size_t r1, std::size_t c0,
                   std::size_t c1) {
    ad::Var blk = ad::slice_cols(ad::slice_rows(s, r0, r1), c0, c1);
    return ad::scale(ad::sum_all(blk), 1.0 / static_cast<double>((r1 - r0) * (c1 - c0)));
}

ad::Var diag_mean(const ad::Var& s) {
    const std::size_t n = s.rows();
    return ad::scale(ad::sum_all(ad::hadamard(s, ad::constant(Matrix::identity(n)))),
                     1.0 / static_cast<double>(n));
}

Matrix grad_or_zeros(const ad::Var& v) {
    if (v.grad().size() == 0) return Matrix(v.rows(), v.cols());
    return v.grad();
}

}  // namespace

LossResult total_loss(const std::vector<Matrix>& batch_images,
                      const std::vector<std::size_t>& labels,
                      const std::vector<std::vector<std::size_t>>& class_token_ids,
                      const PromptSet& vis_prompts, const PromptSet& txt_prompts,
                      const EncoderWeights& weights, const LossConfig& cfg) {
    if (batch_images.empty()) throw DomainError("total_loss: empty batch");
    if (batch_images.size() != labels.size()) throw ShapeError("total_loss: label count mismatch");
    const std::size_t k = vis_prompts.k_main();
    const std::size_t n_classes = class_token_ids.size();

    WeightVars wv = wrap_weights(weights, /*trainable=*/false);
    PromptVars vp = wrap_prompts(vis_prompts, /*trainable=*/true);
    PromptVars tp = wrap_prompts(txt_prompts, /*trainable=*/true);

    const SequenceLayout vis_layout{weights.cfg.n_x, k, vis_prompts.k_aux()};
    const SequenceLayout txt_layout{weights.cfg.n_y, k, txt_prompts.k_aux()};
    const Matrix vis_mask = build_vision_mask(vis_layout).entries;
    const Matrix txt_mask =
        apply_layout_variant(build_text_mask(txt_layout), weights.cfg.text_variant).entries;

    // Text pathway once per class; shared by every image in the batch.
    std::vector<ad::Var> t_full, t_main_norm;
    ad::Var cov_text_sum;
    for (std::size_t c = 0; c < n_classes; ++c) {
        ad::Var y_last = encode_text_ad(class_token_ids[c], &tp, wv, txt_mask);
        ad::Var t = project_text_ad(y_last, wv, txt_layout);
        // The penalty acts on the same unit-norm embeddings the similarities
        // use; raw projections have unbounded scale and destabilize lambda.
        ad::Var zn = ad::normalize_rows(ad::slice_rows(t, 1, 1 + 2 * k));
        ad::Var r = covariance_penalty_ad(zn);
        cov_text_sum = cov_text_sum.defined() ? ad::add(cov_text_sum, r) : r;
        t_full.push_back(t);
        t_main_norm.push_back(zn);
    }
    ad::Var cov_text = ad::scale(cov_text_sum, 1.0 / static_cast<double>(n_classes));

    ad::Var ce1_sum, ce2_sum, cov_img_sum;
    for (std::size_t b = 0; b < batch_images.size(); ++b) {
        ad::Var x_last = encode_image_ad(batch_images[b], &vp, wv, vis_mask);
        ad::Var v = project_vision_ad(x_last, wv, vis_layout);
        ad::Var vn = ad::normalize_rows(ad::slice_rows(v, 1, 1 + 2 * k));
        ad::Var r = covariance_penalty_ad(vn);
        cov_img_sum = cov_img_sum.defined() ? ad::add(cov_img_sum, r) : r;
        std::vector<ad::Var> logits1, logits2;
        for (std::size_t c = 0; c < n_classes; ++c) {
            ad::Var s = ad::matmul(vn, ad::transpose(t_main_norm[c]));  // 2K x 2K cosines
            switch (cfg.mode) {
                case EnsembleMode::group_wise:
                    logits1.push_back(ad::scale(block_mean(s, 0, k, 0, k), 1.0 / cfg.tau));
                    logits2.push_back(
                        ad::scale(block_mean(s, k, 2 * k, k, 2 * k), 1.0 / cfg.tau));
                    break;
                case EnsembleMode::pooled:
                    logits1.push_back(
                        ad::scale(block_mean(s, 0, 2 * k, 0, 2 * k), 1.0 / cfg.tau));
                    break;
                case EnsembleMode::pair_wise:
                    logits1.push_back(ad::scale(diag_mean(s), 1.0 / cfg.tau));
                    break;
            }
        }
        const std::vector<std::size_t> lbl{labels[b]};
        ad::Var ce1 = ad::cross_entropy_from_logits(ad::concat_cols(logits1), lbl);
        ce1_sum = ce1_sum.defined() ? ad::add(ce1_sum, ce1) : ce1;
        if (cfg.mode == EnsembleMode::group_wise) {
            ad::Var ce2 = ad::cross_entropy_from_logits(ad::concat_cols(logits2), lbl);
            ce2_sum = ce2_sum.defined() ? ad::add(ce2_sum, ce2) : ce2;
        }
    }
    const double inv_b = 1.0 / static_cast<double>(batch_images.size());
    ad::Var ce1 = ad::scale(ce1_sum, inv_b);
    ad::Var cov_img = ad::scale(cov_img_sum, inv_b);
    ad::Var total;
    ad::Var ce2;
    if (cfg.mode == EnsembleMode::group_wise) {
        ce2 = ad::scale(ce2_sum, inv_b);
        total = ad::add(ce1, ce2);
    } else {
        total = ce1;
    }
    total = ad::add(total, ad::scale(ad::add(cov_img, cov_text), cfg.lambda));

    ad::backward(total);

    LossResult res;
    res.breakdown.ce_group1 = ce1.scalar();
    res.breakdown.ce_group2 = ce2.defined() ? ce2.scalar() : 0.0;
    res.breakdown.cov_image = cov_img.scalar();
    res.breakdown.cov_text = cov_text.scalar();
    res.breakdown.lambda = cfg.lambda;
    res.breakdown.total = total.scalar();
    res.grads.vis_group1 = grad_or_zeros(vp.group1);
    res.grads.vis_group2 = grad_or_zeros(vp.group2);
    res.grads.vis_aux = grad_or_zeros(vp.auxiliary);
    res.grads.txt_group1 = grad_or_zeros(tp.group1);
    res.grads.txt_group2 = grad_or_zeros(tp.group2);
    res.grads.txt_aux = grad_or_zeros(tp.auxiliary);
    return res;
}

}  // namespace gpe
