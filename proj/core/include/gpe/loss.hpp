#pragma once

#include <cstddef>
#include <vector>

#include "gpe/encoder.hpp"
#include "gpe/ensemble.hpp"
#include "gpe/matrix.hpp"
#include "gpe/prompts.hpp"

namespace gpe {

struct LossBreakdown {
    double ce_group1 = 0.0;
    double ce_group2 = 0.0;
    double cov_image = 0.0;  // r(Z)
    double cov_text = 0.0;   // r(Z')
    double lambda = 0.0;
    double total = 0.0;
};

struct PromptGradients {
    Matrix vis_group1, vis_group2, vis_aux;
    Matrix txt_group1, txt_group2, txt_aux;
};

struct LossConfig {
    double lambda = 500.0;
    double tau = 0.01;
    EnsembleMode mode = EnsembleMode::group_wise;
};

struct LossResult {
    LossBreakdown breakdown;
    PromptGradients grads;
};

// -log p(label), batch-averaged by the caller. Zero probability is clamped at
// 1e-12; each clamp bumps the warning counter.
double group_cross_entropy(const std::vector<double>& probabilities, std::size_t label);
std::size_t& ce_clamp_warning_count();

// Unbiased sample covariance of the 2K prompt embeddings (rows of Z).
Matrix covariance_matrix(const Matrix& z);

// r(Z) = (1/d) sum of squared off-diagonals of C(Z).
double covariance_penalty(const Matrix& z);

// L_final over a batch: CE terms from per-group predictions averaged over the
// batch, r(Z) averaged over images, r(Z') averaged over the task's class set.
// Returns analytic gradients w.r.t. every prompt parameter.
LossResult total_loss(const std::vector<Matrix>& batch_images,
                      const std::vector<std::size_t>& labels,
                      const std::vector<std::vector<std::size_t>>& class_token_ids,
                      const PromptSet& vis_prompts, const PromptSet& txt_prompts,
                      const EncoderWeights& weights, const LossConfig& cfg);

}  // namespace gpe
