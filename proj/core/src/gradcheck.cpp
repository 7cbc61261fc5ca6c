#include "gpe/gradcheck.hpp"

#include <cmath>
#include <vector>

#include "gpe/loss.hpp"
#include "gpe/numeric.hpp"

namespace gpe {

GradCheckResult run_gradcheck(std::uint64_t seed) {
    EncoderConfig enc;
    enc.d_v = 8;
    enc.d_t = 8;
    enc.d_joint = 4;
    enc.layers = 1;
    enc.heads = 2;
    enc.mlp_ratio = 2;
    enc.vocab = 8;
    enc.n_x = 2;
    enc.n_y = 2;
    RngState rng{derive_seed(seed, "gradcheck")};
    EncoderWeights weights = init_encoder_weights(enc, rng);

    const std::size_t k = 2, ka = 1;
    PromptSet vis = init_prompt_set(weights.vis_special, k, ka, rng, Modality::vision);
    PromptSet txt = init_prompt_set(weights.txt_special, k, ka, rng, Modality::text);

    const std::vector<Matrix> images{random_normal(rng, enc.n_x, enc.d_v, 1.0),
                                     random_normal(rng, enc.n_x, enc.d_v, 1.0)};
    const std::vector<std::size_t> labels{0, 1};
    const std::vector<std::vector<std::size_t>> class_tokens{{0, 1}, {0, 2}};

    LossConfig cfg;
    cfg.lambda = 500.0;
    cfg.tau = 0.01;

    const LossResult analytic = total_loss(images, labels, class_tokens, vis, txt, weights, cfg);

    struct Target {
        const char* name;
        Matrix PromptSet::* field;
        PromptSet* owner;
    };
    std::vector<Target> targets{
        {"vis.group1", &PromptSet::group1, &vis},    {"vis.group2", &PromptSet::group2, &vis},
        {"vis.aux", &PromptSet::auxiliary, &vis},    {"txt.group1", &PromptSet::group1, &txt},
        {"txt.group2", &PromptSet::group2, &txt},    {"txt.aux", &PromptSet::auxiliary, &txt},
    };
    const Matrix* analytic_grads[] = {&analytic.grads.vis_group1, &analytic.grads.vis_group2,
                                      &analytic.grads.vis_aux,    &analytic.grads.txt_group1,
                                      &analytic.grads.txt_group2, &analytic.grads.txt_aux};

    GradCheckResult res;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        PromptSet& owner = *targets[t].owner;
        Matrix PromptSet::* field = targets[t].field;
        auto f = [&](const Matrix& x) {
            const Matrix saved = owner.*field;
            owner.*field = x;
            const double val =
                total_loss(images, labels, class_tokens, vis, txt, weights, cfg).breakdown.total;
            owner.*field = saved;
            return val;
        };
        const Matrix fd = finite_diff_grad(f, owner.*field, 1e-5);
        const Matrix& an = *analytic_grads[t];
        for (std::size_t i = 0; i < fd.size(); ++i) {
            const double denom = std::max({std::abs(fd.data[i]), std::abs(an.data[i]), 1e-6});
            const double rel = std::abs(fd.data[i] - an.data[i]) / denom;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_tensor = targets[t].name;
            }
        }
    }
    return res;
}

}  // namespace gpe
