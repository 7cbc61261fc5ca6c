#pragma once

#include <vector>

#include "gpe/matrix.hpp"

namespace gpe {

enum class EnsembleMode { group_wise, pair_wise, pooled };

struct EnsembleConfig {
    EnsembleMode mode = EnsembleMode::group_wise;
    bool use_special_tokens = true;  // inference only
    bool pre_softmax_train = true;
};

// V, T: (2K+1) x d joint embeddings, row 0 = special token projection.

// Eq. 2: mean of the K x K intra-group cosine similarities.
double group_similarity(const Matrix& v, const Matrix& t, int group);

// Softmax over classes of sim/tau, sims averaged before the softmax.
std::vector<double> group_prediction(const Matrix& v, const std::vector<Matrix>& t_classes,
                                     int group, double tau);

// Eq. 3: average of per-pair softmax distributions over all (2K+1)^2 pairs;
// with use_special_tokens off, over the (2K)^2 main-prompt pairs.
std::vector<double> full_ensemble_predict(const Matrix& v, const std::vector<Matrix>& t_classes,
                                          const EnsembleConfig& cfg, double tau);

// Ablation: 2K index-matched logits cos(v_i, t_i).
std::vector<double> pairwise_similarity(const Matrix& v, const Matrix& t);

// Pooled ablation ("w/o grouping"): mean over all 2K x 2K cross cosines.
double pooled_similarity(const Matrix& v, const Matrix& t);

}  // namespace gpe
