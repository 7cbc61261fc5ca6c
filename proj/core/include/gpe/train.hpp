#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpe/encoder.hpp"
#include "gpe/ensemble.hpp"
#include "gpe/loss.hpp"
#include "gpe/prompts.hpp"
#include "gpe/synthdata.hpp"

namespace gpe {

struct TrainConfig {
    double lr = 0.01;
    std::size_t batch = 4;
    std::size_t epochs = 30;
    std::size_t shots = 16;
    double lambda = 500.0;
    std::size_t k_main = 9;  // K
    std::size_t k_aux = 6;   // K'
    EnsembleMode mode = EnsembleMode::group_wise;
    bool use_special_tokens = true;
    double tau = 0.01;
    double prompt_init_sigma = 0.02;
    bool cosine_schedule = false;
    std::uint64_t seed = 42;
};

struct PretrainConfig {
    std::size_t steps = 220;
    double lr = 0.05;
    double tau = 0.07;  // contrastive temperature; inference tau stays at w.tau
    std::uint64_t seed = 42;
    EncoderConfig encoder;
};

struct EvalReport {
    double base_acc = 0.0;
    double novel_acc = 0.0;
    double harmonic = 0.0;
    double zero_shot_base = 0.0;
    double zero_shot_novel = 0.0;
    double vendi_text = 0.0;
    double vendi_image = 0.0;
};

struct EpochRow {
    std::size_t epoch = 0;
    LossBreakdown loss;
    EvalReport eval;
};

struct TuneResult {
    PromptSet vis_prompts;
    PromptSet txt_prompts;
    EvalReport report;
    std::vector<EpochRow> trace;
};

struct PretrainReport {
    double final_loss = 0.0;
    double zero_shot_holdout = 0.0;
};

// Stage 1: symmetric InfoNCE over the special-token projections; the result
// is frozen before any prompt tuning.
EncoderWeights pretrain_clip(const Dataset& dataset, const PretrainConfig& cfg,
                             PretrainReport* report = nullptr);

// Stage 2: SGD (no momentum) on L_final over few-shot base samples.
TuneResult tune_prompts(const EncoderWeights& weights, const Dataset& dataset,
                        const TrainConfig& cfg);

// Accuracy/diversity report on held-out samples. train_indices (if given) are
// excluded from base-split evaluation.
EvalReport evaluate(const EncoderWeights& weights, const PromptSet& vis_prompts,
                    const PromptSet& txt_prompts, const Dataset& dataset,
                    const TrainConfig& cfg,
                    const std::vector<std::size_t>* train_indices = nullptr);

// Single forward prediction helpers shared by evaluate() and the CLI.
std::vector<Matrix> class_text_embeddings(const EncoderWeights& weights,
                                          const PromptSet& txt_prompts,
                                          const Dataset& dataset,
                                          const std::vector<std::size_t>& class_ids);
Matrix image_joint_embedding(const EncoderWeights& weights, const PromptSet& vis_prompts,
                             const Matrix& image_tokens);

std::string metrics_csv(const std::vector<EpochRow>& trace);

}  // namespace gpe
