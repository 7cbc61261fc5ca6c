#pragma once

#include <cstdint>
#include <vector>

#include "gpe/autodiff.hpp"
#include "gpe/masking.hpp"
#include "gpe/matrix.hpp"
#include "gpe/prompts.hpp"
#include "gpe/rng.hpp"

namespace gpe {

// Miniature frozen dual encoder ("tiny CLIP"). Pre-norm blocks with GELU MLP,
// masked multi-head self-attention, joint-space projection.
struct EncoderConfig {
    std::size_t d_v = 32;
    std::size_t d_t = 32;
    std::size_t d_joint = 16;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t mlp_ratio = 2;
    std::size_t vocab = 64;
    std::size_t n_x = 8;
    std::size_t n_y = 8;
    double eps = 1e-5;
    // The pipeline default aggregates text at the last input position, as real
    // CLIP does; special-first keeps the special token at position 1.
    LayoutVariant text_variant = LayoutVariant::eos_last;

    void validate() const;
};

struct LayerWeights {
    Matrix wq, bq, wk, bk, wv, bv, wo, bo;  // attention projections
    Matrix w1, b1, w2, b2;                  // MLP
    Matrix ln1_g, ln1_b, ln2_g, ln2_b;
};

struct TowerWeights {
    std::vector<LayerWeights> layers;
};

struct EncoderWeights {
    EncoderConfig cfg;
    TowerWeights vision, text;
    Matrix vis_in_w, vis_in_b;  // feature input projection (d_v x d_v, 1 x d_v)
    Matrix tok_embed;           // vocab x d_t
    Matrix pos_embed;           // (1 + n_y) x d_t, input band only
    Matrix vis_special;         // 1 x d_v  ([CLS]-like)
    Matrix txt_special;         // 1 x d_t  ([EOS]-like)
    Matrix proj_v;              // d_v x d_joint
    Matrix proj_t;              // d_t x d_joint
    double tau = 0.01;
};

EncoderWeights init_encoder_weights(const EncoderConfig& cfg, RngState& rng);

// FNV-1a over every weight byte; the freeze contract is asserted with this.
std::uint64_t weights_hash(const EncoderWeights& w);

// Full last-layer sequence x^(L). prompts may be null (bare input band, used
// during pretraining); mask dimension must match the assembled sequence.
Matrix encode_image(const Matrix& features, const PromptSet* prompts,
                    const EncoderWeights& w, const Matrix& mask);
Matrix encode_text(const std::vector<std::size_t>& token_ids, const PromptSet* prompts,
                   const EncoderWeights& w, const Matrix& mask);

// Eq. 1: select special + 2K main-prompt rows and project. Returns
// (2K+1) x d_joint with row 0 = special; auxiliary rows are dropped.
Matrix project_vision(const Matrix& x_last, const EncoderWeights& w, const SequenceLayout& layout);
Matrix project_text(const Matrix& y_last, const EncoderWeights& w, const SequenceLayout& layout);

// --- autodiff mirrors (training path) ---

struct LayerVars {
    ad::Var wq, bq, wk, bk, wv, bv, wo, bo, w1, b1, w2, b2, ln1_g, ln1_b, ln2_g, ln2_b;
};
struct WeightVars {
    EncoderConfig cfg;
    std::vector<LayerVars> vision, text;
    ad::Var vis_in_w, vis_in_b, tok_embed, pos_embed, vis_special, txt_special, proj_v, proj_t;
    double tau = 0.01;
    std::vector<ad::Var> all;  // every wrapped tensor, update order
};
struct PromptVars {
    ad::Var group1, group2, auxiliary;
    std::size_t k_main = 0, k_aux = 0;
};

WeightVars wrap_weights(const EncoderWeights& w, bool trainable);

// Every weight tensor, in the same order wrap_weights() fills WeightVars::all.
std::vector<Matrix*> weight_pointers(EncoderWeights& w);
PromptVars wrap_prompts(const PromptSet& p, bool trainable);

ad::Var encode_image_ad(const Matrix& features, const PromptVars* prompts, const WeightVars& w,
                        const Matrix& mask);
ad::Var encode_text_ad(const std::vector<std::size_t>& token_ids, const PromptVars* prompts,
                       const WeightVars& w, const Matrix& mask);
ad::Var project_vision_ad(const ad::Var& x_last, const WeightVars& w,
                          const SequenceLayout& layout);
ad::Var project_text_ad(const ad::Var& y_last, const WeightVars& w, const SequenceLayout& layout);

}  // namespace gpe
