#pragma once

#include "gpe/masking.hpp"
#include "gpe/matrix.hpp"
#include "gpe/rng.hpp"

namespace gpe {

// Learnable prompt parameters of one encoder: P = [P1; P2; P'].
// These are the only tensors updated during tuning.
struct PromptSet {
    Matrix group1;     // K x d
    Matrix group2;     // K x d
    Matrix auxiliary;  // K' x d
    Modality modality = Modality::vision;

    std::size_t k_main() const { return group1.rows; }
    std::size_t k_aux() const { return auxiliary.rows; }
};

struct TokenSequence {
    Matrix tokens;  // n_total x d, band order [special; features; g1; g2; aux]
    SequenceLayout layout;
};

// Main groups start from copies of the special-token embedding plus Gaussian
// noise (sigma, default 0.02) to break symmetry; auxiliary rows are Gaussian.
PromptSet init_prompt_set(const Matrix& special_token_embedding, std::size_t k_main,
                          std::size_t k_aux, RngState& rng, Modality modality,
                          double sigma = 0.02);

TokenSequence assemble_sequence(const Matrix& special, const Matrix& features,
                                const PromptSet& prompts);

}  // namespace gpe
