#pragma once

#include <cstddef>
#include <string>

#include "gpe/matrix.hpp"

namespace gpe {

enum class Modality { vision, text };
enum class LayoutVariant { special_first, eos_last };

// Index bands of an encoder input sequence, 0-based internally:
//   [special][features x n_features][group1 x k_main][group2 x k_main][aux x k_aux]
// Under eos-last (text only), special and features swap:
//   [features x n_features][special][group1]...
struct SequenceLayout {
    std::size_t n_features = 0;  // N_x or N_y
    std::size_t k_main = 0;      // K per group
    std::size_t k_aux = 0;       // K'

    std::size_t n_total() const { return 1 + n_features + 2 * k_main + k_aux; }
    std::size_t k_total() const { return 2 * k_main + k_aux; }

    std::size_t input_band_end() const { return 1 + n_features; }
    std::size_t group1_begin() const { return 1 + n_features; }
    std::size_t group2_begin() const { return 1 + n_features + k_main; }
    std::size_t aux_begin() const { return 1 + n_features + 2 * k_main; }
};

struct AttentionMask {
    SequenceLayout layout;
    Modality modality = Modality::vision;
    LayoutVariant variant = LayoutVariant::special_first;
    Matrix entries;  // n_total x n_total over {0, -inf}

    bool allowed(std::size_t i, std::size_t j) const {
        return entries(i, j) == 0.0;
    }
    // Row index of the special token under this mask's variant.
    std::size_t special_position() const {
        return variant == LayoutVariant::eos_last ? layout.n_features : 0;
    }
};

AttentionMask build_vision_mask(const SequenceLayout& layout);
AttentionMask build_text_mask(const SequenceLayout& layout);

// special-first is the identity. eos-last (text only) permutes the special
// token to the end of the input band and re-evaluates the causal clause for
// the permuted order.
AttentionMask apply_layout_variant(const AttentionMask& mask, LayoutVariant variant);

// Mask over the bare input band (no prompts), used by the pretraining stage.
// Vision: all-allowed; text: causal, with the special token last under
// eos-last.
Matrix input_band_mask(Modality modality, std::size_t n_features, LayoutVariant variant);

// CSV dump: header "# modality,N,K,Kaux,variant" then n_total rows of cells
// "0" or "-inf".
std::string mask_to_csv(const AttentionMask& mask);

}  // namespace gpe
