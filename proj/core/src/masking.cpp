#include "gpe/masking.hpp"

#include <limits>
#include <sstream>

namespace gpe {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_layout(const SequenceLayout& layout) {
    if (layout.k_main < 1) throw DomainError("mask: k_main must be >= 1");
    if (layout.n_features < 1) throw DomainError("mask: n_features must be >= 1");
}

// The piecewise mask rules, 1-based indices. The text mask adds j <= i
// causality over the first clause; clauses 2 and 3 are shared.
bool clause_allowed(std::size_t i, std::size_t j, std::size_t n, std::size_t k, bool causal) {
    const std::size_t input_end = 1 + n;        // 1+N
    const std::size_t main_end = 1 + n + 2 * k; // 1+N+2K
    if (i <= main_end && j <= input_end && (!causal || j <= i)) return true;
    if (i > input_end && i == j && i <= main_end) return true;
    if (i > 1 + n + k && j > main_end) return true;
    return false;
}

AttentionMask build_mask(const SequenceLayout& layout, Modality modality) {
    check_layout(layout);
    const std::size_t nt = layout.n_total();
    const bool causal = modality == Modality::text;
    AttentionMask mask;
    mask.layout = layout;
    mask.modality = modality;
    mask.entries = Matrix(nt, nt);
    for (std::size_t i = 1; i <= nt; ++i)
        for (std::size_t j = 1; j <= nt; ++j)
            mask.entries(i - 1, j - 1) =
                clause_allowed(i, j, layout.n_features, layout.k_main, causal) ? 0.0 : kNegInf;
    return mask;
}

}  // namespace

AttentionMask build_vision_mask(const SequenceLayout& layout) {
    return build_mask(layout, Modality::vision);
}

AttentionMask build_text_mask(const SequenceLayout& layout) {
    return build_mask(layout, Modality::text);
}

AttentionMask apply_layout_variant(const AttentionMask& mask, LayoutVariant variant) {
    if (variant == LayoutVariant::special_first) return mask;
    if (mask.modality != Modality::text)
        throw DomainError("apply_layout_variant: eos-last applies to text masks only");

    const SequenceLayout& layout = mask.layout;
    const std::size_t nt = layout.n_total();
    const std::size_t n = layout.n_features;

    // 0-based permutation: special 0 -> n, features 1..n -> 0..n-1.
    auto perm = [n](std::size_t p) { return p == 0 ? n : (p <= n ? p - 1 : p); };

    AttentionMask out = mask;
    out.variant = LayoutVariant::eos_last;
    for (std::size_t i = 0; i < nt; ++i)
        for (std::size_t j = 0; j < nt; ++j)
            out.entries(perm(i), perm(j)) = mask.entries(i, j);

    // Re-evaluate the causal clause for the permuted order: rows up to the end
    // of the main-prompt bands may see input columns only up to their own
    // position.
    const std::size_t input_end = 1 + n;
    const std::size_t main_end = 1 + n + 2 * layout.k_main;
    for (std::size_t i = 1; i <= main_end; ++i)
        for (std::size_t j = 1; j <= input_end; ++j)
            out.entries(i - 1, j - 1) = (j <= i) ? 0.0 : kNegInf;
    return out;
}

Matrix input_band_mask(Modality modality, std::size_t n_features, LayoutVariant variant) {
    const std::size_t nt = 1 + n_features;
    Matrix m(nt, nt);
    if (modality == Modality::text) {
        // Causal over the band. Under special-first the special token sits at
        // position 0, under eos-last at position nt-1; either way causality is
        // positional, so the matrix is the same.
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t j = 0; j < nt; ++j)
                if (j > i) m(i, j) = kNegInf;
    }
    (void)variant;
    return m;
}

std::string mask_to_csv(const AttentionMask& mask) {
    std::ostringstream os;
    os << "# " << (mask.modality == Modality::vision ? "vision" : "text") << ","
       << mask.layout.n_features << "," << mask.layout.k_main << "," << mask.layout.k_aux << ","
       << (mask.variant == LayoutVariant::special_first ? "special-first" : "eos-last") << "\n";
    const std::size_t nt = mask.layout.n_total();
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            if (j) os << ",";
            os << (mask.allowed(i, j) ? "0" : "-inf");
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace gpe
