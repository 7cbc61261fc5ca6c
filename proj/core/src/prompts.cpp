#include "gpe/prompts.hpp"

namespace gpe {

PromptSet init_prompt_set(const Matrix& special_token_embedding, std::size_t k_main,
                          std::size_t k_aux, RngState& rng, Modality modality, double sigma) {
    if (special_token_embedding.rows != 1)
        throw ShapeError("init_prompt_set: special token must be 1 x d");
    if (k_main < 1) throw DomainError("init_prompt_set: k_main must be >= 1");
    const std::size_t d = special_token_embedding.cols;
    PromptSet ps;
    ps.modality = modality;
    auto perturbed_copies = [&](std::size_t k) {
        Matrix m(k, d);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < d; ++j)
                m(i, j) = special_token_embedding(0, j) + sigma * normal(rng);
        return m;
    };
    ps.group1 = perturbed_copies(k_main);
    ps.group2 = perturbed_copies(k_main);
    ps.auxiliary = random_normal(rng, k_aux, d, sigma);
    return ps;
}

TokenSequence assemble_sequence(const Matrix& special, const Matrix& features,
                                const PromptSet& prompts) {
    if (special.rows != 1) throw ShapeError("assemble_sequence: special must be 1 x d");
    const std::size_t d = special.cols;
    if (features.cols != d || (prompts.k_main() && prompts.group1.cols != d) ||
        (prompts.k_aux() && prompts.auxiliary.cols != d))
        throw ShapeError("assemble_sequence: width mismatch");
    TokenSequence seq;
    seq.layout = SequenceLayout{features.rows, prompts.k_main(), prompts.k_aux()};
    Matrix out(seq.layout.n_total(), d);
    std::size_t r = 0;
    auto put = [&](const Matrix& m) {
        for (std::size_t i = 0; i < m.rows; ++i, ++r)
            for (std::size_t j = 0; j < d; ++j) out(r, j) = m(i, j);
    };
    put(special);
    put(features);
    put(prompts.group1);
    put(prompts.group2);
    put(prompts.auxiliary);
    seq.tokens = std::move(out);
    return seq;
}

}  // namespace gpe
