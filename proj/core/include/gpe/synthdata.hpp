#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gpe/matrix.hpp"
#include "gpe/rng.hpp"

namespace gpe {

// Token id 0 is the fixed template token ("A photo of a ..."); class c maps to
// token id 1 + c.
constexpr std::size_t kTemplateTokenId = 0;
constexpr std::size_t kReservedTokenIds = 1;

struct TaskSpec {
    std::size_t n_classes = 8;
    std::size_t n_x = 8;          // tokens per image
    std::size_t d_v = 32;         // token width
    double noise_sigma = 0.25;
    std::size_t samples_per_class = 48;
    std::uint64_t seed = 42;
    double base_fraction = 0.5;   // |base| = ceil(fraction * n_classes)
    std::size_t vocab = 64;
};

enum class SplitTag { base, novel };

struct Sample {
    Matrix image_tokens;  // n_x x d_v
    std::size_t class_id = 0;
    SplitTag split = SplitTag::base;
};

struct Dataset {
    TaskSpec spec;
    std::vector<Sample> samples;               // class-major, deterministic order
    std::vector<Matrix> prototypes;            // per class, n_x x d_v, unit-norm rows
    std::size_t base_class_count = 0;          // classes [0, base_class_count) are base

    std::size_t class_token_id(std::size_t class_id) const {
        return kReservedTokenIds + class_id;
    }
    // [template x (n_y - 1), class token]
    std::vector<std::size_t> class_token_sequence(std::size_t class_id, std::size_t n_y) const;
    bool is_base_class(std::size_t class_id) const { return class_id < base_class_count; }
};

Dataset generate_task(const TaskSpec& spec);

// Exactly `shots` sample indices per base class, deterministic in the seed.
std::vector<std::size_t> few_shot_sample(const Dataset& dataset, std::size_t shots,
                                         std::uint64_t seed);

// "GPEDATA v1, ..." header then little-endian f32 tokens and u32 labels.
void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace gpe
