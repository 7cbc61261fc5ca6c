#pragma once

#include <cstdint>
#include <string>

#include "gpe/encoder.hpp"
#include "gpe/prompts.hpp"

namespace gpe {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (little-endian, f32 arrays, row-major; see FORMATS.md):
//   "GPE1" | u32 version | config ints | u32 text_variant | f32 eps | f32 tau
//   | weight arrays (weight_pointers order) | vision PromptSet | text PromptSet
//   | u32 CRC32 of everything before it
void save_checkpoint(const std::string& path, const EncoderWeights& weights,
                     const PromptSet& vis_prompts, const PromptSet& txt_prompts);

struct LoadedCheckpoint {
    EncoderWeights weights;
    PromptSet vis_prompts;
    PromptSet txt_prompts;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::uint32_t crc32(const unsigned char* data, std::size_t len);

}  // namespace gpe
