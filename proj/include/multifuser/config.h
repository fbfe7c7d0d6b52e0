#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace multifuser {

enum class FusionStrategy { kEarly, kLate, kCascade, kParallel };

std::string to_string(FusionStrategy strategy);
FusionStrategy parse_fusion_strategy(const std::string& text);

struct ModelConfig {
    std::size_t modalities = 3;  // M
    std::size_t frames = 4;      // T
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t channels = 3;
    std::size_t patch = 8;
    std::size_t embed_dim = 32;  // D
    std::size_t heads = 4;
    std::size_t layers = 4;             // N
    std::size_t synth_layers = 2;       // K, synthesizer lives in layers N-K .. N-1
    std::size_t num_classes = 4;
    std::size_t kernel = 3;             // depthwise kernel side
    FusionStrategy fusion = FusionStrategy::kParallel;
    std::uint64_t seed = 0;

    std::size_t grid_rows() const { return height / patch; }
    std::size_t grid_cols() const { return width / patch; }
    std::size_t spatial() const { return grid_rows() * grid_cols(); }
    std::size_t patch_dim() const { return patch * patch * channels; }
    std::size_t head_dim() const { return embed_dim / heads; }
    bool has_synthesizer(std::size_t layer) const { return layer + synth_layers >= layers; }

    // Throws ConfigError naming the first violated constraint.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Smallest configuration used by the gradient suite.
ModelConfig tiny_config();

}  // namespace multifuser
