#pragma once

#include "multifuser/config.h"
#include "multifuser/layers.h"
#include "multifuser/tensor.h"

namespace multifuser {

struct Grid {
    std::size_t rows = 0;  // Hp
    std::size_t cols = 0;  // Wp
    std::size_t size() const { return rows * cols; }
    bool operator==(const Grid&) const = default;
};

// Activation of one layer: patch tokens [M, S, T, D], one class token per
// modality [M, D], and the synthesizer token [D] once it exists.
struct TokenState {
    Tensor patches;
    Tensor class_tokens;
    Tensor synthesizer;
    Grid grid;

    std::size_t modalities() const { return patches.extent(0); }
    std::size_t spatial() const { return patches.extent(1); }
    std::size_t frames() const { return patches.extent(2); }
    std::size_t dim() const { return patches.extent(3); }
};

// pixels [M, T, H, W, C] -> [M, S, T, P*P*C]; patch s = row * Wp + col and
// each vector is the row-major flattening of its P x P x C block.
Tensor patchify(const Tensor& pixels, const ModelConfig& config);
// Exact inverse of patchify.
Tensor assemble(const Tensor& patches, const ModelConfig& config);

struct EmbeddingParams {
    Tensor weight;        // [M, P*P*C, D], one projection per modality
    Tensor position;      // [S, T, D], shared across modalities
    Tensor class_tokens;  // [M, D] (or [1, D] for a single shared token)

    static EmbeddingParams create(const ModelConfig& config, std::size_t class_token_count, ParamInit& init);
    void collect(ParamList& out, const std::string& prefix) const;
};

// X0[m, s, t] = patches[m, s, t] W(m) + pos(s, t). No synthesizer yet.
TokenState embed(const Tensor& patches, const EmbeddingParams& params, Grid grid);

}  // namespace multifuser
