#include "multifuser/patch_embedding.h"

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

Tensor patchify(const Tensor& pixels, const ModelConfig& config) {
    const Shape expected{config.modalities, config.frames, config.height, config.width, config.channels};
    if (pixels.shape() != expected) {
        throw ConfigError("patchify: clip shape " + shape_str(pixels.shape()) + " does not match config " +
                          shape_str(expected));
    }
    const std::size_t P = config.patch;
    Tensor blocks = reshape(pixels, {config.modalities, config.frames, config.grid_rows(), P, config.grid_cols(), P,
                                     config.channels});
    Tensor ordered = permute(blocks, {0, 2, 4, 1, 3, 5, 6});
    return reshape(ordered, {config.modalities, config.spatial(), config.frames, config.patch_dim()});
}

Tensor assemble(const Tensor& patches, const ModelConfig& config) {
    const Shape expected{config.modalities, config.spatial(), config.frames, config.patch_dim()};
    if (patches.shape() != expected) {
        throw ConfigError("assemble: patch shape " + shape_str(patches.shape()) + " does not match config " +
                          shape_str(expected));
    }
    const std::size_t P = config.patch;
    Tensor blocks = reshape(patches, {config.modalities, config.grid_rows(), config.grid_cols(), config.frames, P, P,
                                      config.channels});
    Tensor ordered = permute(blocks, {0, 3, 1, 4, 2, 5, 6});
    return reshape(ordered, {config.modalities, config.frames, config.height, config.width, config.channels});
}

EmbeddingParams EmbeddingParams::create(const ModelConfig& config, std::size_t class_token_count, ParamInit& init) {
    EmbeddingParams p;
    p.weight = init.normal({config.modalities, config.patch_dim(), config.embed_dim});
    p.position = init.normal({config.spatial(), config.frames, config.embed_dim});
    p.class_tokens = init.normal({class_token_count, config.embed_dim});
    return p;
}

void EmbeddingParams::collect(ParamList& out, const std::string& prefix) const {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".position", position});
    out.push_back({prefix + ".class_tokens", class_tokens});
}

TokenState embed(const Tensor& patches, const EmbeddingParams& params, Grid grid) {
    if (patches.dim() != 4) throw DimensionError("embed: patches must be [M, S, T, P*P*C], got " + shape_str(patches.shape()));
    const std::size_t M = patches.extent(0), S = patches.extent(1), T = patches.extent(2), F = patches.extent(3);
    if (params.weight.shape().size() != 3 || params.weight.extent(0) != M || params.weight.extent(1) != F) {
        throw DimensionError("embed: weight " + shape_str(params.weight.shape()) + " incompatible with patches " +
                             shape_str(patches.shape()));
    }
    if (grid.size() != S) throw ConfigError("embed: grid does not cover S patches");
    const std::size_t D = params.weight.extent(2);
    Tensor projected = matmul(reshape(patches, {M, S * T, F}), params.weight);
    TokenState state;
    state.patches = add_suffix(reshape(projected, {M, S, T, D}), params.position);
    state.class_tokens = params.class_tokens;
    state.grid = grid;
    return state;
}

}  // namespace multifuser
