#include "multifuser/decomposition.h"

#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

Tensor intra_view(const Tensor& patches) {
    if (patches.dim() != 4) throw DimensionError("intra_view: expected [M, S, T, D], got " + shape_str(patches.shape()));
    const std::size_t M = patches.extent(0), S = patches.extent(1), T = patches.extent(2), D = patches.extent(3);
    return reshape(permute(patches, {2, 1, 0, 3}), {T * S, M, D});
}

Tensor intra_unview(const Tensor& groups, std::size_t spatial, std::size_t frames) {
    if (groups.dim() != 3 || groups.extent(0) != spatial * frames) {
        throw DimensionError("intra_unview: expected [T*S, M, D], got " + shape_str(groups.shape()));
    }
    const std::size_t M = groups.extent(1), D = groups.extent(2);
    return permute(reshape(groups, {frames, spatial, M, D}), {2, 1, 0, 3});
}

Tensor inter_view(const Tensor& patches) {
    if (patches.dim() != 4) throw DimensionError("inter_view: expected [M, S, T, D], got " + shape_str(patches.shape()));
    return permute(patches, {0, 2, 1, 3});
}

Tensor inter_unview(const Tensor& frames) {
    if (frames.dim() != 4) throw DimensionError("inter_unview: expected [M, T, S, D], got " + shape_str(frames.shape()));
    return permute(frames, {0, 2, 1, 3});
}

std::vector<IntraGroup> intra_decompose(const TokenState& x) {
    const std::size_t S = x.spatial(), T = x.frames();
    Tensor view = intra_view(x.patches);
    std::vector<IntraGroup> groups;
    groups.reserve(S * T);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s) groups.push_back({select(view, 0, t * S + s), s, t});
    return groups;
}

std::vector<InterFrame> inter_decompose(const TokenState& x) {
    const std::size_t M = x.modalities(), T = x.frames();
    Tensor view = inter_view(x.patches);
    std::vector<InterFrame> frames;
    frames.reserve(M * T);
    for (std::size_t m = 0; m < M; ++m) {
        Tensor per_modality = select(view, 0, m);
        Tensor cls = select(x.class_tokens, 0, m);
        for (std::size_t t = 0; t < T; ++t) frames.push_back({select(per_modality, 0, t), m, t, cls});
    }
    return frames;
}

TokenState recompose(const std::vector<IntraGroup>& groups, const TokenState& like) {
    const std::size_t M = like.modalities(), S = like.spatial(), T = like.frames(), D = like.dim();
    std::vector<Tensor> ordered(S * T);
    for (const IntraGroup& g : groups) {
        if (g.spatial >= S || g.frame >= T) throw ContractError("recompose: group index out of range");
        if (g.tokens.shape() != Shape{M, D}) {
            throw DimensionError("recompose: group tokens " + shape_str(g.tokens.shape()) + ", expected [M, D]");
        }
        Tensor& slot = ordered[g.frame * S + g.spatial];
        if (slot.defined()) {
            throw ContractError("recompose: duplicate group (s=" + std::to_string(g.spatial) +
                                ", t=" + std::to_string(g.frame) + ")");
        }
        slot = g.tokens;
    }
    for (std::size_t j = 0; j < ordered.size(); ++j) {
        if (!ordered[j].defined()) {
            throw ContractError("recompose: missing group (s=" + std::to_string(j % S) + ", t=" + std::to_string(j / S) +
                                ")");
        }
    }
    TokenState out = like;
    out.patches = intra_unview(stack(ordered, 0), S, T);
    return out;
}

TokenState recompose(const std::vector<InterFrame>& frames, const TokenState& like) {
    const std::size_t M = like.modalities(), S = like.spatial(), T = like.frames(), D = like.dim();
    std::vector<Tensor> ordered(M * T);
    for (const InterFrame& f : frames) {
        if (f.modality >= M || f.frame >= T) throw ContractError("recompose: frame index out of range");
        if (f.tokens.shape() != Shape{S, D}) {
            throw DimensionError("recompose: frame tokens " + shape_str(f.tokens.shape()) + ", expected [S, D]");
        }
        Tensor& slot = ordered[f.modality * T + f.frame];
        if (slot.defined()) {
            throw ContractError("recompose: duplicate frame (m=" + std::to_string(f.modality) +
                                ", t=" + std::to_string(f.frame) + ")");
        }
        slot = f.tokens;
    }
    for (std::size_t j = 0; j < ordered.size(); ++j) {
        if (!ordered[j].defined()) {
            throw ContractError("recompose: missing frame (m=" + std::to_string(j / T) + ", t=" + std::to_string(j % T) +
                                ")");
        }
    }
    TokenState out = like;
    out.patches = inter_unview(reshape(stack(ordered, 0), {M, T, S, D}));
    return out;
}

}  // namespace multifuser
