#pragma once

#include <vector>

#include "multifuser/patch_embedding.h"

namespace multifuser {

// The M patch tokens sharing spatial index s and frame t.
struct IntraGroup {
    Tensor tokens;  // [M, D]
    std::size_t spatial = 0;
    std::size_t frame = 0;
};

// The S patch tokens of frame t of modality m, plus that modality's class
// token riding along.
struct InterFrame {
    Tensor tokens;  // [S, D]
    std::size_t modality = 0;
    std::size_t frame = 0;
    Tensor class_slot;  // [D]
};

// S*T groups ordered row-major over (t, s).
std::vector<IntraGroup> intra_decompose(const TokenState& x);
// M*T frames ordered row-major over (m, t).
std::vector<InterFrame> inter_decompose(const TokenState& x);

// Inverses. Every index must appear exactly once; class tokens and the
// synthesizer are taken from `like`.
TokenState recompose(const std::vector<IntraGroup>& groups, const TokenState& like);
TokenState recompose(const std::vector<InterFrame>& frames, const TokenState& like);

// Batched forms of the two views used inside layers.
// [M, S, T, D] -> [T*S, M, D] (group j = t*S + s)
Tensor intra_view(const Tensor& patches);
// [T*S, M, D] -> [M, S, T, D]
Tensor intra_unview(const Tensor& groups, std::size_t spatial, std::size_t frames);
// [M, S, T, D] -> [M, T, S, D]
Tensor inter_view(const Tensor& patches);
// [M, T, S, D] -> [M, S, T, D]
Tensor inter_unview(const Tensor& frames);

}  // namespace multifuser
